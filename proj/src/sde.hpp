#pragma once

#include "types.hpp"

namespace rblab {

// Guard against runaway trajectories; exceeding it raises NumericalBlowup.
constexpr double kBlowupGuard = 1e6;

// Explicit Euler-Maruyama step X_{k+1} = X_k + lambda f(X_k) dt + sigma dY_k
// on the grid carried by noise_path.  Exact for constant drift.
SolutionPath euler_maruyama(double x0, double lambda, double sigma,
                            const DriftPoly& drift, const SamplePath& noise_path);

SolutionPath euler_maruyama(const ModelSpec& model, const SamplePath& noise_path);

// Keep every (n_steps / n_obs)-th point.  Requires divisibility.
SamplePath downsample(const SamplePath& path, std::int64_t n_obs);

} // namespace rblab
