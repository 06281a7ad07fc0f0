#include "sde.hpp"

#include <cmath>
#include <string>

namespace rblab {

SolutionPath euler_maruyama(double x0, double lambda, double sigma,
                            const DriftPoly& drift, const SamplePath& noise_path) {
    noise_path.validate();
    require(std::isfinite(x0) && std::isfinite(lambda), ErrorCode::invalid_argument,
            "x0 and lambda must be finite");
    require(std::isfinite(sigma) && sigma >= 0.0, ErrorCode::range_error,
            "sigma must be non-negative");

    const std::int64_t n = noise_path.n_steps;
    const double dt = 1.0 / static_cast<double>(n);
    std::vector<double> vals(static_cast<std::size_t>(n) + 1);
    vals[0] = x0;
    double x = x0;
    for (std::int64_t k = 0; k < n; ++k) {
        double dy = noise_path.values[static_cast<std::size_t>(k) + 1] -
                    noise_path.values[static_cast<std::size_t>(k)];
        x = x + lambda * drift(x) * dt + sigma * dy;
        if (!(std::abs(x) <= kBlowupGuard))
            fail(ErrorCode::numerical_blowup,
                 "Euler path exceeded |X| = 1e6 at step " + std::to_string(k + 1) +
                     "; drift inadmissible or mesh too coarse");
        vals[static_cast<std::size_t>(k) + 1] = x;
    }
    return SolutionPath{SamplePath(n, std::move(vals)), noise_path, x0, lambda,
                        sigma, drift};
}

SolutionPath euler_maruyama(const ModelSpec& model, const SamplePath& noise_path) {
    require(noise_path.n_steps == model.fine_steps, ErrorCode::incompatible_grid,
            "noise path grid does not match fine_steps");
    return euler_maruyama(model.x0, model.lambda, model.sigma, model.drift,
                          noise_path);
}

SamplePath downsample(const SamplePath& path, std::int64_t n_obs) {
    require(n_obs >= 1, ErrorCode::invalid_argument, "n_obs must be positive");
    require(path.n_steps % n_obs == 0, ErrorCode::incompatible_grid,
            "path length " + std::to_string(path.n_steps) +
                " is not divisible by n_obs " + std::to_string(n_obs));
    const std::int64_t stride = path.n_steps / n_obs;
    std::vector<double> vals(static_cast<std::size_t>(n_obs) + 1);
    for (std::int64_t i = 0; i <= n_obs; ++i)
        vals[static_cast<std::size_t>(i)] =
            path.values[static_cast<std::size_t>(i * stride)];
    return SamplePath(n_obs, std::move(vals));
}

} // namespace rblab
