#pragma once

#include "types.hpp"

namespace rblab {

// Exact-covariance fractional Brownian motion on the uniform grid of [0, 1]:
// circulant embedding of the fractional Gaussian noise autocovariance, with a
// Hosking (Durbin-Levinson) fallback if the embedding produces eigenvalues
// below -1e-9 * max (does not happen for H in (1/2, 1) at practical sizes).
SamplePath simulate_fbm(const FbmSpec& spec);

// The Hosking fallback as a standalone sampler (exact but O(n^2)); exposed so
// tests can exercise the fallback path directly.
SamplePath simulate_fbm_hosking(const FbmSpec& spec);

// Unit-spacing fGn autocovariance 0.5(|k+1|^2H - 2|k|^2H + |k-1|^2H).
double fgn_autocov(double hurst, std::int64_t lag);

} // namespace rblab
