#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "types.hpp"

namespace rblab {

// ---- 2-variation statistics ------------------------------------------------

struct TwoVariationStats {
    double v_n;      // (1/N) sum_i (|dX_i|^2 N^{2H} - 1), always >= -1
    double sum_sq;   // sum_i |dX_i|^2
    std::int64_t n;
};

TwoVariationStats two_variation(const SamplePath& path, Hurst h);

// log( (1/N) sum |dX_i|^2 / (sigma^2 N^{-2H}) ).  DegeneratePath when all
// increments vanish.
double log_two_variation(const SamplePath& path, Hurst h, double sigma);

// ---- joint (H, sigma) estimator ---------------------------------------------

struct DiffusionEstimate {
    double h_hat;
    double sigma_hat;
    std::int64_t n;
    double sum_sq_full;  // S_N
    double sum_sq_half;  // S_{N/2}, every second observation
};

// Closed forms
//   H^ = 1/2 - (1/2) log2(S_N / S_{N/2})
//   s^ = exp{ (1/(2 log 2)) [ log(2/N) log S_N + log N log S_{N/2} ] }
// computed in base 2 so that dyadic exact cases stay exact.
DiffusionEstimate estimate_diffusion(const SamplePath& path);

// ---- normalized partial 2-variations ----------------------------------------

enum class Interval { first_half, second_half, full };

// W^{[0,1/2]}, W^{[1/2,1]} or their sum: (N^{1-H}/(4 d)) (1/N) sum_{range}
// (|dX_i|^2/(sigma^2 N^{-2H}) - 1).  The full-interval value is computed as
// first + second so the additivity identity holds exactly.
double w_statistic(const SamplePath& path, Interval interval, Hurst h,
                   double sigma, double d_h);

// Riemann sums (sum_{i<=N/2} f(X(i/N)) / N, sum_{i>N/2} f(X(i/N)) / N).
std::pair<double, double> riemann_drift_sums(const SamplePath& path,
                                             const DriftPoly& drift);

// ---- deceleration -----------------------------------------------------------

struct DecelerationParams {
    double delta;
    std::int64_t k;    // floor(N / N^delta)
    double h_n;        // k / N
    std::int64_t n_n;  // floor(1 / h_n)
    std::int64_t n;    // grid the parameters were derived from
};

// k = floor(N/N^delta), h = k/N, n_n = floor(N/k).  InsufficientResolution
// when fewer than 4 decelerated observations remain.
DecelerationParams deceleration_params(std::int64_t n, double delta);

// Optimal deceleration rate: 2(1-H) on (1/2, 3/4], 1/2 on (3/4, 1).
double delta_opt(Hurst h);

// Upper envelope of admissible convergence rates: 2(1-H)(H-1/2) on
// (1/2, 3/4], (1-H)/2 on (3/4, 1).  Strict upper bound for callers.
double rate_a_opt(Hurst h);

enum class WForm { log_form, plain };

// 2-variation on the subsampled grid {X(i h_N)}.  The log form is only
// defined on the full interval; the plain form mirrors w_statistic on the
// h_N-grid and supports halves.
double decelerated_w(const SamplePath& path, Interval interval,
                     const DecelerationParams& params, Hurst h_used,
                     double sigma_used, double d_h, WForm form);

// ---- drift estimators --------------------------------------------------------

enum class DriftMode { known_parameters, plug_in };

struct PluginDiagnostics {
    DiffusionEstimate diffusion;
    double h_clamped;
    double delta;
    DecelerationParams params;
    double d_value;
    double w_first;
    double w_second;
};

struct DriftEstimate {
    double lambda_hat;
    double regressor[2];  // Z components
    double response[2];   // U components
    DriftMode mode;
    std::optional<PluginDiagnostics> plugin;
};

// Least squares on (U_N, Z_N) with known (H, sigma).  sigma == 0 is the
// noiseless mode: the W correction is dropped.
DriftEstimate estimate_lambda_known(const SamplePath& path, const DriftPoly& drift,
                                    Hurst h, double sigma, double d_h);

// ---- d(H) source -------------------------------------------------------------

// The normalization constant d(H) is treated as configuration: an override
// table or a Monte Carlo calibration, log-linearly interpolated in H and
// clamped outside the table range.
class DhTable {
public:
    DhTable() = default;
    static DhTable single(double h, double d);
    static DhTable from_points(std::vector<std::pair<double, double>> points);

    double lookup(double h) const;
    bool empty() const { return points_.empty(); }
    const std::vector<std::pair<double, double>>& points() const { return points_; }

private:
    std::vector<std::pair<double, double>> points_;  // (h, d), ascending in h
};

// Optimized plug-in estimator: estimate (H, sigma) on the full grid, pick
// delta_opt(H^) with H^ clamped to (0.501, 0.999), decelerate, plain-form W
// on both halves, Riemann sums on the decelerated grid, least squares.
DriftEstimate estimate_lambda_plugin(const SamplePath& path, const DriftPoly& drift,
                                     const DhTable& d_table);

// Calibration oracle from Theorem-2.1-type convergence: median over paths of
// N^{1-H} V_N / (4 Z(1)).
double calibrate_d_from_paths(const std::vector<SamplePath>& paths, Hurst h);

struct DhCalibration {
    double d;
    std::int64_t replications;
    std::int64_t n_steps;
    std::int64_t inner_resolution;
};

DhCalibration calibrate_d(Hurst h, std::int64_t n_steps, std::int64_t inner_resolution,
                          std::int64_t replications, std::uint64_t master_seed,
                          std::int64_t budget = 22'000'000'000'000LL);

} // namespace rblab
