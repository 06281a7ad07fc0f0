#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "estimators.hpp"
#include "rosenblatt.hpp"
#include "types.hpp"

namespace rblab {

// Which estimators a campaign evaluates.
struct EstimatorSet {
    bool diffusion = true;
    bool lambda_known = true;
    bool lambda_plugin = true;

    bool any() const { return diffusion || lambda_known || lambda_plugin; }
};

struct CalibrationRequest {
    std::int64_t n_steps = 8192;
    std::int64_t inner_resolution = 0;  // 0: default ladder
    std::int64_t replications = 200;
    std::uint64_t master_seed = 0x9E3779B97F4A7C15ULL;
};

// d(H) source: a ready table (override) or a calibration to run up front.
struct DhSource {
    enum class Kind { override_table, calibrate };
    Kind kind = Kind::calibrate;
    DhTable table;                   // override_table
    CalibrationRequest calibration;  // calibrate
};

struct ExperimentConfig {
    // Model template; the noise seed inside is ignored and replaced by the
    // per-replication seed.
    double x0 = 0.5;
    double lambda = 5.0;
    double sigma = 1.0;
    DriftPoly drift{std::vector<double>{0.0, -1.0}};
    bool rosenblatt_noise = true;  // false: fractional Brownian motion
    double hurst = 0.75;
    std::int64_t fine_steps = 8192;
    std::int64_t inner_resolution = 0;  // Rosenblatt only; 0: default ladder
    std::int64_t synthesis_budget = kDefaultSynthesisBudget;  // M^2*N ceiling

    std::vector<std::int64_t> obs_sizes{512, 2048, 8192};
    std::int64_t replications = 200;
    std::uint64_t master_seed = 1;
    EstimatorSet estimators;
    DhSource d_h;

    void validate() const;
};

// One estimator evaluation on one (replication, N) cell.
struct CellOutcome {
    std::int64_t n;
    std::string estimator;  // h_hat | sigma_hat | lambda_known | lambda_plugin
    double estimate;        // NaN when !ok
    bool ok;
    std::string error_tag;  // error code name when !ok
};

struct ReplicationResult {
    std::int64_t index;
    std::uint64_t seed;
    std::vector<CellOutcome> cells;
};

struct ExperimentRun {
    DhTable d_table;           // the table every estimator used
    double d_value_used;       // at the model's H
    std::vector<ReplicationResult> results;
};

ExperimentRun run_experiment(const ExperimentConfig& config);

// Truth per estimator cell for error aggregation.
struct TruthValues {
    double h;
    double sigma;
    double lambda;

    double for_estimator(const std::string& name) const;
};

struct SummaryCell {
    std::string estimator;
    std::int64_t n;
    std::int64_t count;   // successes
    std::int64_t failed;
    double rmse;
    double bias;
    double median;
    double q1;
    double q3;
    double skewness;
    double truth;
};

struct SummaryTable {
    std::vector<SummaryCell> cells;  // sorted by (estimator, n)

    const SummaryCell* find(const std::string& estimator, std::int64_t n) const;
};

// Population-variance convention, so rmse^2 == bias^2 + var exactly.
// Quartiles use linear interpolation (type 7).  EmptyCell if any cell has
// fewer than 2 successes.
SummaryTable summarize(const std::vector<ReplicationResult>& results,
                       const TruthValues& truth);

// OLS slope of log(metric) against log(N) over a cell ladder.
double fit_loglog_slope(const SummaryTable& table, const std::string& estimator);

// (Gaussian quantile, sample quantile) pairs at positions (i - 0.5)/R for the
// standardized estimates of one cell.
std::vector<std::pair<double, double>> qq_data(
    const std::vector<ReplicationResult>& results, const std::string& estimator,
    std::int64_t n);

} // namespace rblab
