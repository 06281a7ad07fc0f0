#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>

#include "fbm.hpp"
#include "rng.hpp"
#include "rosenblatt.hpp"
#include "sde.hpp"
#include "stats_util.hpp"
#include "threads.hpp"

namespace rblab {

void ExperimentConfig::validate() const {
    Hurst check_h(hurst);
    require(std::isfinite(x0) && std::isfinite(lambda), ErrorCode::invalid_argument,
            "x0 and lambda must be finite");
    require(sigma >= 0.0 && std::isfinite(sigma), ErrorCode::range_error,
            "sigma must be non-negative");
    require(fine_steps >= 2, ErrorCode::invalid_argument, "fine_steps too small");
    require(!obs_sizes.empty(), ErrorCode::invalid_argument,
            "obs_sizes must not be empty");
    for (std::size_t i = 0; i < obs_sizes.size(); ++i) {
        std::int64_t n = obs_sizes[i];
        require(n >= 4, ErrorCode::invalid_argument, "observation sizes must be >= 4");
        require(n % 2 == 0, ErrorCode::odd_sample_size,
                "observation sizes must be even");
        require(fine_steps % n == 0, ErrorCode::incompatible_grid,
                "fine_steps must be divisible by every observation size");
        require(i == 0 || obs_sizes[i - 1] < n, ErrorCode::invalid_argument,
                "obs_sizes must be strictly increasing");
    }
    require(replications >= 1, ErrorCode::invalid_argument,
            "replications must be positive");
    require(synthesis_budget >= 1, ErrorCode::invalid_argument,
            "synthesis_budget must be positive");
    require(estimators.any(), ErrorCode::invalid_argument,
            "estimator set must not be empty");
    if (!rosenblatt_noise)
        require(inner_resolution == 0, ErrorCode::invalid_argument,
                "inner_resolution only applies to Rosenblatt noise");
}

double TruthValues::for_estimator(const std::string& name) const {
    if (name == "h_hat") return h;
    if (name == "sigma_hat") return sigma;
    if (name == "lambda_known" || name == "lambda_plugin") return lambda;
    fail(ErrorCode::invalid_argument, "unknown estimator cell '" + name + "'");
}

namespace {

DhTable resolve_d_table(const ExperimentConfig& config) {
    if (config.d_h.kind == DhSource::Kind::override_table) {
        require(!config.d_h.table.empty(), ErrorCode::missing_calibration,
                "override d(H) source is empty");
        return config.d_h.table;
    }
    CalibrationRequest cal = config.d_h.calibration;
    std::int64_t m = cal.inner_resolution;
    if (m == 0) m = default_inner_resolution(cal.n_steps, config.synthesis_budget);
    DhCalibration res =
        calibrate_d(Hurst(config.hurst), cal.n_steps, m, cal.replications,
                    cal.master_seed, config.synthesis_budget);
    return DhTable::single(config.hurst, res.d);
}

void record_error(ReplicationResult& rep, std::int64_t n,
                  const EstimatorSet& set, const Error& err) {
    auto add = [&](const char* name) {
        rep.cells.push_back(CellOutcome{
            n, name, std::numeric_limits<double>::quiet_NaN(), false,
            err.code_name()});
    };
    if (set.diffusion) {
        add("h_hat");
        add("sigma_hat");
    }
    if (set.lambda_known) add("lambda_known");
    if (set.lambda_plugin) add("lambda_plugin");
}

} // namespace

ExperimentRun run_experiment(const ExperimentConfig& config) {
    config.validate();
    Hurst h(config.hurst);
    const std::int64_t R = config.replications;

    DhTable d_table = resolve_d_table(config);
    const double d_value = d_table.lookup(config.hurst);

    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(R));
    for (std::int64_t r = 0; r < R; ++r)
        seeds[static_cast<std::size_t>(r)] =
            seed_for_replication(config.master_seed, static_cast<std::uint64_t>(r));
    std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
    require(distinct.size() == seeds.size(), ErrorCode::invalid_argument,
            "replication seeds collide; change master_seed");

    // Noise synthesis, batched for the Rosenblatt engine.
    std::vector<SamplePath> noise(static_cast<std::size_t>(R));
    if (config.rosenblatt_noise) {
        std::int64_t m = config.inner_resolution;
        if (m == 0) m = default_inner_resolution(config.fine_steps, config.synthesis_budget);
        noise = simulate_rosenblatt_batch(h, config.fine_steps, m, seeds,
                                          config.synthesis_budget);
    } else {
        parallel_for_blocks(R, 1, [&](std::int64_t r0, std::int64_t r1) {
            for (std::int64_t r = r0; r < r1; ++r)
                noise[static_cast<std::size_t>(r)] = simulate_fbm(
                    FbmSpec(h, config.fine_steps, seeds[static_cast<std::size_t>(r)]));
        });
    }

    std::vector<ReplicationResult> results(static_cast<std::size_t>(R));
    parallel_for_blocks(R, 1, [&](std::int64_t r0, std::int64_t r1) {
        for (std::int64_t r = r0; r < r1; ++r) {
            ReplicationResult& rep = results[static_cast<std::size_t>(r)];
            rep.index = r;
            rep.seed = seeds[static_cast<std::size_t>(r)];

            std::optional<SolutionPath> sol;
            try {
                sol = euler_maruyama(config.x0, config.lambda, config.sigma,
                                     config.drift, noise[static_cast<std::size_t>(r)]);
            } catch (const Error& err) {
                for (std::int64_t n : config.obs_sizes)
                    record_error(rep, n, config.estimators, err);
            }
            if (!sol) continue;

            for (std::int64_t n : config.obs_sizes) {
                SamplePath obs = downsample(sol->solution, n);
                if (config.estimators.diffusion) {
                    try {
                        DiffusionEstimate de = estimate_diffusion(obs);
                        rep.cells.push_back(CellOutcome{n, "h_hat", de.h_hat, true, ""});
                        rep.cells.push_back(
                            CellOutcome{n, "sigma_hat", de.sigma_hat, true, ""});
                    } catch (const Error& err) {
                        rep.cells.push_back(CellOutcome{
                            n, "h_hat", std::numeric_limits<double>::quiet_NaN(),
                            false, err.code_name()});
                        rep.cells.push_back(CellOutcome{
                            n, "sigma_hat", std::numeric_limits<double>::quiet_NaN(),
                            false, err.code_name()});
                    }
                }
                if (config.estimators.lambda_known) {
                    try {
                        DriftEstimate le = estimate_lambda_known(
                            obs, config.drift, h, config.sigma, d_value);
                        rep.cells.push_back(
                            CellOutcome{n, "lambda_known", le.lambda_hat, true, ""});
                    } catch (const Error& err) {
                        rep.cells.push_back(CellOutcome{
                            n, "lambda_known",
                            std::numeric_limits<double>::quiet_NaN(), false,
                            err.code_name()});
                    }
                }
                if (config.estimators.lambda_plugin) {
                    try {
                        DriftEstimate le =
                            estimate_lambda_plugin(obs, config.drift, d_table);
                        rep.cells.push_back(
                            CellOutcome{n, "lambda_plugin", le.lambda_hat, true, ""});
                    } catch (const Error& err) {
                        rep.cells.push_back(CellOutcome{
                            n, "lambda_plugin",
                            std::numeric_limits<double>::quiet_NaN(), false,
                            err.code_name()});
                    }
                }
            }
        }
    });

    return ExperimentRun{std::move(d_table), d_value, std::move(results)};
}

const SummaryCell* SummaryTable::find(const std::string& estimator,
                                      std::int64_t n) const {
    for (const auto& c : cells)
        if (c.estimator == estimator && c.n == n) return &c;
    return nullptr;
}

SummaryTable summarize(const std::vector<ReplicationResult>& results,
                       const TruthValues& truth) {
    std::map<std::pair<std::string, std::int64_t>, std::pair<std::vector<double>, std::int64_t>>
        cells;  // (estimator, n) -> (successes, failures)
    for (const auto& rep : results) {
        for (const auto& cell : rep.cells) {
            auto& entry = cells[{cell.estimator, cell.n}];
            if (cell.ok)
                entry.first.push_back(cell.estimate);
            else
                ++entry.second;
        }
    }
    require(!cells.empty(), ErrorCode::empty_cell, "no results to summarize");

    SummaryTable table;
    for (auto& [key, entry] : cells) {
        auto& [vals, failed] = entry;
        require(vals.size() >= 2, ErrorCode::empty_cell,
                "cell (" + key.first + ", N=" + std::to_string(key.second) +
                    ") has fewer than 2 successful replications");
        const double t = truth.for_estimator(key.first);
        const double cnt = static_cast<double>(vals.size());

        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= cnt;
        double m2 = 0.0, m3 = 0.0, mse = 0.0;
        for (double v : vals) {
            double c = v - mean;
            m2 += c * c;
            m3 += c * c * c;
            double e = v - t;
            mse += e * e;
        }
        m2 /= cnt;
        m3 /= cnt;
        mse /= cnt;

        std::sort(vals.begin(), vals.end());
        SummaryCell cell;
        cell.estimator = key.first;
        cell.n = key.second;
        cell.count = static_cast<std::int64_t>(vals.size());
        cell.failed = failed;
        cell.rmse = std::sqrt(mse);
        cell.bias = mean - t;
        cell.median = quantile_sorted(vals, 0.5);
        cell.q1 = quantile_sorted(vals, 0.25);
        cell.q3 = quantile_sorted(vals, 0.75);
        cell.skewness = (m2 > 0.0) ? m3 / std::pow(m2, 1.5) : 0.0;
        cell.truth = t;
        table.cells.push_back(std::move(cell));
    }
    std::sort(table.cells.begin(), table.cells.end(),
              [](const SummaryCell& a, const SummaryCell& b) {
                  if (a.estimator != b.estimator) return a.estimator < b.estimator;
                  return a.n < b.n;
              });
    return table;
}

double fit_loglog_slope(const SummaryTable& table, const std::string& estimator) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& c : table.cells)
        if (c.estimator == estimator && c.rmse > 0.0)
            pts.emplace_back(std::log(static_cast<double>(c.n)), std::log(c.rmse));
    require(pts.size() >= 3, ErrorCode::insufficient_points,
            "log-log fit needs at least 3 ladder points with positive metric");
    double mx = 0.0, my = 0.0;
    for (auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxx = 0.0, sxy = 0.0;
    for (auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    require(sxx > 0.0, ErrorCode::insufficient_points,
            "degenerate abscissae in log-log fit");
    return sxy / sxx;
}

std::vector<std::pair<double, double>> qq_data(
    const std::vector<ReplicationResult>& results, const std::string& estimator,
    std::int64_t n) {
    std::vector<double> vals;
    for (const auto& rep : results)
        for (const auto& cell : rep.cells)
            if (cell.ok && cell.n == n && cell.estimator == estimator)
                vals.push_back(cell.estimate);
    require(vals.size() >= 20, ErrorCode::insufficient_points,
            "Q-Q data needs at least 20 successful replications");

    const double cnt = static_cast<double>(vals.size());
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= cnt;
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / (cnt - 1.0));
    require(sd > 0.0, ErrorCode::degenerate_sample,
            "constant sample has no Q-Q representation");

    std::sort(vals.begin(), vals.end());
    std::vector<std::pair<double, double>> out;
    out.reserve(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        double p = (static_cast<double>(i) + 0.5) / cnt;
        out.emplace_back(normal_quantile(p), (vals[i] - mean) / sd);
    }
    return out;
}

} // namespace rblab
