#include "estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rng.hpp"
#include "rosenblatt.hpp"

namespace rblab {

namespace {

double median_of(std::vector<double> v) {
    require(!v.empty(), ErrorCode::insufficient_points, "median of empty sample");
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Sum of (|dX_i|^2 * scale - 1) over i in [first, last], increments of stride 1.
double centered_square_sum(const SamplePath& path, std::int64_t first,
                           std::int64_t last, double scale) {
    double acc = 0.0;
    for (std::int64_t i = first; i <= last; ++i) {
        double dx = path.values[static_cast<std::size_t>(i)] -
                    path.values[static_cast<std::size_t>(i - 1)];
        acc += dx * dx * scale - 1.0;
    }
    return acc;
}

double w_half(const SamplePath& path, bool second, Hurst h, double sigma,
              double d_h) {
    const std::int64_t n = path.n_steps;
    const double H = h.value();
    const double scale = std::pow(static_cast<double>(n), 2.0 * H) / (sigma * sigma);
    const std::int64_t half = n / 2;
    double sum = second ? centered_square_sum(path, half + 1, n, scale)
                        : centered_square_sum(path, 1, half, scale);
    double pref = std::pow(static_cast<double>(n), 1.0 - H) / (4.0 * d_h);
    return pref * (sum / static_cast<double>(n));
}

} // namespace

TwoVariationStats two_variation(const SamplePath& path, Hurst h) {
    path.validate();
    require(path.n_steps >= 2, ErrorCode::invalid_argument,
            "two_variation needs at least 2 steps");
    const std::int64_t n = path.n_steps;
    const double scale = std::pow(static_cast<double>(n), 2.0 * h.value());
    double sum_sq = 0.0, centered = 0.0;
    for (std::int64_t i = 1; i <= n; ++i) {
        double dx = path.values[static_cast<std::size_t>(i)] -
                    path.values[static_cast<std::size_t>(i - 1)];
        sum_sq += dx * dx;
        centered += dx * dx * scale - 1.0;
    }
    return TwoVariationStats{centered / static_cast<double>(n), sum_sq, n};
}

double log_two_variation(const SamplePath& path, Hurst h, double sigma) {
    path.validate();
    require(sigma > 0.0, ErrorCode::range_error, "sigma must be positive");
    const std::int64_t n = path.n_steps;
    double sum_sq = 0.0;
    for (std::int64_t i = 1; i <= n; ++i) {
        double dx = path.values[static_cast<std::size_t>(i)] -
                    path.values[static_cast<std::size_t>(i - 1)];
        sum_sq += dx * dx;
    }
    require(sum_sq > 0.0, ErrorCode::degenerate_path,
            "log 2-variation undefined: all increments are zero");
    // log( sum_sq * N^(2H-1) / sigma^2 ), kept in this telescoped shape so the
    // k = 1 decelerated statistic reduces to it bit for bit.
    return std::log(sum_sq) +
           (2.0 * h.value() - 1.0) * std::log(static_cast<double>(n)) -
           2.0 * std::log(sigma);
}

DiffusionEstimate estimate_diffusion(const SamplePath& path) {
    path.validate();
    const std::int64_t n = path.n_steps;
    require(n % 2 == 0, ErrorCode::odd_sample_size,
            "estimate_diffusion needs an even number of observations, got " +
                std::to_string(n));
    require(n >= 4, ErrorCode::invalid_argument,
            "estimate_diffusion needs at least 4 observations");

    double s_full = 0.0;
    for (std::int64_t i = 1; i <= n; ++i) {
        double dx = path.values[static_cast<std::size_t>(i)] -
                    path.values[static_cast<std::size_t>(i - 1)];
        s_full += dx * dx;
    }
    double s_half = 0.0;
    for (std::int64_t i = 1; i <= n / 2; ++i) {
        double dx = path.values[static_cast<std::size_t>(2 * i)] -
                    path.values[static_cast<std::size_t>(2 * i - 2)];
        s_half += dx * dx;
    }
    require(s_full > 0.0 && s_half > 0.0, ErrorCode::degenerate_path,
            "degenerate path: vanishing quadratic variation");

    const double nd = static_cast<double>(n);
    double h_hat = 0.5 - 0.5 * std::log2(s_full / s_half);
    double expo = 0.5 * (std::log2(2.0 / nd) * std::log2(s_full) +
                         std::log2(nd) * std::log2(s_half));
    double sigma_hat = std::exp2(expo);
    return DiffusionEstimate{h_hat, sigma_hat, n, s_full, s_half};
}

double w_statistic(const SamplePath& path, Interval interval, Hurst h,
                   double sigma, double d_h) {
    path.validate();
    require(path.n_steps % 2 == 0, ErrorCode::odd_sample_size,
            "w_statistic needs an even number of observations");
    require(sigma > 0.0, ErrorCode::range_error, "sigma must be positive");
    require(d_h > 0.0, ErrorCode::range_error, "d(H) must be positive");
    switch (interval) {
        case Interval::first_half: return w_half(path, false, h, sigma, d_h);
        case Interval::second_half: return w_half(path, true, h, sigma, d_h);
        case Interval::full:
            return w_half(path, false, h, sigma, d_h) +
                   w_half(path, true, h, sigma, d_h);
    }
    fail(ErrorCode::invalid_argument, "bad interval");
}

std::pair<double, double> riemann_drift_sums(const SamplePath& path,
                                             const DriftPoly& drift) {
    path.validate();
    require(path.n_steps % 2 == 0, ErrorCode::odd_sample_size,
            "riemann_drift_sums needs an even number of observations");
    const std::int64_t n = path.n_steps;
    double first = 0.0, second = 0.0;
    for (std::int64_t i = 1; i <= n / 2; ++i)
        first += drift(path.values[static_cast<std::size_t>(i)]);
    for (std::int64_t i = n / 2 + 1; i <= n; ++i)
        second += drift(path.values[static_cast<std::size_t>(i)]);
    return {first / static_cast<double>(n), second / static_cast<double>(n)};
}

DecelerationParams deceleration_params(std::int64_t n, double delta) {
    require(n >= 1, ErrorCode::invalid_argument, "n must be positive");
    require(delta > 0.0 && delta < 1.0, ErrorCode::range_error,
            "delta must lie in (0, 1)");
    // k = floor(N / N^delta).  Exact ties (e.g. N = 1024, delta = 0.8 where
    // N^delta = 256) sit within a few ulp of an integer once delta passes
    // through its double representation; the relative nudge absorbs that.
    const long double nl = static_cast<long double>(n);
    const long double r = nl / std::pow(nl, static_cast<long double>(delta));
    std::int64_t k =
        static_cast<std::int64_t>(std::floor(r * (1.0L + 4e-15L) + 1e-12L));
    k = std::clamp<std::int64_t>(k, 1, n);
    const double h_n = static_cast<double>(k) / static_cast<double>(n);
    const std::int64_t n_n = n / k;  // floor(1/h_n)
    require(n_n >= 4, ErrorCode::insufficient_resolution,
            "deceleration leaves only " + std::to_string(n_n) +
                " observations (need >= 4)");
    return DecelerationParams{delta, k, h_n, n_n, n};
}

double delta_opt(Hurst h) {
    double H = h.value();
    return H <= 0.75 ? 2.0 * (1.0 - H) : 0.5;
}

double rate_a_opt(Hurst h) {
    double H = h.value();
    return H <= 0.75 ? 2.0 * (1.0 - H) * (H - 0.5) : 0.5 * (1.0 - H);
}

namespace {

double decel_increment(const SamplePath& path, std::int64_t k, std::int64_t i) {
    return path.values[static_cast<std::size_t>(i * k)] -
           path.values[static_cast<std::size_t>((i - 1) * k)];
}

double decel_plain_range(const SamplePath& path, const DecelerationParams& p,
                         std::int64_t i_first, std::int64_t i_last, double H,
                         double sigma, double d_h) {
    const double inv = 1.0 / (sigma * sigma * std::pow(p.h_n, 2.0 * H));
    double sum = 0.0;
    for (std::int64_t i = i_first; i <= i_last; ++i) {
        double dx = decel_increment(path, p.k, i);
        sum += dx * dx * inv - 1.0;
    }
    double pref = std::pow(1.0 / p.h_n, 1.0 - H) / (4.0 * d_h);
    return pref * (p.h_n * sum);
}

} // namespace

double decelerated_w(const SamplePath& path, Interval interval,
                     const DecelerationParams& params, Hurst h_used,
                     double sigma_used, double d_h, WForm form) {
    path.validate();
    require(path.n_steps == params.n, ErrorCode::incompatible_grid,
            "deceleration parameters were derived for N = " +
                std::to_string(params.n) + ", path has N = " +
                std::to_string(path.n_steps));
    require(sigma_used > 0.0, ErrorCode::range_error, "sigma must be positive");
    require(d_h > 0.0, ErrorCode::range_error, "d(H) must be positive");
    const double H = h_used.value();

    if (form == WForm::log_form) {
        require(interval == Interval::full, ErrorCode::invalid_argument,
                "the logarithmic decelerated statistic is only defined on the "
                "full interval");
        double sum_sq = 0.0;
        for (std::int64_t i = 1; i <= params.n_n; ++i) {
            double dx = decel_increment(path, params.k, i);
            sum_sq += dx * dx;
        }
        require(sum_sq > 0.0, ErrorCode::degenerate_path,
                "degenerate subsampled path");
        // log( h * sum |dX|^2 / (sigma^2 h^{2H}) ) telescoped as in
        // log_two_variation; see the k = 1 reduction test.
        double inner = std::log(sum_sq) +
                       (1.0 - 2.0 * H) * std::log(params.h_n) -
                       2.0 * std::log(sigma_used);
        return std::pow(1.0 / params.h_n, 1.0 - H) / (4.0 * d_h) * inner;
    }

    const std::int64_t half = params.n_n / 2;
    switch (interval) {
        case Interval::first_half:
            return decel_plain_range(path, params, 1, half, H, sigma_used, d_h);
        case Interval::second_half:
            return decel_plain_range(path, params, half + 1, params.n_n, H,
                                     sigma_used, d_h);
        case Interval::full:
            return decel_plain_range(path, params, 1, half, H, sigma_used, d_h) +
                   decel_plain_range(path, params, half + 1, params.n_n, H,
                                     sigma_used, d_h);
    }
    fail(ErrorCode::invalid_argument, "bad interval");
}

DriftEstimate estimate_lambda_known(const SamplePath& path, const DriftPoly& drift,
                                    Hurst h, double sigma, double d_h) {
    path.validate();
    require(path.n_steps % 2 == 0, ErrorCode::odd_sample_size,
            "drift estimation needs an even number of observations");
    require(sigma >= 0.0, ErrorCode::range_error, "sigma must be non-negative");
    const std::int64_t n = path.n_steps;

    auto [z1, z2] = riemann_drift_sums(path, drift);
    double zz = z1 * z1 + z2 * z2;
    require(zz > 0.0, ErrorCode::degenerate_regressor,
            "regressor Z_N vanishes along the path");

    double w1 = 0.0, w2 = 0.0;
    if (sigma > 0.0) {
        w1 = w_statistic(path, Interval::first_half, h, sigma, d_h);
        w2 = w_statistic(path, Interval::second_half, h, sigma, d_h);
    }
    double u1 = path.values[static_cast<std::size_t>(n / 2)] - path.values[0] -
                sigma * w1;
    double u2 = path.values[static_cast<std::size_t>(n)] -
                path.values[static_cast<std::size_t>(n / 2)] - sigma * w2;

    DriftEstimate est;
    est.lambda_hat = (z1 * u1 + z2 * u2) / zz;
    est.regressor[0] = z1;
    est.regressor[1] = z2;
    est.response[0] = u1;
    est.response[1] = u2;
    est.mode = DriftMode::known_parameters;
    return est;
}

DhTable DhTable::single(double h, double d) {
    return from_points({{h, d}});
}

DhTable DhTable::from_points(std::vector<std::pair<double, double>> points) {
    require(!points.empty(), ErrorCode::missing_calibration,
            "d(H) table needs at least one point");
    std::sort(points.begin(), points.end());
    for (std::size_t i = 0; i < points.size(); ++i) {
        require(std::isfinite(points[i].first) && points[i].second > 0.0,
                ErrorCode::range_error, "d(H) table entries must be positive");
        require(i == 0 || points[i].first != points[i - 1].first,
                ErrorCode::invalid_argument, "duplicate H in d(H) table");
    }
    DhTable t;
    t.points_ = std::move(points);
    return t;
}

double DhTable::lookup(double h) const {
    require(!points_.empty(), ErrorCode::missing_calibration,
            "no d(H) source configured: supply an override or run calibration");
    if (h <= points_.front().first) return points_.front().second;
    if (h >= points_.back().first) return points_.back().second;
    auto it = std::upper_bound(points_.begin(), points_.end(),
                               std::make_pair(h, 0.0));
    auto lo = it - 1;
    double t = (h - lo->first) / (it->first - lo->first);
    return std::exp((1.0 - t) * std::log(lo->second) + t * std::log(it->second));
}

DriftEstimate estimate_lambda_plugin(const SamplePath& path, const DriftPoly& drift,
                                     const DhTable& d_table) {
    DiffusionEstimate de = estimate_diffusion(path);
    require(de.sigma_hat >= 1e-8, ErrorCode::degenerate_diffusion,
            "estimated sigma below the positivity floor 1e-8");
    const std::int64_t n = path.n_steps;

    double h_clamped = std::clamp(de.h_hat, 0.501, 0.999);
    Hurst hc(h_clamped);
    double delta = delta_opt(hc);
    DecelerationParams params = deceleration_params(n, delta);
    double d_val = d_table.lookup(h_clamped);

    double w1 = decelerated_w(path, Interval::first_half, params, hc, de.sigma_hat,
                              d_val, WForm::plain);
    double w2 = decelerated_w(path, Interval::second_half, params, hc,
                              de.sigma_hat, d_val, WForm::plain);

    double u1 = path.values[static_cast<std::size_t>(n / 2)] - path.values[0] -
                de.sigma_hat * w1;
    double u2 = path.values[static_cast<std::size_t>(n)] -
                path.values[static_cast<std::size_t>(n / 2)] - de.sigma_hat * w2;

    const std::int64_t half = params.n_n / 2;
    double zf = 0.0, zs = 0.0;
    for (std::int64_t i = 1; i <= half; ++i)
        zf += drift(path.values[static_cast<std::size_t>(i * params.k)]);
    for (std::int64_t i = half + 1; i <= params.n_n; ++i)
        zs += drift(path.values[static_cast<std::size_t>(i * params.k)]);
    double z1 = zf * params.h_n;
    double z2 = zs * params.h_n;
    double zz = z1 * z1 + z2 * z2;
    require(zz > 0.0, ErrorCode::degenerate_regressor,
            "decelerated regressor vanishes along the path");

    DriftEstimate est;
    est.lambda_hat = (z1 * u1 + z2 * u2) / zz;
    est.regressor[0] = z1;
    est.regressor[1] = z2;
    est.response[0] = u1;
    est.response[1] = u2;
    est.mode = DriftMode::plug_in;
    est.plugin = PluginDiagnostics{de,    h_clamped, delta, params,
                                   d_val, w1,        w2};
    return est;
}

double calibrate_d_from_paths(const std::vector<SamplePath>& paths, Hurst h) {
    require(paths.size() >= 2, ErrorCode::insufficient_points,
            "calibration needs at least 2 paths");
    const double H = h.value();
    std::vector<double> ratios;
    ratios.reserve(paths.size());
    for (const auto& path : paths) {
        TwoVariationStats tv = two_variation(path, h);
        double z1 = path.values.back();
        if (z1 == 0.0) continue;
        double num = std::pow(static_cast<double>(path.n_steps), 1.0 - H) * tv.v_n;
        ratios.push_back(num / (4.0 * z1));
    }
    require(!ratios.empty(), ErrorCode::degenerate_path,
            "all calibration paths end at zero");
    double d = median_of(std::move(ratios));
    require(d > 0.0 && std::isfinite(d), ErrorCode::missing_calibration,
            "calibration produced a non-positive d(H); increase N or R");
    return d;
}

DhCalibration calibrate_d(Hurst h, std::int64_t n_steps,
                          std::int64_t inner_resolution,
                          std::int64_t replications, std::uint64_t master_seed,
                          std::int64_t budget) {
    require(replications >= 2, ErrorCode::invalid_argument,
            "calibration needs at least 2 replications");
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(replications));
    for (std::int64_t i = 0; i < replications; ++i)
        seeds[static_cast<std::size_t>(i)] =
            seed_for_replication(master_seed, static_cast<std::uint64_t>(i));
    auto paths = simulate_rosenblatt_batch(h, n_steps, inner_resolution, seeds, budget);
    return DhCalibration{calibrate_d_from_paths(paths, h), replications, n_steps,
                         inner_resolution};
}

} // namespace rblab
