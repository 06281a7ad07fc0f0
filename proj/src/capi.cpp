#include "rblab.h"

#include <cstring>
#include <string>

#include "estimators.hpp"
#include "fbm.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "rng.hpp"
#include "rosenblatt.hpp"
#include "sde.hpp"
#include "threads.hpp"
#include "workflows.hpp"

using namespace rblab;

struct rblab_path {
    SamplePath path;
};

struct rblab_dtable {
    DhTable table;
};

namespace {

thread_local std::string tl_error;

void set_error(const std::string& msg) { tl_error = msg; }

// Runs fn, translating the C++ error taxonomy to status codes.
template <typename F>
int32_t guarded(F&& fn) {
    try {
        fn();
        return RBLAB_OK;
    } catch (const Error& err) {
        set_error(err.what());
        return static_cast<int32_t>(err.code());
    } catch (const std::exception& ex) {
        set_error(ex.what());
        return RBLAB_ERR_INTERNAL;
    } catch (...) {
        set_error("unknown error");
        return RBLAB_ERR_INTERNAL;
    }
}

int32_t check_ptr(const void* p, const char* name) {
    if (p) return RBLAB_OK;
    set_error(std::string("null pointer: ") + name);
    return RBLAB_ERR_INVALID_ARGUMENT;
}

#define RBLAB_REQUIRE_PTR(p)                                 \
    do {                                                     \
        int32_t rc_ = check_ptr((p), #p);                    \
        if (rc_ != RBLAB_OK) return rc_;                     \
    } while (0)

DriftPoly make_drift(const double* coeffs, int64_t n_coeffs) {
    require(coeffs != nullptr && n_coeffs >= 1, ErrorCode::invalid_argument,
            "drift coefficients must be non-empty");
    return DriftPoly(std::vector<double>(coeffs, coeffs + n_coeffs));
}

Interval make_interval(int32_t interval) {
    switch (interval) {
        case RBLAB_INTERVAL_FIRST_HALF: return Interval::first_half;
        case RBLAB_INTERVAL_SECOND_HALF: return Interval::second_half;
        case RBLAB_INTERVAL_FULL: return Interval::full;
    }
    fail(ErrorCode::invalid_argument, "bad interval selector");
}

void fill_drift_estimate(const DriftEstimate& est, rblab_drift_estimate* out) {
    std::memset(out, 0, sizeof(*out));
    out->lambda_hat = est.lambda_hat;
    out->regressor[0] = est.regressor[0];
    out->regressor[1] = est.regressor[1];
    out->response[0] = est.response[0];
    out->response[1] = est.response[1];
    out->mode = est.mode == DriftMode::plug_in ? 1 : 0;
    if (est.plugin) {
        const PluginDiagnostics& pd = *est.plugin;
        out->h_hat = pd.diffusion.h_hat;
        out->h_clamped = pd.h_clamped;
        out->sigma_hat = pd.diffusion.sigma_hat;
        out->delta = pd.delta;
        out->k = pd.params.k;
        out->h_n = pd.params.h_n;
        out->n_n = pd.params.n_n;
        out->d_value = pd.d_value;
        out->w_first = pd.w_first;
        out->w_second = pd.w_second;
    }
}

} // namespace

extern "C" {

const char* rblab_last_error(void) { return tl_error.c_str(); }

const char* rblab_status_name(int32_t status) {
    return error_code_name(static_cast<ErrorCode>(status));
}

void rblab_version(int32_t* major, int32_t* minor) {
    if (major) *major = RBLAB_API_VERSION_MAJOR;
    if (minor) *minor = RBLAB_API_VERSION_MINOR;
}

void rblab_set_threads(int32_t threads) { set_thread_limit(threads); }

int32_t rblab_path_create(const double* values, int64_t n_values, rblab_path** out) {
    RBLAB_REQUIRE_PTR(values);
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] {
        require(n_values >= 2, ErrorCode::invalid_argument,
                "a path needs at least 2 values");
        *out = new rblab_path{
            SamplePath(n_values - 1, std::vector<double>(values, values + n_values))};
    });
}

void rblab_path_free(rblab_path* path) { delete path; }

int64_t rblab_path_n_steps(const rblab_path* path) {
    return path ? path->path.n_steps : -1;
}

const double* rblab_path_values(const rblab_path* path) {
    return path ? path->path.values.data() : nullptr;
}

int32_t rblab_path_write_csv(const rblab_path* path, const char* file) {
    RBLAB_REQUIRE_PTR(path);
    RBLAB_REQUIRE_PTR(file);
    return guarded([&] { write_path_csv(path->path, file); });
}

int32_t rblab_path_read_csv(const char* file, rblab_path** out) {
    RBLAB_REQUIRE_PTR(file);
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] { *out = new rblab_path{read_path_csv(file)}; });
}

int32_t rblab_c_h_z(double h, double* out) {
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] { *out = c_h_z(Hurst(h)); });
}

int32_t rblab_kernel_l(double t, double x1, double x2, double h, double rel_tol,
                       double* out) {
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] {
        *out = kernel_L(t, x1, x2, Hurst(h), rel_tol > 0 ? rel_tol : 1e-8);
    });
}

int32_t rblab_covariance_oracle(double h, double s, double t, double* out) {
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] { *out = covariance_oracle(Hurst(h), s, t); });
}

int32_t rblab_simulate_rosenblatt(double h, int64_t n_steps,
                                  int64_t inner_resolution, uint64_t seed,
                                  int64_t budget, rblab_path** out) {
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] {
        std::int64_t b = budget > 0 ? budget : kDefaultSynthesisBudget;
        std::int64_t m = inner_resolution;
        if (m == 0) m = default_inner_resolution(n_steps, b);
        *out = new rblab_path{
            simulate_rosenblatt(RosenblattSpec(Hurst(h), n_steps, m, seed), b)};
    });
}

int32_t rblab_simulate_fbm(double h, int64_t n_steps, uint64_t seed,
                           rblab_path** out) {
    RBLAB_REQUIRE_PTR(out);
    return guarded(
        [&] { *out = new rblab_path{simulate_fbm(FbmSpec(Hurst(h), n_steps, seed))}; });
}

int32_t rblab_euler_maruyama(double x0, double lambda, double sigma,
                             const double* drift_coeffs, int64_t n_coeffs,
                             const rblab_path* noise, rblab_path** out_solution) {
    RBLAB_REQUIRE_PTR(drift_coeffs);
    RBLAB_REQUIRE_PTR(noise);
    RBLAB_REQUIRE_PTR(out_solution);
    return guarded([&] {
        SolutionPath sol = euler_maruyama(x0, lambda, sigma,
                                          make_drift(drift_coeffs, n_coeffs),
                                          noise->path);
        *out_solution = new rblab_path{std::move(sol.solution)};
    });
}

int32_t rblab_downsample(const rblab_path* path, int64_t n_obs, rblab_path** out) {
    RBLAB_REQUIRE_PTR(path);
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] { *out = new rblab_path{downsample(path->path, n_obs)}; });
}

int32_t rblab_drift_eval(const double* coeffs, int64_t n_coeffs, double x,
                         double* out) {
    RBLAB_REQUIRE_PTR(coeffs);
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] { *out = make_drift(coeffs, n_coeffs)(x); });
}

int32_t rblab_two_variation(const rblab_path* path, double h,
                            rblab_two_variation_result* out) {
    RBLAB_REQUIRE_PTR(path);
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] {
        TwoVariationStats s = two_variation(path->path, Hurst(h));
        out->v_n = s.v_n;
        out->sum_sq = s.sum_sq;
        out->n = s.n;
    });
}

int32_t rblab_log_two_variation(const rblab_path* path, double h, double sigma,
                                double* out) {
    RBLAB_REQUIRE_PTR(path);
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] { *out = log_two_variation(path->path, Hurst(h), sigma); });
}

int32_t rblab_estimate_diffusion(const rblab_path* path,
                                 rblab_diffusion_estimate* out) {
    RBLAB_REQUIRE_PTR(path);
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] {
        DiffusionEstimate de = estimate_diffusion(path->path);
        out->h_hat = de.h_hat;
        out->sigma_hat = de.sigma_hat;
        out->n = de.n;
        out->sum_sq_full = de.sum_sq_full;
        out->sum_sq_half = de.sum_sq_half;
    });
}

int32_t rblab_w_statistic(const rblab_path* path, int32_t interval, double h,
                          double sigma, double d_h, double* out) {
    RBLAB_REQUIRE_PTR(path);
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] {
        *out = w_statistic(path->path, make_interval(interval), Hurst(h), sigma, d_h);
    });
}

int32_t rblab_riemann_drift_sums(const rblab_path* path, const double* coeffs,
                                 int64_t n_coeffs, double* out_first,
                                 double* out_second) {
    RBLAB_REQUIRE_PTR(path);
    RBLAB_REQUIRE_PTR(coeffs);
    RBLAB_REQUIRE_PTR(out_first);
    RBLAB_REQUIRE_PTR(out_second);
    return guarded([&] {
        auto [a, b] = riemann_drift_sums(path->path, make_drift(coeffs, n_coeffs));
        *out_first = a;
        *out_second = b;
    });
}

int32_t rblab_delta_opt(double h, double* out) {
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] { *out = delta_opt(Hurst(h)); });
}

int32_t rblab_rate_a_opt(double h, double* out) {
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] { *out = rate_a_opt(Hurst(h)); });
}

int32_t rblab_deceleration_params(int64_t n, double delta,
                                  rblab_decel_params* out) {
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] {
        DecelerationParams p = deceleration_params(n, delta);
        out->delta = p.delta;
        out->k = p.k;
        out->h_n = p.h_n;
        out->n_n = p.n_n;
        out->n = p.n;
    });
}

int32_t rblab_decelerated_w(const rblab_path* path, int32_t interval,
                            const rblab_decel_params* params, double h_used,
                            double sigma_used, double d_h, int32_t form,
                            double* out) {
    RBLAB_REQUIRE_PTR(path);
    RBLAB_REQUIRE_PTR(params);
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] {
        require(form == RBLAB_W_LOG || form == RBLAB_W_PLAIN,
                ErrorCode::invalid_argument, "bad form selector");
        DecelerationParams p{params->delta, params->k, params->h_n, params->n_n,
                             params->n};
        *out = decelerated_w(path->path, make_interval(interval), p, Hurst(h_used),
                             sigma_used, d_h,
                             form == RBLAB_W_LOG ? WForm::log_form : WForm::plain);
    });
}

int32_t rblab_estimate_lambda_known(const rblab_path* path, const double* coeffs,
                                    int64_t n_coeffs, double h, double sigma,
                                    double d_h, rblab_drift_estimate* out) {
    RBLAB_REQUIRE_PTR(path);
    RBLAB_REQUIRE_PTR(coeffs);
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] {
        DriftEstimate est = estimate_lambda_known(
            path->path, make_drift(coeffs, n_coeffs), Hurst(h), sigma, d_h);
        fill_drift_estimate(est, out);
    });
}

int32_t rblab_dtable_create(const double* h_values, const double* d_values,
                            int64_t n_points, rblab_dtable** out) {
    RBLAB_REQUIRE_PTR(h_values);
    RBLAB_REQUIRE_PTR(d_values);
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] {
        require(n_points >= 1, ErrorCode::invalid_argument,
                "d table needs at least one point");
        std::vector<std::pair<double, double>> pts;
        for (int64_t i = 0; i < n_points; ++i)
            pts.emplace_back(h_values[i], d_values[i]);
        *out = new rblab_dtable{DhTable::from_points(std::move(pts))};
    });
}

void rblab_dtable_free(rblab_dtable* table) { delete table; }

int32_t rblab_dtable_lookup(const rblab_dtable* table, double h, double* out) {
    RBLAB_REQUIRE_PTR(table);
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] { *out = table->table.lookup(h); });
}

int32_t rblab_calibrate_d(double h, int64_t n_steps, int64_t inner_resolution,
                          int64_t replications, uint64_t master_seed, double* out) {
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] {
        std::int64_t m = inner_resolution;
        if (m == 0) m = default_inner_resolution(n_steps);
        *out = calibrate_d(Hurst(h), n_steps, m, replications, master_seed).d;
    });
}

int32_t rblab_estimate_lambda_plugin(const rblab_path* path, const double* coeffs,
                                     int64_t n_coeffs, const rblab_dtable* table,
                                     rblab_drift_estimate* out) {
    RBLAB_REQUIRE_PTR(path);
    RBLAB_REQUIRE_PTR(coeffs);
    RBLAB_REQUIRE_PTR(table);
    RBLAB_REQUIRE_PTR(out);
    return guarded([&] {
        DriftEstimate est = estimate_lambda_plugin(
            path->path, make_drift(coeffs, n_coeffs), table->table);
        fill_drift_estimate(est, out);
    });
}

uint64_t rblab_seed_for_replication(uint64_t master, uint64_t index) {
    return seed_for_replication(master, index);
}

int32_t rblab_run_simulate_noise(const char* config_json, const char* out_dir) {
    RBLAB_REQUIRE_PTR(config_json);
    RBLAB_REQUIRE_PTR(out_dir);
    return guarded([&] { run_simulate_noise(config_json, out_dir); });
}

int32_t rblab_run_solve(const char* config_json, const char* out_dir) {
    RBLAB_REQUIRE_PTR(config_json);
    RBLAB_REQUIRE_PTR(out_dir);
    return guarded([&] { run_solve(config_json, out_dir); });
}

int32_t rblab_run_estimate(const char* config_json, const char* out_dir) {
    RBLAB_REQUIRE_PTR(config_json);
    RBLAB_REQUIRE_PTR(out_dir);
    return guarded([&] { run_estimate(config_json, out_dir); });
}

int32_t rblab_run_calibrate_d(const char* config_json, const char* out_dir) {
    RBLAB_REQUIRE_PTR(config_json);
    RBLAB_REQUIRE_PTR(out_dir);
    return guarded([&] { run_calibrate_d(config_json, out_dir); });
}

int32_t rblab_run_experiment(const char* config_json, const char* out_dir) {
    RBLAB_REQUIRE_PTR(config_json);
    RBLAB_REQUIRE_PTR(out_dir);
    return guarded([&] { run_experiment_cmd(config_json, out_dir); });
}

} // extern "C"
