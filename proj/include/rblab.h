/*
 * rblab — simulation and inference for SDEs driven by additive Rosenblatt
 * noise.  C ABI of the shared library: opaque handles plus integer status
 * codes.  Every function returns RBLAB_OK (0) on success; on failure it
 * returns the error code and leaves a message in rblab_last_error() (thread
 * local).  Out-parameters are untouched on failure unless stated otherwise.
 */
#ifndef RBLAB_H
#define RBLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define RBLAB_API_VERSION_MAJOR 1
#define RBLAB_API_VERSION_MINOR 0

typedef enum rblab_status {
    RBLAB_OK = 0,
    RBLAB_ERR_INVALID_ARGUMENT = 1,
    RBLAB_ERR_RANGE = 2,
    RBLAB_ERR_SCHEMA = 3,
    RBLAB_ERR_DIAGONAL_EVALUATION = 4,
    RBLAB_ERR_RESOURCE_LIMIT = 5,
    RBLAB_ERR_EMBEDDING_FAILURE = 6,
    RBLAB_ERR_NUMERICAL_BLOWUP = 7,
    RBLAB_ERR_INCOMPATIBLE_GRID = 8,
    RBLAB_ERR_ODD_SAMPLE_SIZE = 9,
    RBLAB_ERR_DEGENERATE_PATH = 10,
    RBLAB_ERR_DEGENERATE_REGRESSOR = 11,
    RBLAB_ERR_DEGENERATE_DIFFUSION = 12,
    RBLAB_ERR_DEGENERATE_SAMPLE = 13,
    RBLAB_ERR_INSUFFICIENT_RESOLUTION = 14,
    RBLAB_ERR_INSUFFICIENT_POINTS = 15,
    RBLAB_ERR_MISSING_CALIBRATION = 16,
    RBLAB_ERR_EMPTY_CELL = 17,
    RBLAB_ERR_IO = 18,
    RBLAB_ERR_INTERNAL = 19
} rblab_status;

/* Thread-local message for the most recent failure in this thread. */
const char* rblab_last_error(void);
/* Stable name of a status code ("RangeError", "DegeneratePath", ...). */
const char* rblab_status_name(int32_t status);

void rblab_version(int32_t* major, int32_t* minor);

/* Worker cap for internal parallel loops; 0 = hardware default.  Results are
 * independent of this setting. */
void rblab_set_threads(int32_t threads);

/* ---- sample paths (opaque) ---------------------------------------------- */

typedef struct rblab_path rblab_path;

int32_t rblab_path_create(const double* values, int64_t n_values, rblab_path** out);
void rblab_path_free(rblab_path* path);
int64_t rblab_path_n_steps(const rblab_path* path);
/* Pointer to the n_steps + 1 values; owned by the handle. */
const double* rblab_path_values(const rblab_path* path);
int32_t rblab_path_write_csv(const rblab_path* path, const char* file);
int32_t rblab_path_read_csv(const char* file, rblab_path** out);

/* ---- noise engine -------------------------------------------------------- */

int32_t rblab_c_h_z(double h, double* out);
int32_t rblab_kernel_l(double t, double x1, double x2, double h, double rel_tol,
                       double* out);
int32_t rblab_covariance_oracle(double h, double s, double t, double* out);

/* inner_resolution 0 selects the default ladder (4N capped by the budget);
 * budget 0 selects the default M^2*N ceiling (2.2e13). */
int32_t rblab_simulate_rosenblatt(double h, int64_t n_steps,
                                  int64_t inner_resolution, uint64_t seed,
                                  int64_t budget, rblab_path** out);
int32_t rblab_simulate_fbm(double h, int64_t n_steps, uint64_t seed,
                           rblab_path** out);

/* ---- sde solver ---------------------------------------------------------- */

int32_t rblab_euler_maruyama(double x0, double lambda, double sigma,
                             const double* drift_coeffs, int64_t n_coeffs,
                             const rblab_path* noise, rblab_path** out_solution);
int32_t rblab_downsample(const rblab_path* path, int64_t n_obs, rblab_path** out);
int32_t rblab_drift_eval(const double* coeffs, int64_t n_coeffs, double x,
                         double* out);

/* ---- estimators ----------------------------------------------------------- */

typedef struct rblab_two_variation_result {
    double v_n;
    double sum_sq;
    int64_t n;
} rblab_two_variation_result;

int32_t rblab_two_variation(const rblab_path* path, double h,
                            rblab_two_variation_result* out);
int32_t rblab_log_two_variation(const rblab_path* path, double h, double sigma,
                                double* out);

typedef struct rblab_diffusion_estimate {
    double h_hat;
    double sigma_hat;
    int64_t n;
    double sum_sq_full;
    double sum_sq_half;
} rblab_diffusion_estimate;

int32_t rblab_estimate_diffusion(const rblab_path* path,
                                 rblab_diffusion_estimate* out);

typedef enum rblab_interval {
    RBLAB_INTERVAL_FIRST_HALF = 0,
    RBLAB_INTERVAL_SECOND_HALF = 1,
    RBLAB_INTERVAL_FULL = 2
} rblab_interval;

int32_t rblab_w_statistic(const rblab_path* path, int32_t interval, double h,
                          double sigma, double d_h, double* out);
int32_t rblab_riemann_drift_sums(const rblab_path* path, const double* coeffs,
                                 int64_t n_coeffs, double* out_first,
                                 double* out_second);

int32_t rblab_delta_opt(double h, double* out);
int32_t rblab_rate_a_opt(double h, double* out);

typedef struct rblab_decel_params {
    double delta;
    int64_t k;
    double h_n;
    int64_t n_n;
    int64_t n;
} rblab_decel_params;

int32_t rblab_deceleration_params(int64_t n, double delta,
                                  rblab_decel_params* out);

typedef enum rblab_w_form {
    RBLAB_W_LOG = 0,
    RBLAB_W_PLAIN = 1
} rblab_w_form;

int32_t rblab_decelerated_w(const rblab_path* path, int32_t interval,
                            const rblab_decel_params* params,
                            double h_used, double sigma_used, double d_h,
                            int32_t form, double* out);

typedef struct rblab_drift_estimate {
    double lambda_hat;
    double regressor[2];
    double response[2];
    int32_t mode; /* 0 = known parameters, 1 = plug-in */
    /* plug-in diagnostics; zero for the known-parameter mode */
    double h_hat;
    double h_clamped;
    double sigma_hat;
    double delta;
    int64_t k;
    double h_n;
    int64_t n_n;
    double d_value;
    double w_first;
    double w_second;
} rblab_drift_estimate;

int32_t rblab_estimate_lambda_known(const rblab_path* path, const double* coeffs,
                                    int64_t n_coeffs, double h, double sigma,
                                    double d_h, rblab_drift_estimate* out);

/* ---- d(H) source (opaque) -------------------------------------------------- */

typedef struct rblab_dtable rblab_dtable;

int32_t rblab_dtable_create(const double* h_values, const double* d_values,
                            int64_t n_points, rblab_dtable** out);
void rblab_dtable_free(rblab_dtable* table);
int32_t rblab_dtable_lookup(const rblab_dtable* table, double h, double* out);
/* Monte Carlo calibration of d(H) via the 2-variation ratio oracle. */
int32_t rblab_calibrate_d(double h, int64_t n_steps, int64_t inner_resolution,
                          int64_t replications, uint64_t master_seed, double* out);

int32_t rblab_estimate_lambda_plugin(const rblab_path* path, const double* coeffs,
                                     int64_t n_coeffs, const rblab_dtable* table,
                                     rblab_drift_estimate* out);

/* ---- experiment harness ----------------------------------------------------- */

uint64_t rblab_seed_for_replication(uint64_t master, uint64_t index);

/* JSON-driven workflows (the CLI subcommands).  config_json is the full
 * config document; artifacts are written into out_dir, which must exist. */
int32_t rblab_run_simulate_noise(const char* config_json, const char* out_dir);
int32_t rblab_run_solve(const char* config_json, const char* out_dir);
int32_t rblab_run_estimate(const char* config_json, const char* out_dir);
int32_t rblab_run_calibrate_d(const char* config_json, const char* out_dir);
int32_t rblab_run_experiment(const char* config_json, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* RBLAB_H */
