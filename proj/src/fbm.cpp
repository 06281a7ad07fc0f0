#include "fbm.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <vector>

#include "rng.hpp"

namespace rblab {

namespace {
// FFTW plan creation is not thread safe.
std::mutex g_fftw_mutex;

struct FftwBuffer {
    fftw_complex* data = nullptr;
    explicit FftwBuffer(std::size_t n) {
        data = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        require(data != nullptr, ErrorCode::internal_error, "fftw_malloc failed");
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
};

// Hosking's method: sequential exact simulation of a stationary Gaussian
// sequence from its autocovariance via the Durbin-Levinson recursion.  O(n^2);
// only used when the embedding fails.
std::vector<double> hosking_fgn(double hurst, std::int64_t n, GaussianStream& gs) {
    std::vector<double> gamma(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) gamma[static_cast<std::size_t>(k)] = fgn_autocov(hurst, k);

    std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
    std::vector<double> phi_new(static_cast<std::size_t>(n), 0.0);
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);

    double v = gamma[0];
    out[0] = std::sqrt(v) * gs.next();
    for (std::int64_t i = 1; i < n; ++i) {
        double acc = gamma[static_cast<std::size_t>(i)];
        for (std::int64_t j = 1; j < i; ++j)
            acc -= phi[static_cast<std::size_t>(j - 1)] * gamma[static_cast<std::size_t>(i - j)];
        double kappa = acc / v;
        for (std::int64_t j = 0; j < i - 1; ++j)
            phi_new[static_cast<std::size_t>(j)] =
                phi[static_cast<std::size_t>(j)] -
                kappa * phi[static_cast<std::size_t>(i - 2 - j)];
        phi_new[static_cast<std::size_t>(i - 1)] = kappa;
        std::swap(phi, phi_new);
        v *= (1.0 - kappa * kappa);
        require(v > 0.0, ErrorCode::embedding_failure,
                "Durbin-Levinson variance collapsed");
        double mean = 0.0;
        for (std::int64_t j = 0; j < i; ++j)
            mean += phi[static_cast<std::size_t>(j)] * out[static_cast<std::size_t>(i - 1 - j)];
        out[static_cast<std::size_t>(i)] = mean + std::sqrt(v) * gs.next();
    }
    return out;
}

} // namespace

SamplePath simulate_fbm_hosking(const FbmSpec& spec) {
    GaussianStream gs(spec.seed);
    std::vector<double> fgn = hosking_fgn(spec.h.value(), spec.n_steps, gs);
    const double step_scale =
        std::pow(static_cast<double>(spec.n_steps), -spec.h.value());
    std::vector<double> vals(static_cast<std::size_t>(spec.n_steps) + 1);
    vals[0] = 0.0;
    double run = 0.0;
    for (std::int64_t j = 0; j < spec.n_steps; ++j) {
        run += fgn[static_cast<std::size_t>(j)] * step_scale;
        vals[static_cast<std::size_t>(j) + 1] = run;
    }
    return SamplePath(spec.n_steps, std::move(vals));
}

double fgn_autocov(double hurst, std::int64_t lag) {
    double k = static_cast<double>(lag < 0 ? -lag : lag);
    double e = 2.0 * hurst;
    return 0.5 * (std::pow(k + 1.0, e) - 2.0 * std::pow(k, e) +
                  std::pow(std::abs(k - 1.0), e));
}

SamplePath simulate_fbm(const FbmSpec& spec) {
    const std::int64_t n = spec.n_steps;
    const double H = spec.h.value();
    GaussianStream gs(spec.seed);

    std::vector<double> fgn;

    if (n == 1) {
        fgn.assign(1, gs.next());
    } else {
        // Circulant embedding of size 2n.
        const std::int64_t m = 2 * n;
        FftwBuffer buf(static_cast<std::size_t>(m));
        for (std::int64_t j = 0; j <= n; ++j) {
            buf.data[j][0] = fgn_autocov(H, j);
            buf.data[j][1] = 0.0;
        }
        for (std::int64_t j = n + 1; j < m; ++j) {
            buf.data[j][0] = buf.data[m - j][0];
            buf.data[j][1] = 0.0;
        }

        fftw_plan plan;
        {
            std::lock_guard<std::mutex> lock(g_fftw_mutex);
            plan = fftw_plan_dft_1d(static_cast<int>(m), buf.data, buf.data,
                                    FFTW_FORWARD, FFTW_ESTIMATE);
        }
        fftw_execute(plan);

        double max_eig = 0.0, min_eig = 0.0;
        for (std::int64_t j = 0; j < m; ++j) {
            max_eig = std::max(max_eig, buf.data[j][0]);
            min_eig = std::min(min_eig, buf.data[j][0]);
        }

        if (min_eig < -1e-9 * max_eig) {
            {
                std::lock_guard<std::mutex> lock(g_fftw_mutex);
                fftw_destroy_plan(plan);
            }
            require(n <= 8192, ErrorCode::embedding_failure,
                    "circulant embedding not nonnegative definite and n too large "
                    "for the dense fallback");
            fgn = hosking_fgn(H, n, gs);
        } else {
            std::vector<double> lam(static_cast<std::size_t>(m));
            for (std::int64_t j = 0; j < m; ++j)
                lam[static_cast<std::size_t>(j)] = std::max(0.0, buf.data[j][0]);

            const double scale = 1.0 / std::sqrt(static_cast<double>(m));
            buf.data[0][0] = std::sqrt(lam[0]) * scale * gs.next();
            buf.data[0][1] = 0.0;
            for (std::int64_t j = 1; j < n; ++j) {
                double r = std::sqrt(0.5 * lam[static_cast<std::size_t>(j)]) * scale;
                double a = r * gs.next();
                double b = r * gs.next();
                buf.data[j][0] = a;
                buf.data[j][1] = b;
                buf.data[m - j][0] = a;
                buf.data[m - j][1] = -b;
            }
            buf.data[n][0] = std::sqrt(lam[static_cast<std::size_t>(n)]) * scale * gs.next();
            buf.data[n][1] = 0.0;

            fftw_execute(plan);
            {
                std::lock_guard<std::mutex> lock(g_fftw_mutex);
                fftw_destroy_plan(plan);
            }
            fgn.resize(static_cast<std::size_t>(n));
            for (std::int64_t j = 0; j < n; ++j)
                fgn[static_cast<std::size_t>(j)] = buf.data[j][0];
        }
    }

    // Rescale unit-spacing fGn to mesh 1/n and accumulate.
    const double step_scale = std::pow(static_cast<double>(n), -H);
    std::vector<double> vals(static_cast<std::size_t>(n) + 1);
    vals[0] = 0.0;
    double run = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
        run += fgn[static_cast<std::size_t>(j)] * step_scale;
        vals[static_cast<std::size_t>(j) + 1] = run;
    }
    return SamplePath(n, std::move(vals));
}

} // namespace rblab
