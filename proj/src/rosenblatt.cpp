#include "rosenblatt.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fbm.hpp"
#include "kernel.hpp"
#include "rng.hpp"
#include "threads.hpp"

namespace rblab {

namespace {

constexpr double kGl3Nodes[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr double kGl3Weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

// Deterministic dot product with a fixed four-lane reduction order, so
// results do not depend on batch shape or thread count.
inline double dot_fixed(const double* g, const double* w, std::int64_t n) {
    double y0 = 0, y1 = 0, y2 = 0, y3 = 0;
    std::int64_t i = 0;
    for (; i + 4 <= n; i += 4) {
        y0 += g[i] * w[i];
        y1 += g[i + 1] * w[i + 1];
        y2 += g[i + 2] * w[i + 2];
        y3 += g[i + 3] * w[i + 3];
    }
    for (; i < n; ++i) y0 += g[i] * w[i];
    return (y0 + y1) + (y2 + y3);
}

// Two-point Gauss rule for a positive weight given its first four moments:
// nodes are the roots of the orthogonal quadratic.
struct TwoPointRule {
    double node[2];
    double weight[2];
};

TwoPointRule gauss2_from_moments(double m0, double m1, double m2, double m3) {
    double den = m2 * m0 - m1 * m1;
    double b = (m3 * m0 - m1 * m2) / den;
    double c = (b * m1 - m2) / m0;
    double disc = b * b - 4.0 * c;
    if (disc < 0.0) disc = 0.0;
    double root = std::sqrt(disc);
    TwoPointRule r;
    r.node[0] = 0.5 * (b - root);
    r.node[1] = 0.5 * (b + root);
    if (r.node[1] - r.node[0] > 1e-300) {
        r.weight[0] = (m1 - m0 * r.node[1]) / (r.node[0] - r.node[1]);
        r.weight[1] = m0 - r.weight[0];
    } else {
        r.weight[0] = m0;
        r.weight[1] = 0.0;
    }
    return r;
}

} // namespace

std::int64_t default_inner_resolution(std::int64_t n_steps, std::int64_t budget) {
    for (std::int64_t c : {4, 3, 2, 1}) {
        std::int64_t m = c * n_steps;
        if (m * m <= budget / n_steps) return m;
    }
    fail(ErrorCode::resource_limit,
         "no inner resolution M >= N fits the synthesis budget at N = " +
             std::to_string(n_steps));
}

RosenblattEngine::RosenblattEngine(Hurst h, std::int64_t n_steps,
                                   std::int64_t inner_resolution, QuadDepth depth,
                                   std::int64_t budget)
    : h_(h), n_(n_steps), m_(inner_resolution) {
    require(n_ >= 1, ErrorCode::invalid_argument, "n_steps must be positive");
    require(m_ >= n_, ErrorCode::invalid_argument,
            "inner_resolution must be at least n_steps");
    require(m_ <= budget / (m_ * n_), ErrorCode::resource_limit,
            "M^2*N = " + std::to_string(m_ * m_ * n_) +
                " exceeds the synthesis budget " + std::to_string(budget));
    c_norm_ = c_h_z(h_);

    const double H = h_.value();
    const double mu = 0.5 * H;
    alpha_ = 0.5 * H - 1.0;
    corr_aa_ = alpha_ * (alpha_ - 1.0) / 24.0;
    corr_mm_ = mu * (mu + 1.0) / 24.0;
    corr_am_ = alpha_ * mu / 12.0;

    build_partition(depth.edge_levels);
    build_rule(depth);
    build_gram_correction(depth.gram_band);
}

double RosenblattEngine::bin_covariance(std::int64_t i, std::int64_t j) const {
    require(i >= 1 && i <= n_ && j >= 1 && j <= n_, ErrorCode::invalid_argument,
            "bad cell index");
    // b_k = sum_{u in cell k} c_u [(g_u . xi)^2 - ||g_u||^2] and
    // Cov((g.xi)^2, (g'.xi)^2) = 2 <g, g'>^2, so only nodes inside the two
    // cells contribute.
    const std::int64_t iu0 = cell_first_[static_cast<std::size_t>(i - 1)];
    const std::int64_t iu1 = cell_first_[static_cast<std::size_t>(i)];
    const std::int64_t jv0 = cell_first_[static_cast<std::size_t>(j - 1)];
    const std::int64_t jv1 = cell_first_[static_cast<std::size_t>(j)];
    double total = 0.0;
    for (std::int64_t u = iu0; u < iu1; ++u) {
        const double uu = node_u_[static_cast<std::size_t>(u)];
        const std::int64_t mu = node_m_[static_cast<std::size_t>(u)];
        for (std::int64_t v = jv0; v < jv1; ++v) {
            const double vv = node_u_[static_cast<std::size_t>(v)];
            const std::int64_t len = std::min(mu, node_m_[static_cast<std::size_t>(v)]);
            double dot = 0.0;
            for (std::int64_t p = 0; p < len; ++p)
                dot += g_cell(uu, p) * g_cell(vv, p);
            total += 2.0 * node_coeff_[static_cast<std::size_t>(u)] *
                     node_coeff_[static_cast<std::size_t>(v)] * dot * dot;
        }
    }
    return total;
}

void RosenblattEngine::build_gram_correction(int band) {
    band_ = 0;
    if (band < 1 || n_ < 8 * band) return;
    const std::int64_t B = band;
    const std::int64_t span = 2 * B;  // measured lags 0..2B
    const double H = h_.value();
    const double d2h = std::pow(1.0 / static_cast<double>(n_), 2.0 * H);

    // Measure Cov(b_i, b_j) on anchor windows of the true geometry; the raw
    // bins are close to stationary away from t = 0, so per-lag averages give
    // a Toeplitz band.
    std::vector<double> gb(static_cast<std::size_t>(span) + 1, 0.0);
    std::vector<double> gb_count(static_cast<std::size_t>(span) + 1, 0.0);
    std::vector<std::int64_t> anchors;
    if (n_ >= 4 * (span + 2)) {
        anchors = {n_ / 4, n_ / 2, (3 * n_) / 4};
    } else {
        anchors = {std::max<std::int64_t>(span + 2, n_ / 2)};
    }
    for (std::int64_t i0 : anchors) {
        const std::int64_t c_lo = i0 - span;
        const std::int64_t j0 = cell_first_[static_cast<std::size_t>(c_lo - 1)];
        const std::int64_t j1 = cell_first_[static_cast<std::size_t>(i0)];
        const std::int64_t rows = j1 - j0;
        // g-rows for every node in the window, then pairwise products
        std::vector<std::vector<double>> grows(static_cast<std::size_t>(rows));
        for (std::int64_t r = 0; r < rows; ++r) {
            const double u = node_u_[static_cast<std::size_t>(j0 + r)];
            const std::int64_t m = node_m_[static_cast<std::size_t>(j0 + r)];
            auto& row = grows[static_cast<std::size_t>(r)];
            row.resize(static_cast<std::size_t>(m));
            for (std::int64_t p = 0; p < m; ++p)
                row[static_cast<std::size_t>(p)] = g_cell(u, p);
        }
        for (std::int64_t ci = c_lo; ci <= i0; ++ci) {
            for (std::int64_t cj = ci; cj <= i0; ++cj) {
                const std::int64_t lag = cj - ci;
                double total = 0.0;
                for (std::int64_t u = cell_first_[static_cast<std::size_t>(ci - 1)];
                     u < cell_first_[static_cast<std::size_t>(ci)]; ++u) {
                    const auto& gu = grows[static_cast<std::size_t>(u - j0)];
                    for (std::int64_t v = cell_first_[static_cast<std::size_t>(cj - 1)];
                         v < cell_first_[static_cast<std::size_t>(cj)]; ++v) {
                        const auto& gv = grows[static_cast<std::size_t>(v - j0)];
                        const std::size_t len = std::min(gu.size(), gv.size());
                        double dot = 0.0;
                        for (std::size_t p = 0; p < len; ++p) dot += gu[p] * gv[p];
                        total += 2.0 * node_coeff_[static_cast<std::size_t>(u)] *
                                 node_coeff_[static_cast<std::size_t>(v)] * dot * dot;
                    }
                }
                gb[static_cast<std::size_t>(lag)] += total;
                gb_count[static_cast<std::size_t>(lag)] += 1.0;
            }
        }
    }
    for (std::int64_t lag = 0; lag <= span; ++lag)
        gb[static_cast<std::size_t>(lag)] /= gb_count[static_cast<std::size_t>(lag)];

    auto gt = [&](std::int64_t lag) { return fgn_autocov(H, lag) * d2h; };

    // Row-by-row innovations: delta_i = sum sigma_k delta_k + beta_i b_i with
    // Cov(delta) matching gt on the band.  D(j, k) = Cov(b_j, delta_k) kept
    // for j - k in [0, 2B].
    std::vector<double> dmat(static_cast<std::size_t>((n_ + 1) * (span + 1)), 0.0);
    auto dref = [&](std::int64_t j, std::int64_t k) -> double& {
        return dmat[static_cast<std::size_t>(k * (span + 1) + (j - k))];
    };
    corr_rows_.assign(static_cast<std::size_t>(n_ * (B + 1)), 0.0);

    std::vector<double> smat(static_cast<std::size_t>(B * B));
    std::vector<double> rvec(static_cast<std::size_t>(B));
    std::vector<double> qvec(static_cast<std::size_t>(B));
    std::vector<double> avec(static_cast<std::size_t>(B));
    std::vector<double> cvec(static_cast<std::size_t>(B));

    for (std::int64_t i = 1; i <= n_; ++i) {
        const std::int64_t wlen = std::min<std::int64_t>(B, i - 1);
        double* row = corr_rows_.data() + (i - 1) * (B + 1);

        double beta;
        if (wlen == 0) {
            beta = std::sqrt(gt(0) / gb[0]);
        } else {
            for (std::int64_t a = 0; a < wlen; ++a) {
                const std::int64_t ka = i - wlen + a;
                rvec[static_cast<std::size_t>(a)] = gt(i - ka);
                qvec[static_cast<std::size_t>(a)] = dref(i, ka);
                for (std::int64_t b = 0; b < wlen; ++b)
                    smat[static_cast<std::size_t>(a * wlen + b)] =
                        gt(std::abs(a - b));
            }
            // Cholesky solve for a = S^-1 r and c = S^-1 q
            for (std::int64_t a = 0; a < wlen; ++a) {
                for (std::int64_t b = 0; b <= a; ++b) {
                    double acc = smat[static_cast<std::size_t>(a * wlen + b)];
                    for (std::int64_t k = 0; k < b; ++k)
                        acc -= smat[static_cast<std::size_t>(a * wlen + k)] *
                               smat[static_cast<std::size_t>(b * wlen + k)];
                    if (a == b) {
                        require(acc > 0.0, ErrorCode::internal_error,
                                "Gram correction: window covariance not SPD");
                        smat[static_cast<std::size_t>(a * wlen + b)] = std::sqrt(acc);
                    } else {
                        smat[static_cast<std::size_t>(a * wlen + b)] =
                            acc / smat[static_cast<std::size_t>(b * wlen + b)];
                    }
                }
            }
            auto chol_solve = [&](const std::vector<double>& rhs,
                                  std::vector<double>& out) {
                for (std::int64_t a = 0; a < wlen; ++a) {
                    double acc = rhs[static_cast<std::size_t>(a)];
                    for (std::int64_t k = 0; k < a; ++k)
                        acc -= smat[static_cast<std::size_t>(a * wlen + k)] *
                               out[static_cast<std::size_t>(k)];
                    out[static_cast<std::size_t>(a)] =
                        acc / smat[static_cast<std::size_t>(a * wlen + a)];
                }
                for (std::int64_t a = wlen - 1; a >= 0; --a) {
                    double acc = out[static_cast<std::size_t>(a)];
                    for (std::int64_t k = a + 1; k < wlen; ++k)
                        acc -= smat[static_cast<std::size_t>(k * wlen + a)] *
                               out[static_cast<std::size_t>(k)];
                    out[static_cast<std::size_t>(a)] =
                        acc / smat[static_cast<std::size_t>(a * wlen + a)];
                }
            };
            chol_solve(rvec, avec);
            chol_solve(qvec, cvec);

            double ar = 0.0, qc = 0.0;
            for (std::int64_t a = 0; a < wlen; ++a) {
                ar += avec[static_cast<std::size_t>(a)] * rvec[static_cast<std::size_t>(a)];
                qc += qvec[static_cast<std::size_t>(a)] * cvec[static_cast<std::size_t>(a)];
            }
            double var_w = gb[0] - qc;
            double num = gt(0) - ar;
            require(var_w > 1e-14 * gb[0] && num > 0.0, ErrorCode::internal_error,
                    "Gram correction: degenerate innovation variance");
            beta = std::sqrt(num / var_w);
            for (std::int64_t a = 0; a < wlen; ++a)
                row[a] = avec[static_cast<std::size_t>(a)] -
                         beta * cvec[static_cast<std::size_t>(a)];
        }
        row[B] = beta;

        // propagate D(j, i) = Cov(b_j, delta_i) for the rows ahead
        for (std::int64_t j = i; j <= std::min(n_, i + span); ++j) {
            double acc = (j - i <= span) ? beta * gb[static_cast<std::size_t>(j - i)]
                                         : 0.0;
            for (std::int64_t a = 0; a < wlen; ++a) {
                const std::int64_t ka = i - wlen + a;
                if (j - ka <= span) acc += row[a] * dref(j, ka);
            }
            dref(j, i) = acc;
        }
    }
    band_ = B;
}

void RosenblattEngine::build_partition(int edge_levels) {
    const double mu = 0.5 * h_.value();
    const double w = 1.0 / static_cast<double>(m_);
    lo_.clear();
    widths_.clear();
    if (edge_levels < 0) edge_levels = 0;

    // First uniform cell split dyadically toward 0: [0, w*2^-k], then
    // doubling pieces up to w; remaining cells uniform.
    double prev = 0.0;
    for (int lev = edge_levels; lev >= 1; --lev) {
        double hi = w * std::ldexp(1.0, -lev);
        lo_.push_back(prev);
        widths_.push_back(hi - prev);
        prev = hi;
    }
    for (std::int64_t p = 1; p <= m_; ++p) {
        double hi = static_cast<double>(p) * w;
        lo_.push_back(prev);
        widths_.push_back(hi - prev);
        prev = hi;
    }

    const std::size_t cells = widths_.size();
    sqrt_w_.resize(cells);
    x_mid_.resize(cells);
    xw_mid_.resize(cells);
    for (std::size_t p = 0; p < cells; ++p) {
        sqrt_w_[p] = std::sqrt(widths_[p]);
        x_mid_[p] = lo_[p] + 0.5 * widths_[p];
        xw_mid_[p] = std::pow(x_mid_[p], -mu);
    }

    // Innermost cell: two-point rule for the weight x^-mu on [0, delta]; the
    // companion (u-x)^alpha factor is smooth there for every node we keep.
    {
        double e = 1.0 - mu;
        double b = widths_[0];
        double m0 = std::pow(b, e) / e;
        double m1 = std::pow(b, e + 1.0) / (e + 1.0);
        double m2 = std::pow(b, e + 2.0) / (e + 2.0);
        double m3 = std::pow(b, e + 3.0) / (e + 3.0);
        TwoPointRule r = gauss2_from_moments(m0, m1, m2, m3);
        first_cell_rule_.node[0] = r.node[0];
        first_cell_rule_.node[1] = r.node[1];
        first_cell_rule_.weight[0] = r.weight[0];
        first_cell_rule_.weight[1] = r.weight[1];
    }
}

// Cell average of x^(-H/2) (u - x)_+^(H/2 - 1), scaled by sqrt(width):
//   far cells: midpoint value with the second-order product-curvature factor,
//   cells near the (u - x) singularity: exact-weight two-point Gauss in
//   s = u - x (closed-form moments),
//   innermost cell: exact-weight two-point Gauss in x^(-H/2).
double RosenblattEngine::g_cell(double u, std::int64_t p) const {
    const std::size_t idx = static_cast<std::size_t>(p);
    const double lo = lo_[idx];
    if (u <= lo) return 0.0;
    const double w = widths_[idx];
    const double hi = lo + w;
    const double mu = 0.5 * h_.value();

    if (p == 0) {
        double acc = 0.0;
        for (int i = 0; i < 2; ++i) {
            double x = first_cell_rule_.node[i];
            if (u <= x) continue;
            acc += first_cell_rule_.weight[i] * std::pow(u - x, alpha_);
        }
        return acc / w * sqrt_w_[idx];
    }

    if (u - hi >= 3.0 * w) {
        double d = u - x_mid_[idx];
        double r = w / d;
        double q = w / x_mid_[idx];
        double corr = 1.0 + corr_aa_ * r * r + corr_mm_ * q * q + corr_am_ * r * q;
        return std::pow(d, alpha_) * xw_mid_[idx] * corr * sqrt_w_[idx];
    }

    // Near the singular edge: s = u - x over [s0, s1], weight s^alpha exact.
    double s1 = u - lo;
    double s0 = u > hi ? u - hi : 0.0;
    double e = alpha_ + 1.0;
    double p1 = std::pow(s1, e);
    double p0 = s0 > 0.0 ? std::pow(s0, e) : 0.0;
    double m0 = (p1 - p0) / e;
    double m1 = (p1 * s1 - p0 * s0) / (e + 1.0);
    double m2 = (p1 * s1 * s1 - p0 * s0 * s0) / (e + 2.0);
    double m3 = (p1 * s1 * s1 * s1 - p0 * s0 * s0 * s0) / (e + 3.0);
    TwoPointRule rule = gauss2_from_moments(m0, m1, m2, m3);
    double acc = 0.0;
    for (int i = 0; i < 2; ++i) {
        double x = u - rule.node[i];
        if (x <= 0.0) continue;
        acc += rule.weight[i] * std::pow(x, -mu);
    }
    return acc / w * sqrt_w_[idx];
}

void RosenblattEngine::build_rule(QuadDepth depth) {
    const double H = h_.value();
    // One-node stub rule exact for (u-a)^(alpha+1) and for constants; the
    // cell-averaged factor of the newly activated cell rises with that power.
    const double stub_e = alpha_ + 1.0;
    const double stub_ratio = std::pow(stub_e + 1.0, -1.0 / stub_e);

    std::vector<double> cuts;
    cuts.reserve(widths_.size() + static_cast<std::size_t>(n_));
    for (std::size_t p = 0; p < widths_.size(); ++p)
        cuts.push_back(lo_[p] + widths_[p]);
    for (std::int64_t k = 1; k <= n_; ++k)
        cuts.push_back(static_cast<double>(k) / static_cast<double>(n_));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    node_u_.clear();
    node_coeff_.clear();
    node_m_.clear();

    auto active_cells = [&](double u) {
        auto it = std::upper_bound(lo_.begin(), lo_.end(), u);
        std::int64_t m = static_cast<std::int64_t>(it - lo_.begin());
        // lo < u strictly; upper_bound uses <=, adjust exact hits
        while (m > 0 && lo_[static_cast<std::size_t>(m - 1)] >= u) --m;
        return m;
    };

    auto add_node = [&](double u, double weight) {
        node_u_.push_back(u);
        node_coeff_.push_back(c_norm_ * weight * std::pow(u, H));
        node_m_.push_back(active_cells(u));
    };

    auto add_gl_cell = [&](double a, double b) {
        double c = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int i = 0; i < depth.gauss_points && i < 3; ++i)
            add_node(c + half * kGl3Nodes[i], half * kGl3Weights[i]);
    };

    // Segment [delta, cut_1], [cut_1, cut_2], ...; the sliver (0, delta)
    // below the innermost cell boundary only feeds that cell's diagonal block
    // with O(delta^{2H}) variance and is left out.
    double a = widths_[0];
    for (std::size_t ci = 0; ci < cuts.size(); ++ci) {
        double b = cuts[ci];
        if (!(b > a)) continue;
        if (a >= 1.0) break;
        double width = b - a;
        if (width < 1e-300) continue;
        double lo = a + width * std::ldexp(1.0, -depth.levels);
        add_node(a + (lo - a) * stub_ratio, lo - a);
        for (int lev = depth.levels; lev >= 1; --lev) {
            double left = a + width * std::ldexp(1.0, -lev);
            double right = (lev == 1) ? b : a + width * std::ldexp(1.0, -(lev - 1));
            add_gl_cell(left, right);
        }
        a = b;
    }

    cell_first_.assign(static_cast<std::size_t>(n_) + 1, 0);
    std::size_t j = 0;
    for (std::int64_t k = 1; k <= n_; ++k) {
        double t = static_cast<double>(k) / static_cast<double>(n_);
        while (j < node_u_.size() && node_u_[j] <= t) ++j;
        cell_first_[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(j);
    }
    require(j == node_u_.size(), ErrorCode::internal_error,
            "quadrature nodes extend past t = 1");
}

std::vector<SamplePath> RosenblattEngine::simulate(
    std::span<const std::uint64_t> seeds) const {
    const std::int64_t S = static_cast<std::int64_t>(seeds.size());
    if (S == 0) return {};
    const std::int64_t E = cell_count();
    const std::int64_t N = n_;
    const std::int64_t J = node_count();

    // Standard normals xi_p; dW_p = sqrt(width_p) xi_p is folded into g.
    std::vector<double> xi(static_cast<std::size_t>(S * E));
    parallel_for_blocks(S, 1, [&](std::int64_t s0, std::int64_t s1) {
        for (std::int64_t s = s0; s < s1; ++s) {
            GaussianStream gs(seeds[static_cast<std::size_t>(s)]);
            gs.fill(xi.data() + s * E, static_cast<std::size_t>(E));
        }
    });

    std::vector<double> bins(static_cast<std::size_t>(S * N), 0.0);

    // Block tasks own whole observation cells so every bin is written by a
    // single task; ~1024 quadrature rows per task keeps buffers cache sized.
    const std::int64_t chunk = 2048;
    const std::int64_t cells_per_block = std::max<std::int64_t>(
        1, std::min<std::int64_t>(N, 1024 * N / std::max<std::int64_t>(J, 1)));

    parallel_for_blocks(N, cells_per_block, [&](std::int64_t k0, std::int64_t k1) {
        const std::int64_t j0 = cell_first_[static_cast<std::size_t>(k0)];
        const std::int64_t j1 = cell_first_[static_cast<std::size_t>(k1)];
        const std::int64_t rows = j1 - j0;
        if (rows == 0) {
            for (std::int64_t s = 0; s < S; ++s)
                for (std::int64_t k = k0; k < k1; ++k)
                    bins[static_cast<std::size_t>(s * N + k)] = 0.0;
            return;
        }

        std::vector<double> g(static_cast<std::size_t>(rows * chunk));
        std::vector<double> acc_y(static_cast<std::size_t>(rows * S), 0.0);
        std::vector<double> norm(static_cast<std::size_t>(rows), 0.0);
        const std::int64_t m_max = node_m_[static_cast<std::size_t>(j1 - 1)];

        for (std::int64_t c0 = 0; c0 < m_max; c0 += chunk) {
            const std::int64_t clen = std::min(chunk, m_max - c0);
            for (std::int64_t r = 0; r < rows; ++r) {
                const double u = node_u_[static_cast<std::size_t>(j0 + r)];
                const std::int64_t mr = node_m_[static_cast<std::size_t>(j0 + r)];
                const std::int64_t len = std::clamp<std::int64_t>(mr - c0, 0, clen);
                double* grow = g.data() + r * chunk;
                double nacc = 0.0;
                for (std::int64_t p = 0; p < len; ++p) {
                    double v = g_cell(u, c0 + p);
                    grow[p] = v;
                    nacc += v * v;
                }
                norm[static_cast<std::size_t>(r)] += nacc;
            }
            for (std::int64_t s = 0; s < S; ++s) {
                const double* w = xi.data() + s * E + c0;
                for (std::int64_t r = 0; r < rows; ++r) {
                    const std::int64_t mr = node_m_[static_cast<std::size_t>(j0 + r)];
                    const std::int64_t len = std::clamp<std::int64_t>(mr - c0, 0, clen);
                    if (len <= 0) continue;
                    acc_y[static_cast<std::size_t>(r * S + s)] +=
                        dot_fixed(g.data() + r * chunk, w, len);
                }
            }
        }

        // I_2 of the step kernel: (g . xi)^2 - ||g||^2 per node (the second
        // term compensates the diagonal Hermite blocks), folded per
        // observation cell in fixed node order.
        for (std::int64_t s = 0; s < S; ++s) {
            std::int64_t r = 0;
            for (std::int64_t k = k0; k < k1; ++k) {
                const std::int64_t stop =
                    cell_first_[static_cast<std::size_t>(k + 1)] - j0;
                double acc = 0.0;
                for (; r < stop; ++r) {
                    const double y = acc_y[static_cast<std::size_t>(r * S + s)];
                    acc += node_coeff_[static_cast<std::size_t>(j0 + r)] *
                           (y * y - norm[static_cast<std::size_t>(r)]);
                }
                bins[static_cast<std::size_t>(s * N + k)] = acc;
            }
        }
    });

    std::vector<SamplePath> paths(static_cast<std::size_t>(S));
    parallel_for_blocks(S, 1, [&](std::int64_t s0, std::int64_t s1) {
        std::vector<double> delta(static_cast<std::size_t>(N));
        for (std::int64_t s = s0; s < s1; ++s) {
            const double* b = bins.data() + s * N;
            if (band_ > 0) {
                for (std::int64_t i = 1; i <= N; ++i) {
                    const double* row = corr_rows_.data() + (i - 1) * (band_ + 1);
                    const std::int64_t wlen = std::min<std::int64_t>(band_, i - 1);
                    double acc = row[band_] * b[i - 1];
                    for (std::int64_t a = 0; a < wlen; ++a)
                        acc += row[a] * delta[static_cast<std::size_t>(i - wlen + a - 1)];
                    delta[static_cast<std::size_t>(i - 1)] = acc;
                }
            } else {
                for (std::int64_t i = 0; i < N; ++i)
                    delta[static_cast<std::size_t>(i)] = b[i];
            }
            std::vector<double> vals(static_cast<std::size_t>(N) + 1);
            vals[0] = 0.0;
            double run = 0.0;
            for (std::int64_t k = 0; k < N; ++k) {
                run += delta[static_cast<std::size_t>(k)];
                vals[static_cast<std::size_t>(k) + 1] = run;
            }
            paths[static_cast<std::size_t>(s)] = SamplePath(N, std::move(vals));
        }
    });
    return paths;
}

double RosenblattEngine::discrete_kernel(std::int64_t k_obs, std::int64_t p,
                                         std::int64_t q) const {
    require(k_obs >= 1 && k_obs <= n_, ErrorCode::invalid_argument, "bad cell index");
    require(p >= 1 && p <= cell_count() && q >= 1 && q <= cell_count(),
            ErrorCode::invalid_argument, "bad cell index");
    // p == q is allowed: the cell-averaged step kernel is finite on diagonal
    // blocks (unlike the pointwise kernel_L).
    const std::int64_t jmax = cell_first_[static_cast<std::size_t>(k_obs)];
    const double scale =
        1.0 / (sqrt_w_[static_cast<std::size_t>(p - 1)] *
               sqrt_w_[static_cast<std::size_t>(q - 1)]);
    double acc = 0.0;
    for (std::int64_t j = 0; j < jmax; ++j) {
        double u = node_u_[static_cast<std::size_t>(j)];
        double gp = g_cell(u, p - 1);
        if (gp == 0.0) continue;
        double gq = g_cell(u, q - 1);
        if (gq == 0.0) continue;
        acc += node_coeff_[static_cast<std::size_t>(j)] * gp * gq;
    }
    return acc * scale;
}

double RosenblattEngine::discrete_covariance(std::int64_t k_obs,
                                             std::int64_t l_obs) const {
    require(k_obs >= 0 && k_obs <= n_ && l_obs >= 0 && l_obs <= n_,
            ErrorCode::invalid_argument, "bad cell index");
    if (k_obs == 0 || l_obs == 0) return 0.0;
    // With the compensated diagonal, E Z(t_k) Z(t_l) = 2 <PL_k, PL_l> =
    // 2 sum_{j,i} c_j c_i (g_j . g_i)^2 (cell widths folded into g).
    const std::int64_t jk = cell_first_[static_cast<std::size_t>(k_obs)];
    const std::int64_t jl = cell_first_[static_cast<std::size_t>(l_obs)];
    const std::int64_t jmax = std::max(jk, jl);

    std::vector<std::vector<double>> grows(static_cast<std::size_t>(jmax));
    for (std::int64_t j = 0; j < jmax; ++j) {
        const double u = node_u_[static_cast<std::size_t>(j)];
        const std::int64_t mj = node_m_[static_cast<std::size_t>(j)];
        auto& row = grows[static_cast<std::size_t>(j)];
        row.resize(static_cast<std::size_t>(mj));
        for (std::int64_t p = 0; p < mj; ++p)
            row[static_cast<std::size_t>(p)] = g_cell(u, p);
    }

    double total = 0.0;
    for (std::int64_t j = 0; j < jk; ++j) {
        const auto& gj = grows[static_cast<std::size_t>(j)];
        for (std::int64_t i = 0; i < jl; ++i) {
            const auto& gi = grows[static_cast<std::size_t>(i)];
            const std::size_t len = std::min(gj.size(), gi.size());
            double dot = 0.0;
            for (std::size_t p = 0; p < len; ++p) dot += gj[p] * gi[p];
            total += node_coeff_[static_cast<std::size_t>(j)] *
                     node_coeff_[static_cast<std::size_t>(i)] * dot * dot;
        }
    }
    return 2.0 * total;
}

SamplePath simulate_rosenblatt(const RosenblattSpec& spec, std::int64_t budget) {
    RosenblattEngine engine(spec.h, spec.n_steps, spec.inner_resolution, {}, budget);
    std::uint64_t seed = spec.seed;
    auto paths = engine.simulate(std::span<const std::uint64_t>(&seed, 1));
    return std::move(paths.front());
}

std::vector<SamplePath> simulate_rosenblatt_batch(Hurst h, std::int64_t n_steps,
                                                  std::int64_t inner_resolution,
                                                  std::span<const std::uint64_t> seeds,
                                                  std::int64_t budget) {
    RosenblattEngine engine(h, n_steps, inner_resolution, {}, budget);
    return engine.simulate(seeds);
}

} // namespace rblab
