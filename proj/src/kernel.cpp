#include "kernel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace rblab {

double c_h_z(Hurst h) {
    double H = h.value();
    // B(a,b) = exp(lgamma(a) + lgamma(b) - lgamma(a+b)); all arguments positive.
    double a = 1.0 - H, b = 0.5 * H;
    double beta = std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    return std::sqrt(2.0 * H * (2.0 * H - 1.0)) / (2.0 * beta);
}

double covariance_oracle(Hurst h, double s, double t) {
    require(s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0, ErrorCode::range_error,
            "covariance_oracle expects s, t in [0, 1]");
    double e = 2.0 * h.value();
    return 0.5 * (std::pow(t, e) + std::pow(s, e) - std::pow(std::abs(t - s), e));
}

namespace {

// Gauss-Kronrod 7-15 pair on [-1, 1].
constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <typename F>
void gk15(const F& f, double a, double b, double& result, double& err) {
    double c = 0.5 * (a + b);
    double half = 0.5 * (b - a);
    double fk = 0.0, fg = 0.0;
    double fc = f(c);
    fk += fc * kKronrodWeights[7];
    fg += fc * kGaussWeights[3];
    for (int i = 0; i < 7; ++i) {
        double x = half * kKronrodNodes[i];
        double v = f(c - x) + f(c + x);
        fk += v * kKronrodWeights[i];
        if (i % 2 == 1) fg += v * kGaussWeights[i / 2];
    }
    result = fk * half;
    err = std::abs((fk - fg) * half);
}

// Adaptive bisection driven by the embedded Gauss error estimate.
template <typename F>
double adaptive_gk(const F& f, double a, double b, double rel_tol) {
    struct Segment {
        double a, b, value, err;
    };
    double v0, e0;
    gk15(f, a, b, v0, e0);
    std::vector<Segment> segs{{a, b, v0, e0}};
    double total = v0, total_err = e0;
    const int max_splits = 2000;
    for (int iter = 0; iter < max_splits; ++iter) {
        double tol = rel_tol * std::max(std::abs(total), 1e-300);
        if (total_err <= tol) break;
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].err > segs[worst].err) worst = i;
        Segment seg = segs[worst];
        double mid = 0.5 * (seg.a + seg.b);
        if (mid <= seg.a || mid >= seg.b) break;  // interval exhausted
        Segment left{seg.a, mid, 0, 0}, right{mid, seg.b, 0, 0};
        gk15(f, left.a, left.b, left.value, left.err);
        gk15(f, right.a, right.b, right.value, right.err);
        total += left.value + right.value - seg.value;
        total_err += left.err + right.err - seg.err;
        segs[worst] = left;
        segs.push_back(right);
    }
    return total;
}

} // namespace

double kernel_L(double t, double x1, double x2, Hurst h, double rel_tol) {
    require(std::isfinite(t) && t > 0.0 && t <= 1.0, ErrorCode::range_error,
            "kernel_L expects t in (0, 1]");
    require(std::isfinite(x1) && std::isfinite(x2), ErrorCode::invalid_argument,
            "kernel_L arguments must be finite");
    require(rel_tol > 0.0, ErrorCode::range_error, "rel_tol must be positive");

    // Indicator of (0,t)^2.
    if (!(x1 > 0.0 && x1 < t && x2 > 0.0 && x2 < t)) return 0.0;
    require(x1 != x2, ErrorCode::diagonal_evaluation,
            "kernel_L is not defined on the diagonal x1 == x2 inside (0,t)^2");

    double H = h.value();
    double alpha = 0.5 * H - 1.0;
    double lo = std::max(x1, x2);
    double hi = std::min(x1, x2);

    // Substitute u = lo + tau^(2/H); the (u - lo)^(H/2-1) factor cancels
    // against the Jacobian, leaving (2/H) u^H (u - hi)^(H/2-1) dtau.
    double expo = 2.0 / H;
    double tau_end = std::pow(t - lo, 0.5 * H);
    auto integrand = [&](double tau) {
        double u = lo + std::pow(tau, expo);
        if (u > t) u = t;
        return expo * std::pow(u, H) * std::pow(u - hi, alpha);
    };
    double inner = adaptive_gk(integrand, 0.0, tau_end, rel_tol);

    return c_h_z(h) * std::pow(x1, -0.5 * H) * std::pow(x2, -0.5 * H) * inner;
}

} // namespace rblab
