#include <doctest.h>

#include <cmath>
#include <random>

#include "kernel.hpp"

using namespace rblab;

namespace {

int no_limit_k(int level) {
    // |x| up to ~4 keeps tanh(pi/2 sinh x) within 1 - 1e-14.
    return 4 << level;
}

// Independent oracle for the singular inner integral: tanh-sinh (double
// exponential) quadrature on the original integrand over [lo, t].  The
// distance to the singular endpoint is evaluated through 1 + tanh(w) =
// 2/(1 + exp(-2w)) so no cancellation spoils the singular factor.
double tanh_sinh_kernel_oracle(double t, double x1, double x2, double H) {
    double lo = std::max(x1, x2);
    double hi = std::min(x1, x2);
    double gap = lo - hi;
    double alpha = 0.5 * H - 1.0;
    double half = 0.5 * (t - lo);
    double prev = 0.0, result = 0.0;
    const double pi_half = 1.5707963267948966;
    for (int level = 4; level <= 12; ++level) {
        double step = std::ldexp(1.0, -level);
        double sum = 0.0;
        for (int k = -no_limit_k(level); k <= no_limit_k(level); ++k) {
            double x = k * step;
            double w = pi_half * std::sinh(x);
            double dist_lo = half * 2.0 / (1.0 + std::exp(-2.0 * w));   // u - lo
            double dist_hi = half * 2.0 / (1.0 + std::exp(2.0 * w));    // t - u
            if (dist_lo <= 0.0 || dist_hi <= 0.0) continue;
            double weight = pi_half * std::cosh(x) /
                            std::pow(std::cosh(w), 2);
            double u = lo + dist_lo;
            sum += weight * std::pow(u, H) * std::pow(dist_lo, alpha) *
                   std::pow(gap + dist_lo, alpha);
        }
        result = sum * step * half;
        if (level > 6 && std::abs(result - prev) < 1e-13 * std::abs(result)) break;
        prev = result;
    }
    double a = 1.0 - H, b = 0.5 * H;
    double beta = std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    double c = std::sqrt(2.0 * H * (2.0 * H - 1.0)) / (2.0 * beta);
    return c * std::pow(x1, -0.5 * H) * std::pow(x2, -0.5 * H) * result;
}

} // namespace

TEST_CASE("c_h_z matches arbitrary-precision Beta evaluations") {
    // Frozen from mpmath (40 dps): sqrt(2H(2H-1)) / (2 B(1-H, H/2)).
    CHECK(c_h_z(Hurst(0.75)) == doctest::Approx(0.072276572924505137418).epsilon(1e-12));
    CHECK(c_h_z(Hurst(0.9)) == doctest::Approx(0.051788118694047594154).epsilon(1e-12));
    CHECK(c_h_z(Hurst(0.6)) == doctest::Approx(0.047915610767686744768).epsilon(1e-12));
}

TEST_CASE("c_h_z vanishes toward H = 1/2 and stays positive") {
    double prev = c_h_z(Hurst(0.500001));
    CHECK(prev > 0.0);
    CHECK(prev < 1e-2);  // sqrt(2H(2H-1)) -> 0
    for (double h : {0.55, 0.65, 0.75, 0.85, 0.95}) CHECK(c_h_z(Hurst(h)) > 0.0);
}

TEST_CASE("Hurst range is enforced") {
    CHECK_THROWS_AS(Hurst(0.5), Error);
    CHECK_THROWS_AS(Hurst(1.0), Error);
    CHECK_THROWS_AS(Hurst(1.2), Error);
    CHECK_NOTHROW(Hurst(0.500001));
    CHECK_NOTHROW(Hurst(0.999999));
}

TEST_CASE("kernel_L vanishes outside the support") {
    Hurst h(0.75);
    CHECK(kernel_L(0.5, 0.7, 0.1, h) == 0.0);
    CHECK(kernel_L(0.5, 0.1, 0.7, h) == 0.0);
    CHECK(kernel_L(0.5, -0.1, 0.2, h) == 0.0);
    CHECK(kernel_L(0.5, 0.5, 0.2, h) == 0.0);  // boundary excluded
    CHECK(kernel_L(0.5, 0.7, 0.7, h) == 0.0);  // diagonal outside support is just 0
}

TEST_CASE("kernel_L rejects the diagonal inside the support") {
    CHECK_THROWS_AS(kernel_L(1.0, 0.3, 0.3, Hurst(0.75)), Error);
    try {
        kernel_L(1.0, 0.3, 0.3, Hurst(0.75));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::diagonal_evaluation);
    }
}

TEST_CASE("kernel_L is symmetric in (x1, x2)") {
    Hurst h(0.8);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.01, 0.99);
    for (int i = 0; i < 25; ++i) {
        double t = 0.3 + 0.7 * unif(rng);
        double a = unif(rng) * t;
        double b = unif(rng) * t;
        if (a == b) continue;
        double lab = kernel_L(t, a, b, h);
        double lba = kernel_L(t, b, a, h);
        CHECK(lab == doctest::Approx(lba).epsilon(1e-12));
    }
}

TEST_CASE("kernel_L grows with t on fixed support points") {
    Hurst h(0.7);
    double prev = 0.0;
    for (double t : {0.45, 0.6, 0.8, 1.0}) {
        double v = kernel_L(t, 0.2, 0.4, h);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("kernel_L matches the tanh-sinh oracle and frozen mpmath values") {
    // Independent adaptive-free oracle plus frozen 30-dps reference points.
    double v = kernel_L(1.0, 0.2, 0.4, Hurst(0.75), 1e-10);
    CHECK(v == doctest::Approx(0.51970819171960309).epsilon(1e-8));
    CHECK(v == doctest::Approx(tanh_sinh_kernel_oracle(1.0, 0.2, 0.4, 0.75)).epsilon(1e-8));

    double v2 = kernel_L(0.9, 0.1, 0.5, Hurst(0.6), 1e-10);
    CHECK(v2 == doctest::Approx(0.36001872702141701).epsilon(1e-8));
    CHECK(v2 == doctest::Approx(tanh_sinh_kernel_oracle(0.9, 0.1, 0.5, 0.6)).epsilon(1e-8));

    double v3 = kernel_L(0.5, 0.05, 0.45, Hurst(0.9), 1e-10);
    CHECK(v3 == doctest::Approx(0.13426478511138548).epsilon(1e-8));
}

TEST_CASE("covariance_oracle closed form") {
    Hurst h(0.75);
    CHECK(covariance_oracle(h, 1.0, 1.0) == doctest::Approx(1.0));
    CHECK(covariance_oracle(h, 0.0, 0.7) == doctest::Approx(0.0));
    CHECK(covariance_oracle(h, 0.5, 0.5) ==
          doctest::Approx(0.35355339059327376).epsilon(1e-14));
    CHECK(covariance_oracle(Hurst(0.6), 0.25, 0.75) ==
          doctest::Approx(0.5 * (std::pow(0.75, 1.2) + std::pow(0.25, 1.2) -
                                 std::pow(0.5, 1.2))).epsilon(1e-14));
    CHECK_THROWS_AS(covariance_oracle(h, -0.1, 0.5), Error);
}
