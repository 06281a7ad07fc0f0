#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"

namespace rblab {

// Hurst index restricted to the open interval (1/2, 1).
class Hurst {
public:
    explicit Hurst(double value) : value_(value) {
        require(std::isfinite(value) && value > 0.5 && value < 1.0,
                ErrorCode::range_error,
                "Hurst parameter must lie strictly inside (0.5, 1), got " +
                    std::to_string(value));
    }

    double value() const noexcept { return value_; }

private:
    double value_;
};

// A trajectory on the uniform grid t_i = i / n_steps of [0, 1].
struct SamplePath {
    std::int64_t n_steps = 0;
    std::vector<double> values;  // n_steps + 1 entries

    SamplePath() = default;
    SamplePath(std::int64_t n, std::vector<double> vals)
        : n_steps(n), values(std::move(vals)) {
        validate();
    }

    void validate() const {
        require(n_steps >= 1, ErrorCode::invalid_argument,
                "sample path needs at least one step");
        require(static_cast<std::int64_t>(values.size()) == n_steps + 1,
                ErrorCode::invalid_argument,
                "sample path must hold n_steps + 1 values");
        for (double v : values)
            require(std::isfinite(v), ErrorCode::invalid_argument,
                    "sample path contains a non-finite value");
    }

    double time_at(std::int64_t i) const {
        return static_cast<double>(i) / static_cast<double>(n_steps);
    }
};

struct RosenblattSpec {
    Hurst h;
    std::int64_t n_steps;
    std::int64_t inner_resolution;  // Wiener grid cells for the double integral
    std::uint64_t seed;

    RosenblattSpec(Hurst hurst, std::int64_t n, std::int64_t m, std::uint64_t s)
        : h(hurst), n_steps(n), inner_resolution(m), seed(s) {
        require(n_steps >= 1, ErrorCode::invalid_argument, "n_steps must be positive");
        require(inner_resolution >= n_steps, ErrorCode::invalid_argument,
                "inner_resolution must be at least n_steps");
    }
};

struct FbmSpec {
    Hurst h;
    std::int64_t n_steps;
    std::uint64_t seed;

    FbmSpec(Hurst hurst, std::int64_t n, std::uint64_t s)
        : h(hurst), n_steps(n), seed(s) {
        require(n_steps >= 1, ErrorCode::invalid_argument, "n_steps must be positive");
    }
};

using NoiseSpec = std::variant<RosenblattSpec, FbmSpec>;

inline std::int64_t noise_steps(const NoiseSpec& spec) {
    return std::visit([](const auto& s) { return s.n_steps; }, spec);
}

inline double noise_hurst(const NoiseSpec& spec) {
    return std::visit([](const auto& s) { return s.h.value(); }, spec);
}

inline std::uint64_t noise_seed(const NoiseSpec& spec) {
    return std::visit([](const auto& s) { return s.seed; }, spec);
}

// Polynomial drift f(x) = sum_j coefficients[j] * x^j with the admissibility
// rule standing in for the Lyapunov growth condition: degree <= 1, or odd
// degree with a negative leading coefficient.
struct DriftPoly {
    std::vector<double> coefficients;

    explicit DriftPoly(std::vector<double> coeffs) : coefficients(std::move(coeffs)) {
        require(!coefficients.empty(), ErrorCode::invalid_argument,
                "drift polynomial needs at least one coefficient");
        for (double c : coefficients)
            require(std::isfinite(c), ErrorCode::invalid_argument,
                    "drift coefficient is not finite");
        require(admissible(), ErrorCode::range_error,
                "drift polynomial violates the admissibility rule: degree <= 1, "
                "or odd degree with negative leading coefficient");
    }

    int degree() const {
        int d = static_cast<int>(coefficients.size()) - 1;
        while (d > 0 && coefficients[static_cast<std::size_t>(d)] == 0.0) --d;
        return d;
    }

    bool admissible() const {
        int d = degree();
        if (d <= 1) return true;
        return (d % 2 == 1) && coefficients[static_cast<std::size_t>(d)] < 0.0;
    }

    double operator()(double x) const {
        double acc = 0.0;
        for (std::size_t j = coefficients.size(); j-- > 0;)
            acc = acc * x + coefficients[j];
        return acc;
    }
};

struct ModelSpec {
    double x0;
    double lambda;
    double sigma;
    DriftPoly drift;
    NoiseSpec noise;
    std::int64_t fine_steps;

    ModelSpec(double x0_, double lambda_, double sigma_, DriftPoly drift_,
              NoiseSpec noise_, std::int64_t fine)
        : x0(x0_), lambda(lambda_), sigma(sigma_), drift(std::move(drift_)),
          noise(std::move(noise_)), fine_steps(fine) {
        require(std::isfinite(x0) && std::isfinite(lambda), ErrorCode::invalid_argument,
                "x0 and lambda must be finite");
        require(std::isfinite(sigma) && sigma >= 0.0, ErrorCode::range_error,
                "sigma must be non-negative");
        require(fine_steps >= 1, ErrorCode::invalid_argument,
                "fine_steps must be positive");
        require(noise_steps(noise) == fine_steps, ErrorCode::incompatible_grid,
                "noise grid must match fine_steps");
    }
};

// Euler output bundled with its inputs; solution and noise share the grid.
struct SolutionPath {
    SamplePath solution;
    SamplePath noise;
    double x0;
    double lambda;
    double sigma;
    DriftPoly drift;
};

} // namespace rblab
