#pragma once

#include <cstdint>
#include <random>

namespace rblab {

// 64-bit split-mix finalizer used for replication seeding.  The constant
// sequence is a reproducibility contract; do not change it.
inline std::uint64_t splitmix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

inline std::uint64_t seed_for_replication(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

// Deterministic standard-normal stream.  Box-Muller on top of mt19937_64 with
// an explicit uint64 -> (0,1) mapping, so the draw sequence depends only on
// the seed and this translation unit (not on libstdc++ distribution
// internals).
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_open();
        double u2 = uniform_open();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;  // 2*pi
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    void fill(double* out, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) out[i] = next();
    }

private:
    double uniform_open() {
        // 53-bit mantissa in (0,1); the +0.5 offset keeps log() away from 0.
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace rblab
