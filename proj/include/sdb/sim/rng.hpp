#pragma once

#include <cstdint>
#include <random>

namespace sdb::sim {

/// Seeded generator with conversions defined here rather than by the standard library's
/// distributions, whose output differs between implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform in [0, n); n > 0. Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do x = engine_();
        while (x >= limit);
        return x % n;
    }
    bool chance(double p) { return p > 0 && (p >= 1 || uniform() < p); }

private:
    std::mt19937_64 engine_;
};

}  // namespace sdb::sim
