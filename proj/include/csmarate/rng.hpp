#pragma once

#include <cmath>
#include <cstdint>

namespace csmarate {

// Deterministic counter-based generator (splitmix64).  One instance per
// logical stream; streams derived from (seed, stream id) stay decorrelated,
// which keeps event traces comparable when a single parameter changes.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    Rng(std::uint64_t seed, std::uint64_t stream)
        : state_(seed * 0x9e3779b97f4a7c15ULL + stream * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Exponential with the given mean; log1p keeps the tail accurate and
    // u01() < 1 guarantees a finite result.
    double expo(double mean) { return -mean * std::log1p(-u01()); }

private:
    std::uint64_t state_;
};

} // namespace csmarate
