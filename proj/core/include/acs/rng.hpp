#pragma once

#include <cstdint>
#include <span>

namespace acs {

// SplitMix64. State advances by the 64-bit golden-ratio constant
// 0x9E3779B97F4A7C15 and outputs pass through the standard two-multiply
// finalizer (0xBF58476D1CE4E5B9, 0x94D049BB133111EB), so the stream is
// reproducible from the seed in any language without a runtime dependency.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

// One inverse-CDF draw over `masses`: walk entries in index order, return
// the first index whose cumulative renormalized mass exceeds the uniform
// draw. Entries must be non-negative with a positive total.
std::size_t sample_index(std::span<const double> masses, SplitMix64 & rng);

} // namespace acs
