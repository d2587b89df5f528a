#include "acs/rng.hpp"

#include "acs/errors.hpp"

namespace acs {

std::size_t sample_index(std::span<const double> masses, SplitMix64 & rng) {
    double total = 0.0;
    for (const double m : masses) {
        if (m < 0.0) {
            throw ValidationError("negative mass in sampling support");
        }
        total += m;
    }
    if (total <= 0.0) {
        throw ValidationError("sampling support has zero total mass");
    }
    const double u = rng.next_unit() * total;
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        if (masses[i] > 0.0) {
            cum += masses[i];
            last_positive = i;
            if (u < cum) {
                return i;
            }
        }
    }
    // floating-point shortfall: the draw landed past the accumulated total
    return last_positive;
}

} // namespace acs
