#pragma once

#include <cmath>
#include <vector>

#include "acs/prob.hpp"
#include "acs/representation.hpp"
#include "acs/rng.hpp"

namespace acs::test {

// Dirichlet(1,...,1)-style draw: normalized Exp(1) weights.
inline ProbabilityDistribution random_distribution(SplitMix64 & rng, std::size_t vocab) {
    ProbabilityDistribution dist;
    dist.probs.resize(vocab);
    double total = 0.0;
    for (double & p : dist.probs) {
        p = -std::log(1.0 - rng.next_unit());
        total += p;
    }
    for (double & p : dist.probs) {
        p /= total;
    }
    return dist;
}

// Peaked variant: one token gets `peak` mass, the rest share the remainder.
inline ProbabilityDistribution peaked_distribution(SplitMix64 & rng, std::size_t vocab,
                                                   double peak) {
    auto dist = random_distribution(rng, vocab);
    for (double & p : dist.probs) {
        p *= 1.0 - peak;
    }
    dist.probs[rng.next() % vocab] += peak;
    return dist;
}

inline Representation random_unit_vector(SplitMix64 & rng, std::size_t dim) {
    Representation rep;
    rep.values.resize(dim);
    double sq = 0.0;
    for (double & v : rep.values) {
        // Box-Muller; both draws in (0, 1]
        const double u1 = 1.0 - rng.next_unit();
        const double u2 = 1.0 - rng.next_unit();
        v = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
        sq += v * v;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (double & v : rep.values) {
        v *= inv;
    }
    return rep;
}

} // namespace acs::test
