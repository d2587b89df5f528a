#include "acs/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace acs {

void validate(const ProbabilityDistribution & dist) {
    if (dist.vocab_size() < 2) {
        throw ValidationError("distribution needs at least two entries, got " +
                              std::to_string(dist.vocab_size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
        const double p = dist.probs[i];
        if (!std::isfinite(p) || p < 0.0) {
            throw ValidationError("entry " + std::to_string(i) + " is negative or non-finite");
        }
        sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw ValidationError("entries sum to " + std::to_string(sum) + ", expected 1");
    }
}

double shannon_entropy(const ProbabilityDistribution & dist) {
    validate(dist);
    double h = 0.0;
    for (const double p : dist.probs) {
        if (p > 0.0) {
            h -= p * std::log(p);
        }
    }
    return std::max(h, 0.0);
}

std::vector<std::uint32_t> topk_indices(std::span<const double> masses, int k) {
    std::vector<std::uint32_t> ids(masses.size());
    std::iota(ids.begin(), ids.end(), 0u);
    const auto by_mass_then_id = [&](std::uint32_t a, std::uint32_t b) {
        if (masses[a] != masses[b]) {
            return masses[a] > masses[b];
        }
        return a < b;
    };
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k), ids.size());
    std::partial_sort(ids.begin(), ids.begin() + n, ids.end(), by_mass_then_id);
    ids.resize(n);
    return ids;
}

double topk_entropy(const ProbabilityDistribution & dist, int k) {
    validate(dist);
    if (k < 1 || static_cast<std::size_t>(k) > dist.vocab_size()) {
        throw ArgumentError("k = " + std::to_string(k) + " out of [1, " +
                            std::to_string(dist.vocab_size()) + "]");
    }
    if (static_cast<std::size_t>(k) == dist.vocab_size()) {
        // renormalizing the full distribution is the identity
        return shannon_entropy(dist);
    }
    const auto ids = topk_indices(dist.probs, k);
    double total = 0.0;
    for (const auto id : ids) {
        total += dist.probs[id];
    }
    if (total <= 0.0) {
        // all selected masses are zero: renormalized distribution is uniform
        return std::log(static_cast<double>(ids.size()));
    }
    double h = 0.0;
    for (const auto id : ids) {
        const double p = dist.probs[id] / total;
        if (p > 0.0) {
            h -= p * std::log(p);
        }
    }
    return std::max(h, 0.0);
}

double median_of(std::span<const double> values) {
    if (values.empty()) {
        throw ArgumentError("median of empty list");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    if (n % 2 == 1) {
        return sorted[n / 2];
    }
    return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double standardized_delta(double current_entropy, std::span<const double> history,
                          double max_entropy, double q) {
    if (!std::isfinite(current_entropy)) {
        throw ValidationError("current entropy is not finite");
    }
    for (const double h : history) {
        if (!std::isfinite(h)) {
            throw ValidationError("history contains a non-finite entry");
        }
    }
    if (!std::isfinite(max_entropy) || max_entropy <= 0.0) {
        throw ArgumentError("max_entropy must be positive and finite");
    }
    if (!std::isfinite(q) || q <= 0.0) {
        throw ArgumentError("q must be positive and finite");
    }
    if (history.empty()) {
        return 0.0;
    }
    constexpr double kRatioClamp = 1.0 - 1e-6;
    double r = (current_entropy - median_of(history)) / max_entropy;
    r = std::clamp(r, -kRatioClamp, kRatioClamp);
    return q * std::atanh(r);
}

namespace {

double logistic(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

int k_from_delta(double delta) {
    if (!std::isfinite(delta)) {
        throw ArgumentError("delta is not finite");
    }
    const long k = std::lround(10.0 * logistic(delta) + 5.0);
    return static_cast<int>(std::clamp(k, 5l, 15l));
}

double alpha_from_delta(double delta) {
    if (!std::isfinite(delta)) {
        throw ArgumentError("delta is not finite");
    }
    // keep alpha strictly inside (0, 1) even when the sigmoid saturates
    constexpr double kAlphaFloor = 1e-12;
    return std::clamp(logistic(delta), kAlphaFloor, 1.0 - kAlphaFloor);
}

double double_exp_delta(double delta) {
    if (!std::isfinite(delta)) {
        throw ArgumentError("delta is not finite");
    }
    const double mag = std::min(std::fabs(delta), 30.0);
    const double grown = std::max(std::expm1(mag), std::fabs(delta));
    return std::copysign(grown, delta);
}

} // namespace acs
