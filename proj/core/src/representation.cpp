#include "acs/representation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace acs {

namespace {

double dot(const Representation & a, const Representation & b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        s += a.values[i] * b.values[i];
    }
    return s;
}

double norm(const Representation & a) {
    return std::sqrt(dot(a, a));
}

void check_finite(const Representation & a, const char * label) {
    if (a.dim() == 0) {
        throw ValidationError(std::string(label) + " has zero dimension");
    }
    for (const double v : a.values) {
        if (!std::isfinite(v)) {
            throw ValidationError(std::string(label) + " contains a non-finite entry");
        }
    }
}

} // namespace

void ContextRepresentations::append(Representation rep) {
    check_finite(rep, "context representation");
    if (!items.empty() && rep.dim() != items.front().dim()) {
        throw ValidationError("context representation dimension " + std::to_string(rep.dim()) +
                              " does not match " + std::to_string(items.front().dim()));
    }
    items.push_back(std::move(rep));
}

double cosine_similarity(const Representation & a, const Representation & b) {
    check_finite(a, "lhs");
    check_finite(b, "rhs");
    if (a.dim() != b.dim()) {
        throw ValidationError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                              std::to_string(b.dim()));
    }
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw ValidationError("cosine of a zero vector");
    }
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double degeneration_penalty(const Representation & candidate,
                            const ContextRepresentations & context) {
    if (context.empty()) {
        return 0.0;
    }
    double best = -1.0;
    for (const auto & item : context.items) {
        best = std::max(best, cosine_similarity(candidate, item));
    }
    return best;
}

CosinePair tikhonov_identity_check(const Representation & a, const Representation & b) {
    constexpr double kNormTolerance = 1e-9;
    if (std::fabs(norm(a) - 1.0) > kNormTolerance || std::fabs(norm(b) - 1.0) > kNormTolerance) {
        throw ValidationError("identity check requires unit-normalized inputs");
    }
    const double cosine = cosine_similarity(a, b);
    double sq_dist = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        sq_dist += d * d;
    }
    return {cosine, 1.0 - sq_dist / 2.0};
}

} // namespace acs
