#pragma once

#include <span>
#include <vector>

#include "acs/errors.hpp"

namespace acs {

// Dense hidden-state vector for one token in context.
struct Representation {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
};

// Representations of every context token processed so far, oldest first.
// Prompt tokens are included. All items share one dimension.
struct ContextRepresentations {
    std::vector<Representation> items;

    void append(Representation rep);
    bool empty() const { return items.empty(); }
    std::size_t size() const { return items.size(); }
};

// Standard cosine similarity. Throws ValidationError on a zero vector or
// mismatched dimensions.
double cosine_similarity(const Representation & a, const Representation & b);

// max over the context of cosine_similarity(candidate, item). An empty
// context yields 0 so the first step reduces to pure model confidence.
double degeneration_penalty(const Representation & candidate,
                            const ContextRepresentations & context);

struct CosinePair {
    double cosine = 0.0;        // s(a, b)
    double distance_form = 0.0; // 1 - |a - b|^2 / 2
};

// For unit vectors the squared distance satisfies |a - b|^2 = 2 - 2 s(a, b),
// so both components agree within 1e-9. Inputs must have unit norm within
// 1e-9 or a ValidationError is thrown.
CosinePair tikhonov_identity_check(const Representation & a, const Representation & b);

} // namespace acs
