#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "acs/errors.hpp"

namespace acs {

// Normalized distribution over a token vocabulary at one generation step.
// Entries are probabilities indexed by token id.
struct ProbabilityDistribution {
    std::vector<double> probs;

    std::size_t vocab_size() const { return probs.size(); }
};

// Throws ValidationError unless every entry is finite and >= 0, the entries
// sum to 1 within 1e-9 and there are at least two of them.
void validate(const ProbabilityDistribution & dist);

// Per-step entropy record used for the running medians. full_entropies holds
// the full-vocabulary entropy of each past step in nats. Top-k entropies are
// stored divided by ln(k) of their own step, so values from steps with
// different k live on a common [0, 1] scale.
struct EntropyHistory {
    std::vector<double> full_entropies;
    std::vector<double> topk_entropies_normalized;
};

// Adaptive parameters selected at one generation step.
struct AdaptiveState {
    double q = 1.0;
    double delta_t = 0.0;
    double delta_tk = 0.0;
    int k_t = 10;
    double alpha_t = 0.5;
};

// -sum p ln p in nats, with 0 ln 0 = 0. Validates the distribution.
double shannon_entropy(const ProbabilityDistribution & dist);

// Entropy of the k highest-mass tokens after renormalizing them to sum 1.
// Ties in mass are broken toward the lowest token id. Result is in [0, ln k].
double topk_entropy(const ProbabilityDistribution & dist, int k);

// q * arctanh((current - median(history)) / max_entropy), with the ratio
// clamped to [-1 + 1e-6, 1 - 1e-6] so the arctanh stays finite. An empty
// history is treated as median == current, giving 0.
double standardized_delta(double current_entropy, std::span<const double> history,
                          double max_entropy, double q);

// round_half_away_from_zero(10 * sigmoid(delta) + 5), always in {5, ..., 15}.
int k_from_delta(double delta);

// sigmoid(delta), kept strictly inside (0, 1).
double alpha_from_delta(double delta);

// sign(delta) * (exp(|delta|) - 1), the sigmoid-argument magnifier of the
// DoubleExp variant. |delta| is capped at 30 before exponentiation; the
// result is never smaller in magnitude than delta itself.
double double_exp_delta(double delta);

// Median with the midpoint-average convention for even lengths.
double median_of(std::span<const double> values);

// Indices of the k largest masses, ties broken toward the lowest index.
// Shared by the top-k entropy restriction and the contrastive candidate
// pool so their tie-breaks agree.
std::vector<std::uint32_t> topk_indices(std::span<const double> masses, int k);

} // namespace acs
