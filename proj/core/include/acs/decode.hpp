#pragma once

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "acs/backend.hpp"
#include "acs/prob.hpp"
#include "acs/representation.hpp"
#include "acs/rng.hpp"

namespace acs {

enum class DecodeMethod {
    greedy,
    top_k,
    nucleus,
    typical,
    contrastive,
    adaptive_contrastive,
    adaptive_double_exp,
};

const char * to_string(DecodeMethod method);
std::optional<DecodeMethod> decode_method_from_string(std::string_view name);

struct DecoderConfig {
    DecodeMethod method = DecodeMethod::adaptive_contrastive;
    int k = 10;           // top-k sampling and fixed contrastive search
    double alpha = 0.6;   // fixed contrastive search
    double p = 0.95;      // nucleus mass
    double tau = 0.95;    // typical mass
    double q = 1.0;       // adaptive temperature
    int max_new_tokens = 256;
    std::uint64_t rng_seed = 0;
    std::vector<TokenId> stop_tokens; // empty by default: decode a fixed length

    // Throws ArgumentError when a parameter of the chosen method is out of
    // range for the given backend.
    void validate_for(const BackendDescriptor & backend) const;
};

// One generation step's diagnostics. Fields that the method does not
// compute stay disengaged rather than being zero-filled.
struct TraceRecord {
    int step = 0;
    TokenId chosen = 0;
    std::optional<double> full_entropy;
    std::optional<double> topk_entropy;
    std::optional<double> delta_t;
    std::optional<double> delta_tk;
    std::optional<int> k_t;
    std::optional<double> alpha_t;
    std::optional<double> model_confidence;
    std::optional<double> penalty;
};

struct GenerationResult {
    std::vector<TokenId> tokens;
    std::vector<TraceRecord> trace;
    double elapsed_seconds = 0.0;
    double tokens_per_second = 0.0;
};

// argmax token, ties toward the lowest id.
TokenId greedy_step(const ProbabilityDistribution & dist);

// Renormalize the k highest-mass tokens and draw one. k = 1 equals greedy.
TokenId topk_sample_step(const ProbabilityDistribution & dist, int k, SplitMix64 & rng);

// Draw from the smallest highest-mass prefix whose cumulative probability
// reaches p (p = 1 keeps the full vocabulary).
TokenId nucleus_step(const ProbabilityDistribution & dist, double p, SplitMix64 & rng);

// Rank tokens by |surprisal - entropy| ascending (ties: higher mass, then
// lower id), keep the smallest prefix whose mass exceeds tau, draw from it.
// Zero-mass tokens are dropped before ranking.
TokenId typical_step(const ProbabilityDistribution & dist, double tau, SplitMix64 & rng);

struct ContrastiveChoice {
    TokenId token = 0;
    double confidence = 0.0; // model probability of the winner
    double penalty = 0.0;    // degeneration penalty of the winner
};

// argmax over the top-k candidates of (1 - alpha) * p(v) - alpha * penalty(v),
// ties toward the lowest token id. candidate_reps must cover every top-k id.
ContrastiveChoice contrastive_step(const ProbabilityDistribution & dist,
                                   const std::map<TokenId, Representation> & candidate_reps,
                                   const ContextRepresentations & context_reps, int k,
                                   double alpha);

enum class AdaptiveVariant { standard, double_exp };

// Parameter selection alone: entropy measurement, centering against the
// history medians, scaling, and the sigmoid maps. Reads the history without
// appending to it.
AdaptiveState adapt_parameters(const ProbabilityDistribution & dist,
                               const EntropyHistory & history, std::size_t vocab_size, double q,
                               AdaptiveVariant variant);

struct AdaptiveStepResult {
    TokenId token = 0;
    TraceRecord record;
    Representation token_representation; // from the candidate map, ready to append
};

// One adaptive step: full entropy -> delta_t -> k_t from the running median
// of past full entropies, then top-k_t entropy -> delta_tk -> alpha_t from
// the normalized top-k history (DoubleExp magnifies delta_tk first), then a
// contrastive step with (k_t, alpha_t). Appends this step's entropies to the
// history.
AdaptiveStepResult adaptive_contrastive_step(const ProbabilityDistribution & dist,
                                             const Backend & backend,
                                             std::span<const TokenId> context,
                                             const ContextRepresentations & context_reps,
                                             EntropyHistory & history, double q,
                                             AdaptiveVariant variant);

// Run the configured step rule for max_new_tokens steps (or until a stop
// token is emitted). Deterministic given (backend, prompt, config).
GenerationResult generate(const Backend & backend, std::span<const TokenId> prompt,
                          const DecoderConfig & config);

} // namespace acs
