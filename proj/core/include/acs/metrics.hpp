#pragma once

#include <map>
#include <span>

#include "acs/backend.hpp"
#include "acs/decode.hpp"
#include "acs/representation.hpp"

namespace acs {

// n-gram repetition rates for n in {2, 3, 4} and their aggregate:
// diversity = prod over n of (unique n-grams / total n-grams).
struct DiversityReport {
    std::map<int, double> rep_n; // n -> 1 - unique/total
    double diversity = 0.0;
};

// Requires at least 5 tokens so every n up to 4 has an n-gram.
DiversityReport diversity(std::span<const TokenId> tokens);

// Sentence-embedding contract for the coherence metric. Implementations
// must be deterministic with a fixed output dimension.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual Representation embed(std::span<const TokenId> tokens) const = 0;
    virtual std::size_t dim() const = 0;
};

// Mean of the backend's per-token representations within the sequence;
// needs no external model, so the metric stays runnable anywhere.
class MeanRepresentationEmbedder final : public Embedder {
public:
    explicit MeanRepresentationEmbedder(const Backend & backend) : backend_(backend) {}

    Representation embed(std::span<const TokenId> tokens) const override;
    std::size_t dim() const override { return backend_.descriptor().hidden_dim; }

private:
    const Backend & backend_;
};

// Cosine similarity between the embeddings of prompt and continuation.
double coherence(std::span<const TokenId> prompt_tokens,
                 std::span<const TokenId> continuation_tokens, const Embedder & embedder);

struct SpeedSummary {
    double mean_seconds_per_generation = 0.0;
    double mean_tokens_per_second = 0.0;
};

SpeedSummary speed_summary(std::span<const GenerationResult> results);

} // namespace acs
