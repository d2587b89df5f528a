#include "acs/metrics.hpp"

#include <set>
#include <string>
#include <vector>

namespace acs {

DiversityReport diversity(std::span<const TokenId> tokens) {
    if (tokens.size() < 5) {
        throw ArgumentError("diversity needs at least 5 tokens, got " +
                            std::to_string(tokens.size()));
    }
    DiversityReport report;
    report.diversity = 1.0;
    for (int n = 2; n <= 4; ++n) {
        const std::size_t total = tokens.size() - n + 1;
        std::set<std::vector<TokenId>> unique;
        for (std::size_t i = 0; i < total; ++i) {
            unique.insert(std::vector<TokenId>(tokens.begin() + i, tokens.begin() + i + n));
        }
        const double ratio = static_cast<double>(unique.size()) / static_cast<double>(total);
        report.rep_n[n] = 1.0 - ratio;
        report.diversity *= ratio;
    }
    return report;
}

Representation MeanRepresentationEmbedder::embed(std::span<const TokenId> tokens) const {
    if (tokens.empty()) {
        throw ValidationError("cannot embed an empty sequence");
    }
    Representation mean;
    mean.values.assign(backend_.descriptor().hidden_dim, 0.0);
    for (std::size_t j = 1; j <= tokens.size(); ++j) {
        const auto out = backend_.step(tokens.subspan(0, j));
        for (std::size_t i = 0; i < mean.values.size(); ++i) {
            mean.values[i] += out.last_representation.values[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(tokens.size());
    for (double & v : mean.values) {
        v *= inv;
    }
    return mean;
}

double coherence(std::span<const TokenId> prompt_tokens,
                 std::span<const TokenId> continuation_tokens, const Embedder & embedder) {
    if (prompt_tokens.empty() || continuation_tokens.empty()) {
        throw ArgumentError("coherence needs non-empty prompt and continuation");
    }
    const auto a = embedder.embed(prompt_tokens);
    const auto b = embedder.embed(continuation_tokens);
    return cosine_similarity(a, b); // zero embeddings surface as ValidationError here
}

SpeedSummary speed_summary(std::span<const GenerationResult> results) {
    if (results.empty()) {
        throw ArgumentError("speed summary of an empty result list");
    }
    SpeedSummary summary;
    for (const auto & r : results) {
        summary.mean_seconds_per_generation += r.elapsed_seconds;
        summary.mean_tokens_per_second += r.tokens_per_second;
    }
    const double inv = 1.0 / static_cast<double>(results.size());
    summary.mean_seconds_per_generation *= inv;
    summary.mean_tokens_per_second *= inv;
    return summary;
}

} // namespace acs
