#include "acs/decode.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

namespace acs {

const char * to_string(DecodeMethod method) {
    switch (method) {
        case DecodeMethod::greedy:               return "greedy";
        case DecodeMethod::top_k:                return "top_k";
        case DecodeMethod::nucleus:              return "nucleus";
        case DecodeMethod::typical:              return "typical";
        case DecodeMethod::contrastive:          return "contrastive";
        case DecodeMethod::adaptive_contrastive: return "adaptive_contrastive";
        case DecodeMethod::adaptive_double_exp:  return "adaptive_double_exp";
    }
    return "unknown";
}

std::optional<DecodeMethod> decode_method_from_string(std::string_view name) {
    for (const DecodeMethod m :
         {DecodeMethod::greedy, DecodeMethod::top_k, DecodeMethod::nucleus, DecodeMethod::typical,
          DecodeMethod::contrastive, DecodeMethod::adaptive_contrastive,
          DecodeMethod::adaptive_double_exp}) {
        if (name == to_string(m)) {
            return m;
        }
    }
    return std::nullopt;
}

void DecoderConfig::validate_for(const BackendDescriptor & backend) const {
    if (max_new_tokens < 1) {
        throw ArgumentError("max_new_tokens must be positive");
    }
    switch (method) {
        case DecodeMethod::greedy:
            break;
        case DecodeMethod::top_k:
        case DecodeMethod::contrastive:
            if (k < 1 || static_cast<std::size_t>(k) > backend.vocab_size) {
                throw ArgumentError("k = " + std::to_string(k) + " out of [1, " +
                                    std::to_string(backend.vocab_size) + "]");
            }
            if (method == DecodeMethod::contrastive && !(alpha >= 0.0 && alpha <= 1.0)) {
                throw ArgumentError("alpha must be in [0, 1]");
            }
            break;
        case DecodeMethod::nucleus:
            if (!(p > 0.0 && p <= 1.0)) {
                throw ArgumentError("p must be in (0, 1]");
            }
            break;
        case DecodeMethod::typical:
            if (!(tau > 0.0 && tau <= 1.0)) {
                throw ArgumentError("tau must be in (0, 1]");
            }
            break;
        case DecodeMethod::adaptive_contrastive:
        case DecodeMethod::adaptive_double_exp:
            if (!(q > 0.0) || !std::isfinite(q)) {
                throw ArgumentError("q must be positive and finite");
            }
            if (backend.vocab_size < 15) {
                throw ArgumentError("adaptive methods need a vocabulary of at least 15 tokens");
            }
            break;
    }
    for (const TokenId t : stop_tokens) {
        if (t >= backend.vocab_size) {
            throw ArgumentError("stop token " + std::to_string(t) + " outside vocabulary");
        }
    }
}

TokenId greedy_step(const ProbabilityDistribution & dist) {
    validate(dist);
    std::size_t best = 0;
    for (std::size_t i = 1; i < dist.probs.size(); ++i) {
        if (dist.probs[i] > dist.probs[best]) {
            best = i;
        }
    }
    return static_cast<TokenId>(best);
}

TokenId topk_sample_step(const ProbabilityDistribution & dist, int k, SplitMix64 & rng) {
    validate(dist);
    if (k < 1 || static_cast<std::size_t>(k) > dist.vocab_size()) {
        throw ArgumentError("k = " + std::to_string(k) + " out of [1, " +
                            std::to_string(dist.vocab_size()) + "]");
    }
    auto ids = topk_indices(dist.probs, k);
    std::sort(ids.begin(), ids.end()); // support in token-id order for the draw
    std::vector<double> masses(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        masses[i] = dist.probs[ids[i]];
    }
    return ids[sample_index(masses, rng)];
}

TokenId nucleus_step(const ProbabilityDistribution & dist, double p, SplitMix64 & rng) {
    validate(dist);
    if (!(p > 0.0 && p <= 1.0)) {
        throw ArgumentError("p must be in (0, 1]");
    }
    std::vector<std::uint32_t> order = topk_indices(dist.probs, static_cast<int>(dist.vocab_size()));
    std::vector<std::uint32_t> support;
    if (p == 1.0) {
        support = std::move(order);
    } else {
        double cum = 0.0;
        for (const auto id : order) {
            support.push_back(id);
            cum += dist.probs[id];
            if (cum >= p) {
                break;
            }
        }
    }
    std::sort(support.begin(), support.end());
    std::vector<double> masses(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) {
        masses[i] = dist.probs[support[i]];
    }
    return support[sample_index(masses, rng)];
}

TokenId typical_step(const ProbabilityDistribution & dist, double tau, SplitMix64 & rng) {
    validate(dist);
    if (!(tau > 0.0 && tau <= 1.0)) {
        throw ArgumentError("tau must be in (0, 1]");
    }
    const double entropy = shannon_entropy(dist);

    std::vector<std::uint32_t> order;
    order.reserve(dist.vocab_size());
    for (std::uint32_t i = 0; i < dist.vocab_size(); ++i) {
        if (dist.probs[i] > 0.0) {
            order.push_back(i);
        }
    }
    std::vector<double> deviation(dist.vocab_size(), 0.0);
    for (const auto id : order) {
        deviation[id] = std::fabs(-std::log(dist.probs[id]) - entropy);
    }
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (deviation[a] != deviation[b]) {
            return deviation[a] < deviation[b];
        }
        if (dist.probs[a] != dist.probs[b]) {
            return dist.probs[a] > dist.probs[b];
        }
        return a < b;
    });

    std::vector<std::uint32_t> support;
    double cum = 0.0;
    for (const auto id : order) {
        support.push_back(id);
        cum += dist.probs[id];
        if (cum > tau) { // strictly surpass tau, so an exact boundary keeps growing
            break;
        }
    }
    std::sort(support.begin(), support.end());
    std::vector<double> masses(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) {
        masses[i] = dist.probs[support[i]];
    }
    return support[sample_index(masses, rng)];
}

ContrastiveChoice contrastive_step(const ProbabilityDistribution & dist,
                                   const std::map<TokenId, Representation> & candidate_reps,
                                   const ContextRepresentations & context_reps, int k,
                                   double alpha) {
    validate(dist);
    if (k < 1 || static_cast<std::size_t>(k) > dist.vocab_size()) {
        throw ArgumentError("k = " + std::to_string(k) + " out of [1, " +
                            std::to_string(dist.vocab_size()) + "]");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ArgumentError("alpha must be in [0, 1]");
    }
    const auto candidates = topk_indices(dist.probs, k);

    ContrastiveChoice best;
    double best_score = 0.0;
    bool first = true;
    for (const TokenId v : candidates) {
        const auto it = candidate_reps.find(v);
        if (it == candidate_reps.end()) {
            throw ContractError("candidate " + std::to_string(v) + " has no representation");
        }
        const double confidence = dist.probs[v];
        const double penalty = degeneration_penalty(it->second, context_reps);
        const double score = (1.0 - alpha) * confidence - alpha * penalty;
        if (first || score > best_score || (score == best_score && v < best.token)) {
            best = {v, confidence, penalty};
            best_score = score;
            first = false;
        }
    }
    return best;
}

namespace {

double normalized_topk_entropy(double raw, int k) {
    if (k <= 1) {
        return 0.0;
    }
    // floating-point summation can land an ulp above ln k
    return std::min(raw / std::log(static_cast<double>(k)), 1.0);
}

} // namespace

AdaptiveState adapt_parameters(const ProbabilityDistribution & dist,
                               const EntropyHistory & history, std::size_t vocab_size, double q,
                               AdaptiveVariant variant) {
    const double max_entropy = std::log(static_cast<double>(vocab_size));

    AdaptiveState state;
    state.q = q;
    const double full_entropy = shannon_entropy(dist);
    state.delta_t = standardized_delta(full_entropy, history.full_entropies, max_entropy, q);
    state.k_t = k_from_delta(state.delta_t);

    // both sides of the top-k median comparison live on the [0, 1] scale of
    // their own step's ln(k), so the scaling divisor is 1
    const double topk_norm = normalized_topk_entropy(topk_entropy(dist, state.k_t), state.k_t);
    state.delta_tk = standardized_delta(topk_norm, history.topk_entropies_normalized, 1.0, q);
    if (variant == AdaptiveVariant::double_exp) {
        state.delta_tk = double_exp_delta(state.delta_tk);
    }
    state.alpha_t = alpha_from_delta(state.delta_tk);
    return state;
}

AdaptiveStepResult adaptive_contrastive_step(const ProbabilityDistribution & dist,
                                             const Backend & backend,
                                             std::span<const TokenId> context,
                                             const ContextRepresentations & context_reps,
                                             EntropyHistory & history, double q,
                                             AdaptiveVariant variant) {
    const auto & desc = backend.descriptor();
    const auto state = adapt_parameters(dist, history, desc.vocab_size, q, variant);
    const double full_entropy = shannon_entropy(dist);
    const double topk_raw = topk_entropy(dist, state.k_t);

    const auto candidates = topk_indices(dist.probs, state.k_t);
    auto reps = backend.candidate_representations(context, candidates);
    const auto choice = contrastive_step(dist, reps, context_reps, state.k_t, state.alpha_t);

    history.full_entropies.push_back(full_entropy);
    history.topk_entropies_normalized.push_back(normalized_topk_entropy(topk_raw, state.k_t));

    AdaptiveStepResult result;
    result.token = choice.token;
    result.token_representation = std::move(reps.at(choice.token));
    result.record.chosen = choice.token;
    result.record.full_entropy = full_entropy;
    result.record.topk_entropy = topk_raw;
    result.record.delta_t = state.delta_t;
    result.record.delta_tk = state.delta_tk;
    result.record.k_t = state.k_t;
    result.record.alpha_t = state.alpha_t;
    result.record.model_confidence = choice.confidence;
    result.record.penalty = choice.penalty;
    return result;
}

GenerationResult generate(const Backend & backend, std::span<const TokenId> prompt,
                          const DecoderConfig & config) {
    const auto & desc = backend.descriptor();
    if (prompt.empty()) {
        throw ArgumentError("prompt must be non-empty");
    }
    config.validate_for(desc);

    const bool contrastive_family = config.method == DecodeMethod::contrastive ||
                                    config.method == DecodeMethod::adaptive_contrastive ||
                                    config.method == DecodeMethod::adaptive_double_exp;

    GenerationResult result;
    SplitMix64 rng(config.rng_seed);
    EntropyHistory history;
    ContextRepresentations context_reps;
    std::vector<TokenId> context(prompt.begin(), prompt.end());

    const auto started = std::chrono::steady_clock::now();

    ProbabilityDistribution dist;
    try {
        if (contrastive_family) {
            // the penalty context covers every prompt token, so collect each
            // prefix's newest representation; the last call also yields the
            // first generation step's distribution
            for (std::size_t j = 1; j <= prompt.size(); ++j) {
                auto out = backend.step(prompt.subspan(0, j));
                context_reps.append(std::move(out.last_representation));
                if (j == prompt.size()) {
                    dist = std::move(out.dist);
                }
            }
        } else {
            dist = backend.step(context).dist;
        }

        for (int step = 0; step < config.max_new_tokens; ++step) {
            TraceRecord record;
            record.step = step;
            TokenId chosen = 0;

            switch (config.method) {
                case DecodeMethod::greedy:
                    chosen = greedy_step(dist);
                    break;
                case DecodeMethod::top_k:
                    chosen = topk_sample_step(dist, config.k, rng);
                    record.topk_entropy = topk_entropy(dist, config.k);
                    break;
                case DecodeMethod::nucleus:
                    chosen = nucleus_step(dist, config.p, rng);
                    break;
                case DecodeMethod::typical:
                    chosen = typical_step(dist, config.tau, rng);
                    break;
                case DecodeMethod::contrastive: {
                    const auto candidates = topk_indices(dist.probs, config.k);
                    const auto reps = backend.candidate_representations(context, candidates);
                    const auto choice =
                        contrastive_step(dist, reps, context_reps, config.k, config.alpha);
                    chosen = choice.token;
                    record.topk_entropy = topk_entropy(dist, config.k);
                    record.model_confidence = choice.confidence;
                    record.penalty = choice.penalty;
                    context_reps.append(reps.at(chosen));
                    break;
                }
                case DecodeMethod::adaptive_contrastive:
                case DecodeMethod::adaptive_double_exp: {
                    const auto variant = config.method == DecodeMethod::adaptive_double_exp
                                             ? AdaptiveVariant::double_exp
                                             : AdaptiveVariant::standard;
                    auto stepped = adaptive_contrastive_step(dist, backend, context, context_reps,
                                                             history, config.q, variant);
                    chosen = stepped.token;
                    record = stepped.record;
                    record.step = step;
                    context_reps.append(std::move(stepped.token_representation));
                    break;
                }
            }

            if (!record.full_entropy) {
                record.full_entropy = shannon_entropy(dist);
            }
            if (!record.model_confidence) {
                record.model_confidence = dist.probs[chosen];
            }
            record.chosen = chosen;

            context.push_back(chosen);
            result.tokens.push_back(chosen);
            result.trace.push_back(std::move(record));

            const bool stop = std::find(config.stop_tokens.begin(), config.stop_tokens.end(),
                                        chosen) != config.stop_tokens.end();
            if (stop) {
                break;
            }
            if (step + 1 < config.max_new_tokens) {
                dist = backend.step(context).dist;
            }
        }
    } catch (const std::exception & e) {
        throw ValidationError("generation failed at step " +
                              std::to_string(result.tokens.size()) + ": " + e.what());
    }

    const auto finished = std::chrono::steady_clock::now();
    result.elapsed_seconds = std::chrono::duration<double>(finished - started).count();
    result.tokens_per_second =
        static_cast<double>(result.tokens.size()) / std::max(result.elapsed_seconds, 1e-9);
    return result;
}

} // namespace acs
