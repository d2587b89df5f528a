#include "acs/backend.hpp"

#include <algorithm>
#include <cmath>

namespace acs {

namespace {

constexpr std::uint64_t kSeedSalt   = 0x5EEDBA5Eull;
constexpr std::uint64_t kRepSalt    = 0x0EC5ull;
constexpr std::uint64_t kGolden     = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kHashMult   = 0xC2B2AE3D27D4EB4Full;
constexpr int kContextWindow        = 4;
constexpr int kRepStrands           = 4;
constexpr double kLogitScale        = 6.0;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double unit_double(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

} // namespace

void Backend::check_context(std::span<const TokenId> context) const {
    if (context.empty()) {
        throw ValidationError("empty context");
    }
    const auto vocab = descriptor().vocab_size;
    for (const TokenId t : context) {
        if (t >= vocab) {
            throw ValidationError("token " + std::to_string(t) + " outside vocabulary of " +
                                  std::to_string(vocab));
        }
    }
}

std::map<TokenId, Representation> Backend::candidate_representations(
    std::span<const TokenId> context, std::span<const TokenId> candidates) const {
    if (candidates.empty()) {
        throw ValidationError("empty candidate set");
    }
    std::map<TokenId, Representation> reps;
    std::vector<TokenId> extended(context.begin(), context.end());
    extended.push_back(0);
    for (const TokenId v : candidates) {
        extended.back() = v;
        reps[v] = step(extended).last_representation;
    }
    return reps;
}

namespace {

class SyntheticBackend final : public Backend {
public:
    SyntheticBackend(std::size_t vocab_size, std::size_t hidden_dim, std::uint64_t seed,
                     double repetition_bias)
        : seed_(seed), bias_(repetition_bias) {
        desc_.vocab_size = vocab_size;
        desc_.hidden_dim = hidden_dim;
        desc_.name = "synthetic-v" + std::to_string(vocab_size) + "-d" +
                     std::to_string(hidden_dim) + "-s" + std::to_string(seed);
    }

    const BackendDescriptor & descriptor() const override { return desc_; }

    StepOutput step(std::span<const TokenId> context) const override {
        check_context(context);
        StepOutput out;
        out.dist.probs = distribution(context);
        const TokenId last = context.back();
        const TokenId prev = context.size() >= 2 ? context[context.size() - 2]
                                                 : static_cast<TokenId>(desc_.vocab_size);
        out.last_representation = representation(last, prev);
        return out;
    }

    std::map<TokenId, Representation> candidate_representations(
        std::span<const TokenId> context, std::span<const TokenId> candidates) const override {
        check_context(context);
        if (candidates.empty()) {
            throw ValidationError("empty candidate set");
        }
        // rep(v | context + [v]) depends only on (v, last), so skip the
        // per-candidate distribution work of the generic loop
        std::map<TokenId, Representation> reps;
        for (const TokenId v : candidates) {
            if (v >= desc_.vocab_size) {
                throw ValidationError("candidate token " + std::to_string(v) +
                                      " outside vocabulary");
            }
            reps[v] = representation(v, context.back());
        }
        return reps;
    }

private:
    std::vector<double> distribution(std::span<const TokenId> context) const {
        const std::size_t vocab = desc_.vocab_size;
        std::uint64_t h = mix64(seed_ ^ kSeedSalt);
        const std::size_t start = context.size() > static_cast<std::size_t>(kContextWindow)
                                      ? context.size() - kContextWindow
                                      : 0;
        for (std::size_t i = start; i < context.size(); ++i) {
            h = (h ^ (static_cast<std::uint64_t>(context[i]) + 1)) * kHashMult;
        }

        std::vector<double> probs(vocab);
        double max_logit = -1.0;
        for (std::size_t v = 0; v < vocab; ++v) {
            const double logit =
                kLogitScale * unit_double(mix64(h ^ ((static_cast<std::uint64_t>(v) + 1) * kGolden)));
            probs[v] = logit;
            max_logit = std::max(max_logit, logit);
        }
        double total = 0.0;
        for (double & p : probs) {
            p = std::exp(p - max_logit);
            total += p;
        }
        // evaluation order is part of the contract: recomputations from the
        // documented procedure must match bit for bit
        for (double & p : probs) {
            p = (1.0 - bias_) * (p / total);
        }
        probs[context.back()] += bias_;
        return probs;
    }

    Representation representation(TokenId token, TokenId prev) const {
        const std::size_t dim = desc_.hidden_dim;
        const std::uint64_t base = mix64(seed_ ^ kRepSalt ^
                                         ((static_cast<std::uint64_t>(token) + 1) * kGolden) ^
                                         ((static_cast<std::uint64_t>(prev) + 1) * kHashMult));
        Representation rep;
        rep.values.assign(dim, 0.0);
        for (int i = 0; i < kRepStrands; ++i) {
            const std::uint64_t s = mix64(base + static_cast<std::uint64_t>(i) * kGolden);
            rep.values[s % dim] += (s >> 63) ? -1.0 : 1.0;
        }
        double sq = 0.0;
        for (const double v : rep.values) {
            sq += v * v;
        }
        if (sq == 0.0) {
            rep.values[base % dim] = 1.0;
            return rep;
        }
        const double inv = 1.0 / std::sqrt(sq);
        for (double & v : rep.values) {
            v *= inv;
        }
        return rep;
    }

    BackendDescriptor desc_;
    std::uint64_t seed_;
    double bias_;
};

} // namespace

std::unique_ptr<Backend> make_synthetic_backend(std::size_t vocab_size, std::size_t hidden_dim,
                                                std::uint64_t seed, double repetition_bias) {
    if (vocab_size < 2) {
        throw ArgumentError("vocab_size must be at least 2");
    }
    if (hidden_dim < 1) {
        throw ArgumentError("hidden_dim must be at least 1");
    }
    if (!(repetition_bias >= 0.0 && repetition_bias <= 1.0)) {
        throw ArgumentError("repetition_bias must be in [0, 1]");
    }
    return std::make_unique<SyntheticBackend>(vocab_size, hidden_dim, seed, repetition_bias);
}

} // namespace acs
