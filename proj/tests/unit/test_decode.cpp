#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "acs/backend.hpp"
#include "acs/decode.hpp"
#include "helpers.hpp"

using namespace acs;

namespace {

ProbabilityDistribution dist_of(std::vector<double> probs) {
    return ProbabilityDistribution{std::move(probs)};
}

std::vector<double> empirical_frequencies(const std::function<TokenId()> & draw,
                                          std::size_t vocab, int n) {
    std::vector<double> freq(vocab, 0.0);
    for (int i = 0; i < n; ++i) {
        freq[draw()] += 1.0;
    }
    for (double & f : freq) {
        f /= n;
    }
    return freq;
}

void check_within_3_sigma(const std::vector<double> & freq, const std::vector<double> & expected,
                          int n) {
    for (std::size_t v = 0; v < freq.size(); ++v) {
        const double sigma = std::sqrt(expected[v] * (1.0 - expected[v]) / n);
        CHECK(std::fabs(freq[v] - expected[v]) <= 3.0 * sigma + 1e-12);
    }
}

// backend wrapper that starts failing after a set number of step calls
class FailingBackend final : public Backend {
public:
    FailingBackend(const Backend & inner, int budget) : inner_(inner), budget_(budget) {}

    const BackendDescriptor & descriptor() const override { return inner_.descriptor(); }

    StepOutput step(std::span<const TokenId> context) const override {
        if (--budget_ < 0) {
            throw ValidationError("synthetic fault");
        }
        return inner_.step(context);
    }

private:
    const Backend & inner_;
    mutable int budget_;
};

} // namespace

TEST_CASE("greedy picks the argmax with lowest-id ties") {
    CHECK(greedy_step(dist_of({0.1, 0.7, 0.2})) == 1);
    CHECK(greedy_step(dist_of({0.5, 0.5})) == 0);
    SplitMix64 rng(1);
    for (int trial = 0; trial < 300; ++trial) {
        const auto dist = test::random_distribution(rng, 2 + rng.next() % 64);
        std::size_t best = 0;
        for (std::size_t i = 1; i < dist.probs.size(); ++i) {
            if (dist.probs[i] > dist.probs[best]) {
                best = i;
            }
        }
        CHECK(greedy_step(dist) == best);
    }
}

TEST_CASE("top-k sampling with k = 1 is greedy") {
    SplitMix64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const auto dist = test::random_distribution(rng, 16);
        SplitMix64 draw(trial);
        CHECK(topk_sample_step(dist, 1, draw) == greedy_step(dist));
    }
}

TEST_CASE("top-k sampling matches the distribution statistically") {
    const int n = 100000;
    {
        SplitMix64 rng(42);
        const auto dist = dist_of({0.35, 0.05, 0.4, 0.2});
        const auto freq = empirical_frequencies(
            [&] { return topk_sample_step(dist, 4, rng); }, 4, n);
        check_within_3_sigma(freq, dist.probs, n);
    }
    {
        SplitMix64 rng(43);
        const auto dist = dist_of({0.9, 0.05, 0.05});
        const auto freq = empirical_frequencies(
            [&] { return topk_sample_step(dist, 2, rng); }, 3, n);
        check_within_3_sigma(freq, {0.9 / 0.95, 0.05 / 0.95, 0.0}, n);
    }
}

TEST_CASE("top-k sampling validates k") {
    const auto dist = dist_of({0.5, 0.5});
    SplitMix64 rng(3);
    CHECK_THROWS_AS(topk_sample_step(dist, 0, rng), ArgumentError);
    CHECK_THROWS_AS(topk_sample_step(dist, 3, rng), ArgumentError);
}

TEST_CASE("nucleus support from the hand prefix sum") {
    // 0.4 < 0.5 <= 0.7: the minimal prefix is {0, 1}
    const auto dist = dist_of({0.4, 0.3, 0.2, 0.1});
    const int n = 20000;
    SplitMix64 rng(4);
    const auto freq = empirical_frequencies([&] { return nucleus_step(dist, 0.5, rng); }, 4, n);
    CHECK(freq[2] == 0.0);
    CHECK(freq[3] == 0.0);
    check_within_3_sigma(freq, {0.4 / 0.7, 0.3 / 0.7, 0.0, 0.0}, n);
}

TEST_CASE("nucleus with p below the top mass is greedy") {
    const auto dist = dist_of({0.4, 0.3, 0.2, 0.1});
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        SplitMix64 rng(seed);
        CHECK(nucleus_step(dist, 0.3, rng) == 0);
    }
}

TEST_CASE("nucleus with p = 1 samples the full vocabulary") {
    const auto dist = dist_of({0.5, 0.25, 0.125, 0.125});
    const int n = 100000;
    SplitMix64 rng(5);
    const auto freq = empirical_frequencies([&] { return nucleus_step(dist, 1.0, rng); }, 4, n);
    check_within_3_sigma(freq, dist.probs, n);
}

TEST_CASE("typical sampling keeps the hand-ranked support") {
    // H = 1.5 ln 2; deviations tie, the higher-mass token ranks first, so the
    // prefix that strictly surpasses tau = 0.5 is {0, 1}
    const auto dist = dist_of({0.5, 0.25, 0.25});
    const int n = 20000;
    SplitMix64 rng(6);
    const auto freq = empirical_frequencies([&] { return typical_step(dist, 0.5, rng); }, 3, n);
    CHECK(freq[2] == 0.0);
    check_within_3_sigma(freq, {0.5 / 0.75, 0.25 / 0.75, 0.0}, n);
}

TEST_CASE("typical sampling on a uniform distribution keeps the id-ordered prefix") {
    // deviations and masses all tie; away from an exact mass boundary the
    // prefix is the first ceil(tau * n) ids
    ProbabilityDistribution uniform;
    uniform.probs.assign(5, 0.2);
    const int n = 20000;
    SplitMix64 rng(7);
    const auto freq = empirical_frequencies([&] { return typical_step(uniform, 0.5, rng); }, 5, n);
    CHECK(freq[3] == 0.0);
    CHECK(freq[4] == 0.0);
    check_within_3_sigma(freq, {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0, 0.0}, n);
}

TEST_CASE("typical sampling with tau = 1 covers the positive support") {
    const auto dist = dist_of({0.4, 0.3, 0.0, 0.3});
    std::vector<bool> seen(4, false);
    SplitMix64 rng(8);
    for (int i = 0; i < 2000; ++i) {
        seen[typical_step(dist, 1.0, rng)] = true;
    }
    CHECK(seen[0]);
    CHECK(seen[1]);
    CHECK_FALSE(seen[2]); // zero-mass tokens are excluded before ranking
    CHECK(seen[3]);
}

namespace {

// orthogonal construction: candidate i has cosine exactly penalties[i]
// against the single context vector e_0
std::map<TokenId, Representation> candidates_with_penalties(const std::vector<double> & penalties) {
    std::map<TokenId, Representation> reps;
    const std::size_t dim = penalties.size() + 2;
    for (std::size_t i = 0; i < penalties.size(); ++i) {
        Representation rep;
        rep.values.assign(dim, 0.0);
        rep.values[0] = penalties[i];
        rep.values[i + 1] = std::sqrt(1.0 - penalties[i] * penalties[i]);
        reps[static_cast<TokenId>(i)] = std::move(rep);
    }
    return reps;
}

ContextRepresentations single_axis_context(std::size_t dim) {
    Representation e0;
    e0.values.assign(dim, 0.0);
    e0.values[0] = 1.0;
    ContextRepresentations context;
    context.append(std::move(e0));
    return context;
}

} // namespace

TEST_CASE("contrastive step with alpha = 0 is greedy over the candidate pool") {
    SplitMix64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const auto dist = test::random_distribution(rng, 12);
        std::vector<double> penalties(12);
        for (double & p : penalties) {
            p = rng.next_unit() * 2.0 - 1.0;
        }
        const auto reps = candidates_with_penalties(penalties);
        const auto context = single_axis_context(14);
        const auto choice = contrastive_step(dist, reps, context, 5, 0.0);
        CHECK(choice.token == greedy_step(dist));
        CHECK(choice.confidence == dist.probs[choice.token]);
    }
}

TEST_CASE("contrastive step with alpha = 1 is pure penalty avoidance") {
    // token 2 is orthogonal to the context, the others duplicate it
    const auto dist = dist_of({0.5, 0.3, 0.1, 0.1});
    const auto reps = candidates_with_penalties({1.0, 1.0, 0.0, 1.0});
    const auto context = single_axis_context(6);
    const auto choice = contrastive_step(dist, reps, context, 4, 1.0);
    CHECK(choice.token == 2);
    CHECK(choice.penalty == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("contrastive step equals exhaustive score enumeration") {
    SplitMix64 rng(10);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t vocab = 8 + rng.next() % 8;
        const auto dist = test::random_distribution(rng, vocab);
        std::vector<double> penalties(vocab);
        for (double & p : penalties) {
            p = rng.next_unit() * 2.0 - 1.0;
        }
        const auto reps = candidates_with_penalties(penalties);
        const auto context = single_axis_context(vocab + 2);
        const double alpha = rng.next_unit();
        const int k = 5;

        const auto candidates = topk_indices(dist.probs, k);
        TokenId expected = candidates.front();
        double best = -1e300;
        for (const TokenId v : candidates) {
            const double score = (1.0 - alpha) * dist.probs[v] - alpha * penalties[v];
            if (score > best) {
                best = score;
                expected = v;
            }
        }
        const auto choice = contrastive_step(dist, reps, context, k, alpha);
        CHECK(choice.token == expected);
        CHECK(choice.penalty == doctest::Approx(penalties[choice.token]).epsilon(1e-9));
    }
}

TEST_CASE("contrastive argmax is invariant under a constant penalty shift") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t vocab = 10;
        // dyadic masses and penalties keep the shifted scores exact
        std::vector<double> masses(vocab);
        double total = 0.0;
        for (double & m : masses) {
            m = static_cast<double>(1 + rng.next() % 64) / 64.0;
            total += m;
        }
        for (double & m : masses) {
            m /= total;
        }
        std::vector<double> penalties(vocab);
        for (double & p : penalties) {
            p = static_cast<double>(rng.next() % 33) / 64.0 - 0.25;
        }
        auto shifted = penalties;
        for (double & p : shifted) {
            p += 0.25;
        }
        const auto dist = dist_of(masses);
        const auto context = single_axis_context(vocab + 2);
        const auto a = contrastive_step(dist, candidates_with_penalties(penalties), context, 6, 0.5);
        const auto b = contrastive_step(dist, candidates_with_penalties(shifted), context, 6, 0.5);
        CHECK(a.token == b.token);
    }
}

TEST_CASE("contrastive step demands a representation per candidate") {
    const auto dist = dist_of({0.5, 0.3, 0.2});
    auto reps = candidates_with_penalties({0.1, 0.2, 0.3});
    reps.erase(1);
    const auto context = single_axis_context(5);
    CHECK_THROWS_AS(contrastive_step(dist, reps, context, 3, 0.5), ContractError);
}

TEST_CASE("adaptive step grows both history lists by exactly one entry") {
    const auto backend = make_synthetic_backend(32, 16, 3, 0.3);
    std::vector<TokenId> context{1, 2};
    ContextRepresentations reps;
    for (std::size_t j = 1; j <= context.size(); ++j) {
        reps.append(backend->step(std::span(context.data(), j)).last_representation);
    }
    EntropyHistory history;
    for (std::size_t step = 0; step < 6; ++step) {
        const auto dist = backend->step(context).dist;
        auto stepped = adaptive_contrastive_step(dist, *backend, context, reps, history, 1.0,
                                                 AdaptiveVariant::standard);
        CHECK(history.full_entropies.size() == step + 1);
        CHECK(history.topk_entropies_normalized.size() == step + 1);
        CHECK(history.topk_entropies_normalized.back() >= 0.0);
        CHECK(history.topk_entropies_normalized.back() <= 1.0);
        context.push_back(stepped.token);
        reps.append(std::move(stepped.token_representation));
    }
}

TEST_CASE("adapt_parameters matches the recorded trace fields") {
    const auto backend = make_synthetic_backend(48, 24, 5, 0.4);
    DecoderConfig config;
    config.method = DecodeMethod::adaptive_double_exp;
    config.q = 3.0;
    config.max_new_tokens = 12;
    const auto result = generate(*backend, std::vector<TokenId>{7, 1}, config);
    // replay parameter selection from the recorded entropies
    EntropyHistory history;
    for (const auto & record : result.trace) {
        CHECK(record.alpha_t.value() == alpha_from_delta(record.delta_tk.value()));
        CHECK(record.k_t.value() == k_from_delta(record.delta_t.value()));
        history.full_entropies.push_back(record.full_entropy.value());
        history.topk_entropies_normalized.push_back(
            record.topk_entropy.value() / std::log(static_cast<double>(record.k_t.value())));
    }
}

TEST_CASE("adaptive first step lands on the neutral parameters") {
    const auto backend = make_synthetic_backend(32, 16, 5, 0.2);
    const std::vector<TokenId> prompt{3, 7};
    DecoderConfig config;
    config.method = DecodeMethod::adaptive_contrastive;
    config.q = 1.0;
    config.max_new_tokens = 1;
    const auto result = generate(*backend, prompt, config);
    REQUIRE(result.trace.size() == 1);
    CHECK(result.trace[0].k_t.value() == 10);
    CHECK(result.trace[0].alpha_t.value() == 0.5);
    CHECK(result.trace[0].delta_t.value() == 0.0);
    CHECK(result.trace[0].delta_tk.value() == 0.0);
}

TEST_CASE("vanishing temperature reduces ACS to fixed contrastive search") {
    const auto backend = make_synthetic_backend(48, 32, 9, 0.5);
    DecoderConfig acs;
    acs.method = DecodeMethod::adaptive_contrastive;
    acs.q = 1e-9;
    acs.max_new_tokens = 40;
    DecoderConfig cs;
    cs.method = DecodeMethod::contrastive;
    cs.k = 10;
    cs.alpha = 0.5;
    cs.max_new_tokens = 40;
    for (std::uint64_t s = 0; s < 5; ++s) {
        const std::vector<TokenId> prompt{static_cast<TokenId>(s * 7 % 48),
                                          static_cast<TokenId>(s + 1)};
        CHECK(generate(*backend, prompt, acs).tokens == generate(*backend, prompt, cs).tokens);
    }
}

TEST_CASE("adaptive trace respects the parameter and entropy bounds") {
    const auto backend = make_synthetic_backend(64, 32, 13, 0.6);
    for (const auto method : {DecodeMethod::adaptive_contrastive, DecodeMethod::adaptive_double_exp}) {
        DecoderConfig config;
        config.method = method;
        config.q = 4.0;
        config.max_new_tokens = 64;
        const auto result = generate(*backend, std::vector<TokenId>{1, 2, 3}, config);
        REQUIRE(result.trace.size() == 64);
        for (const auto & record : result.trace) {
            const int k = record.k_t.value();
            CHECK(k >= 5);
            CHECK(k <= 15);
            const double alpha = record.alpha_t.value();
            CHECK(alpha > 0.0);
            CHECK(alpha < 1.0);
            CHECK(record.topk_entropy.value() >= 0.0);
            CHECK(record.topk_entropy.value() <= std::log(static_cast<double>(k)) + 1e-12);
            CHECK(record.full_entropy.value() >= 0.0);
            CHECK(record.full_entropy.value() <= std::log(64.0) + 1e-12);
            // alpha is the sigmoid of the recorded delta
            CHECK(alpha == doctest::Approx(alpha_from_delta(record.delta_tk.value())).epsilon(1e-12));
        }
    }
}

TEST_CASE("double exp pushes alpha outward at matched histories") {
    const auto backend = make_synthetic_backend(64, 32, 17, 0.5);
    DecoderConfig config;
    config.method = DecodeMethod::adaptive_contrastive;
    config.q = 2.0;
    config.max_new_tokens = 48;
    const auto result = generate(*backend, std::vector<TokenId>{5, 6}, config);
    for (const auto & record : result.trace) {
        const double alpha_std = record.alpha_t.value();
        const double alpha_de = alpha_from_delta(double_exp_delta(record.delta_tk.value()));
        CHECK(std::fabs(alpha_de - 0.5) >= std::fabs(alpha_std - 0.5) - 1e-15);
    }
}

TEST_CASE("generation is deterministic and sized by max_new_tokens") {
    const auto backend = make_synthetic_backend(32, 16, 21, 0.4);
    for (const auto method : {DecodeMethod::greedy, DecodeMethod::top_k, DecodeMethod::nucleus,
                              DecodeMethod::typical, DecodeMethod::contrastive,
                              DecodeMethod::adaptive_contrastive}) {
        DecoderConfig config;
        config.method = method;
        config.k = 8;
        config.max_new_tokens = 24;
        config.rng_seed = 77;
        const std::vector<TokenId> prompt{4, 9, 2};
        const auto a = generate(*backend, prompt, config);
        const auto b = generate(*backend, prompt, config);
        CHECK(a.tokens == b.tokens);
        CHECK(a.tokens.size() == 24);
        CHECK(a.trace.size() == a.tokens.size());
        CHECK(a.elapsed_seconds >= 0.0);
        CHECK(a.tokens_per_second > 0.0);
    }
}

TEST_CASE("greedy on a fully repetition-biased backend loops the last prompt token") {
    const auto backend = make_synthetic_backend(16, 8, 1, 1.0);
    DecoderConfig config;
    config.method = DecodeMethod::greedy;
    config.max_new_tokens = 12;
    const auto result = generate(*backend, std::vector<TokenId>{3, 11}, config);
    for (const TokenId t : result.tokens) {
        CHECK(t == 11);
    }
}

TEST_CASE("stop tokens end the generation early") {
    const auto backend = make_synthetic_backend(16, 8, 1, 1.0);
    DecoderConfig config;
    config.method = DecodeMethod::greedy;
    config.max_new_tokens = 50;
    config.stop_tokens = {11};
    const auto result = generate(*backend, std::vector<TokenId>{3, 11}, config);
    REQUIRE(result.tokens.size() == 1);
    CHECK(result.tokens[0] == 11);
    CHECK(result.trace.size() == 1);
}

TEST_CASE("backend faults carry the failing step index") {
    const auto inner = make_synthetic_backend(32, 8, 2, 0.0);
    FailingBackend flaky(*inner, 4);
    DecoderConfig config;
    config.method = DecodeMethod::greedy;
    config.max_new_tokens = 20;
    try {
        generate(flaky, std::vector<TokenId>{1}, config);
        FAIL("expected a ValidationError");
    } catch (const ValidationError & e) {
        CHECK(std::string(e.what()).find("step 4") != std::string::npos);
        CHECK(std::string(e.what()).find("synthetic fault") != std::string::npos);
    }
}

TEST_CASE("config validation rejects out-of-range parameters") {
    const auto backend = make_synthetic_backend(16, 8, 0, 0.0);
    DecoderConfig config;
    config.method = DecodeMethod::top_k;
    config.k = 17;
    CHECK_THROWS_AS(generate(*backend, std::vector<TokenId>{1}, config), ArgumentError);
    config.method = DecodeMethod::nucleus;
    config.p = 0.0;
    CHECK_THROWS_AS(generate(*backend, std::vector<TokenId>{1}, config), ArgumentError);
    config.method = DecodeMethod::typical;
    config.tau = 1.5;
    CHECK_THROWS_AS(generate(*backend, std::vector<TokenId>{1}, config), ArgumentError);
    config.method = DecodeMethod::adaptive_contrastive;
    config.q = 0.0;
    CHECK_THROWS_AS(generate(*backend, std::vector<TokenId>{1}, config), ArgumentError);
    config.method = DecodeMethod::greedy;
    CHECK_THROWS_AS(generate(*backend, std::vector<TokenId>{}, config), ArgumentError);
    // adaptive k can reach 15, larger than this vocabulary
    const auto tiny = make_synthetic_backend(8, 4, 0, 0.0);
    config.method = DecodeMethod::adaptive_contrastive;
    config.q = 1.0;
    CHECK_THROWS_AS(generate(*tiny, std::vector<TokenId>{1}, config), ArgumentError);
}

TEST_CASE("method names round-trip") {
    for (const auto method : {DecodeMethod::greedy, DecodeMethod::top_k, DecodeMethod::nucleus,
                              DecodeMethod::typical, DecodeMethod::contrastive,
                              DecodeMethod::adaptive_contrastive, DecodeMethod::adaptive_double_exp}) {
        CHECK(decode_method_from_string(to_string(method)) == method);
    }
    CHECK_FALSE(decode_method_from_string("beam").has_value());
}
