#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>

#include "acs/prob.hpp"
#include "acs/representation.hpp"

namespace acs {

using TokenId = std::uint32_t;

struct BackendDescriptor {
    std::size_t vocab_size = 0;
    std::size_t hidden_dim = 0;
    std::string name;
};

// One model evaluation: the next-token distribution given the context plus
// the representation of the newest context token.
struct StepOutput {
    ProbabilityDistribution dist;
    Representation last_representation;
};

class Backend {
public:
    virtual ~Backend() = default;

    virtual const BackendDescriptor & descriptor() const = 0;

    // Deterministic: the same context must produce an identical StepOutput
    // bit for bit. Throws ValidationError on an empty context or an
    // out-of-range token.
    virtual StepOutput step(std::span<const TokenId> context) const = 0;

    // Representation each candidate would have if appended to the context,
    // i.e. step(context + [v]).last_representation for every v. Overrides
    // may batch but must match that sequential definition exactly; the
    // default implementation is the loop itself.
    virtual std::map<TokenId, Representation> candidate_representations(
        std::span<const TokenId> context, std::span<const TokenId> candidates) const;

protected:
    void check_context(std::span<const TokenId> context) const;
};

// Deterministic test model. The whole behavior is fixed by four parameters
// and the hashing scheme below, so an independent implementation can
// reproduce every output:
//
//   chain    h0 = mix64(seed ^ 0x5EEDBA5E)
//            h  = (h ^ (t + 1)) * 0xC2B2AE3D27D4EB4F   for each t of the
//                 last-4-token context window, oldest first
//   logits   logit(v) = 6.0 * unit(mix64(h ^ ((v + 1) * 0x9E3779B97F4A7C15)))
//            where unit(x) = (x >> 11) * 2^-53
//   dist     e_v = exp(logit(v) - max logit), total = sum of e_v in id order,
//            p_v = (1 - repetition_bias) * (e_v / total), evaluated in
//            exactly that order, then repetition_bias added at the last
//            context token
//
// mix64 is the SplitMix64 finalizer. High repetition_bias concentrates mass
// on the most recent token, which makes greedy decoding loop.
//
// The representation of a context token v after predecessor u (u is the
// vocab_size sentinel when v is the first token) is a sparse unit vector:
//   base     b = mix64(seed ^ 0x0EC5 ^ (v + 1) * 0x9E3779B97F4A7C15
//                                    ^ (u + 1) * 0xC2B2AE3D27D4EB4F)
//   strands  for i in 0..3: s_i = mix64(b + i * 0x9E3779B97F4A7C15);
//            add (s_i >> 63 ? -1 : +1) at coordinate s_i mod hidden_dim
//   then L2-normalize; if the strands cancel exactly, coordinate b mod
//   hidden_dim is set to 1 instead. Identical (v, u) pairs therefore share
//   one representation, which is what makes the degeneration penalty bite
//   on repeats.
std::unique_ptr<Backend> make_synthetic_backend(std::size_t vocab_size, std::size_t hidden_dim,
                                                std::uint64_t seed, double repetition_bias);

} // namespace acs
