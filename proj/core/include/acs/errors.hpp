#pragma once

#include <stdexcept>
#include <string>

namespace acs {

// An input value failed a domain invariant (malformed distribution,
// non-finite number, non-unit vector, unparseable record, ...).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string & what) : std::runtime_error(what) {}
};

// A parameter is outside its documented range (k out of [1, vocab], ...).
struct ArgumentError : std::runtime_error {
    explicit ArgumentError(const std::string & what) : std::runtime_error(what) {}
};

// A caller broke an API contract, e.g. a candidate token has no
// representation in the map handed to the contrastive scorer.
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string & what) : std::runtime_error(what) {}
};

} // namespace acs
