#pragma once

#include <stdexcept>
#include <string>

namespace cncfl {

// Contract violation on caller-supplied data (dimension mismatch, empty input, ...).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A path references an unreachable hop or is not a permutation.
class InvalidPath : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

// Malformed file contents (IDX, consumption matrix, CSV, config).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The reachability graph admits no Hamiltonian path (or the search gave up).
class NoFeasiblePath : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The tier drawn by power-tiered sampling holds fewer clients than requested.
// Callers may retry with a fresh seed substream.
class TierTooSmall : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cncfl
