#pragma once

#include <stdexcept>

namespace coinfer {

// Error taxonomy shared across modules. The CLI maps these onto exit codes
// (see tools/).

// Invalid configuration values (bad ranges, inconsistent sections).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input documents (profiles, run configs, checkpoints).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Arguments outside the model's validity (d < 1 m, power out of (0, p_max], ...).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API misuse: calling an operation whose preconditions the caller controls
// (step after done, backward without a recorded forward, ...).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace coinfer
