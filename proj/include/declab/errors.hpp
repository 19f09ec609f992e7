#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace declab {

/// Config / input validation failure (CLI exit code 1).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sequence-space cap exceeded (CLI exit code 2).
struct BudgetExceededError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Conditioning on a prefix with zero marginal probability.
struct UndefinedConditionalError : std::runtime_error {
  explicit UndefinedConditionalError(std::string prefix_repr)
      : std::runtime_error("undefined conditional: prefix " + prefix_repr +
                           " has zero marginal probability"),
        prefix(std::move(prefix_repr)) {}
  std::string prefix;
};

/// Raised under the error_on_tie policy; carries the tied candidates.
struct TieError : std::runtime_error {
  explicit TieError(std::vector<std::string> tied_reprs)
      : std::runtime_error("tie detected among " +
                           std::to_string(tied_reprs.size() + 1) +
                           " candidates"),
        tied(std::move(tied_reprs)) {}
  std::vector<std::string> tied;
};

/// A zero conditional was found where full support is required.
struct SupportViolationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace declab
