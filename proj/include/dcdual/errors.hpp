#pragma once

#include <stdexcept>
#include <string>

namespace dcdual {

/// Malformed case-file content. The message names the table and row.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Network data that parses but violates a structural invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cost model or file feature outside the supported subset.
class UnsupportedModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Singular or numerically degenerate linear system.
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated an operation's documented precondition.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace dcdual
