#pragma once

#include <stdexcept>
#include <string>

namespace expect {

/// Base class for every error raised by the toolkit.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input text (bad JSON, bad config line). Carries a position.
struct ParseError : Error {
  using Error::Error;
};

/// A record or argument violates a documented invariant.
struct ValidationError : Error {
  explicit ValidationError(const std::string& field, const std::string& msg)
      : Error(field + ": " + msg), field(field) {}
  std::string field;
};

struct EmptyInputError : ValidationError {
  explicit EmptyInputError(const std::string& what)
      : ValidationError(what, "empty input") {}
};

/// Two sequences that were expected to differ are identical.
struct NoEditError : Error {
  using Error::Error;
};

/// An edit is inconsistent with the sentence pair it claims to describe.
struct InvalidEditError : Error {
  using Error::Error;
};

/// A component broke its interface contract (shape, tree-ness, backend reply).
struct ContractError : Error {
  using Error::Error;
};

struct DimensionError : ContractError {
  using ContractError::ContractError;
};

/// Input longer than the model can accept; never truncated silently.
struct TruncationError : Error {
  using Error::Error;
};

/// Bad or inconsistent run configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// Unreadable or version-mismatched container file.
struct FormatError : Error {
  using Error::Error;
};

/// Prediction/gold sets do not line up by id.
struct AlignmentError : Error {
  using Error::Error;
};

/// Parser backend could not be reached or failed to run.
struct BackendError : Error {
  using Error::Error;
};

/// Correlation of a constant sequence is undefined.
struct UndefinedCorrelationError : Error {
  using Error::Error;
};

}  // namespace expect
