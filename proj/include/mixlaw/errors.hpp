// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mixlaw {

/// Raised when the multi-start fit ends with no admissible candidate.
class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a solver's constraint cannot be met anywhere in [0, 1].
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

/// Base for run-log ingestion failures; carries the 1-based input line.
class RunLogError : public std::runtime_error {
 public:
  RunLogError(long line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// Record that could not be tokenized or decoded at all.
class ParseError : public RunLogError {
 public:
  using RunLogError::RunLogError;
};

/// Record that decoded but is missing fields or violates value invariants.
class SchemaError : public RunLogError {
 public:
  using RunLogError::RunLogError;
};

/// Two records claim the same (curve, step) slot.
class ConflictError : public RunLogError {
 public:
  using RunLogError::RunLogError;
};

/// A curve lacks the evaluation steps an operation needs.
class InsufficientDataError : public std::runtime_error {
 public:
  explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mixlaw
