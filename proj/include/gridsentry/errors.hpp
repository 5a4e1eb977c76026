#pragma once

#include <stdexcept>
#include <string>

namespace gridsentry {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. line/column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line = 0, int column = 0)
      : Error(line > 0 ? "line " + std::to_string(line) +
                             (column > 0 ? ":" + std::to_string(column) : "") +
                             ": " + msg
                       : msg),
        line(line),
        column(column) {}
  int line;
  int column;
};

// Structurally valid input that violates a case invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Singular or ill-conditioned systems, non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& msg, double final_mismatch)
      : NumericalError(msg), final_mismatch(final_mismatch) {}
  double final_mismatch;
};

class RankDeficientError : public NumericalError {
 public:
  RankDeficientError(const std::string& block, int rank, int required)
      : NumericalError("rank-deficient regressor in " + block + " block: rank " +
                       std::to_string(rank) + " < " + std::to_string(required)),
        block(block),
        rank(rank) {}
  std::string block;
  int rank;
};

}  // namespace gridsentry
