#pragma once

#include <stdexcept>
#include <string>

namespace ght {

// Invalid arguments or inputs outside an operation's domain.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Requested combination is recognised but not supported.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Numerical procedure failed (non-convergence, residual too large, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Window index requested outside the stored path window.
class OutOfWindowError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Bounded search gave up; carries the best value seen.
class CappedSearchError : public std::runtime_error {
 public:
  CappedSearchError(const std::string& what, int best)
      : std::runtime_error(what), best_(best) {}
  int best() const { return best_; }

 private:
  int best_;
};

}  // namespace ght
