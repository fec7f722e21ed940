#pragma once

#include <stdexcept>
#include <string>

namespace capgap {

// Input data is malformed or violates a record invariant. Messages name the
// offending file line or id where one exists.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine met non-finite values or cannot proceed.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument lies outside the operation's domain (bad fraction, k = 0, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace capgap
