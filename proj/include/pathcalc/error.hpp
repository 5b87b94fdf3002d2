#pragma once

#include <stdexcept>
#include <string>

namespace pathcalc {

// Error taxonomy shared by every module. Verdict-style operations never throw
// for "check failed"; these are reserved for malformed input.

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericRange : public std::range_error {
 public:
  using std::range_error::range_error;
};

class OutsideDomain : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Requested resolution (lattice spacing, occupation window) is finer than the
// sampled path can support.
class ResolutionExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Persisted artifact does not match the expected schema/version.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pathcalc
