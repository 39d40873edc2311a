#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dtmac {

// Malformed or inconsistent configuration (tables, clusters, file contents).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation precondition (e.g. transmitting from an empty buffer).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// MAP estimate requested on a Dirichlet row with some alpha <= 1.
class MapUndefinedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Dataset record that does not fit the system structure.
class RecordError : public std::runtime_error {
 public:
  RecordError(std::size_t index, const std::string& what)
      : std::runtime_error("record " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// Non-finite value surfaced by the gradient engine or the trainer.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, long location)
      : std::runtime_error(what), location_(location) {}
  // Layer index for gradient failures, iteration index for training divergence.
  long location() const noexcept { return location_; }

 private:
  long location_;
};

}  // namespace dtmac
