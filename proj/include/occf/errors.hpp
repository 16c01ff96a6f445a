#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace occf {

// Invalid or mutually inconsistent configuration values.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A closed-form quantity evaluated outside its domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class GenerationError : public std::runtime_error {
 public:
  GenerationError(const std::string& what, double best_gamma)
      : std::runtime_error(what), best_gamma_(best_gamma) {}
  double best_gamma() const noexcept { return best_gamma_; }

 private:
  double best_gamma_;
};

// Same-type inner product of zero: separation cannot be expressed as a ratio.
class DegenerateSeparationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Schedule arithmetic reached a state the step-type law excludes.
class ScheduleError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Operation called on the wrong kind of environment.
class DispatchError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Too few items or users survive corpus filtering.
class SelectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace occf
