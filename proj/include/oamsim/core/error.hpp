#pragma once

#include <stdexcept>
#include <string>

namespace oamsim {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: parameters, configuration, or mismatched shapes.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical safety check tripped (step size, truncation, padding, convergence).
class NumericalGuard : public Error {
 public:
  NumericalGuard(std::string guard, const std::string& what)
      : Error(guard + ": " + what), guard_(std::move(guard)) {}

  const std::string& guard() const noexcept { return guard_; }

 private:
  std::string guard_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace oamsim
