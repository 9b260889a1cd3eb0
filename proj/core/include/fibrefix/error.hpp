#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fibrefix {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument value (negative tolerance, lambda outside (0,1), ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Two objects that must live on the same probability space do not.
class SpaceMismatch : public Error {
 public:
  using Error::Error;
};

/// A fibre map sent a point outside its admissible fibre set.
class DomainEscape : public Error {
 public:
  DomainEscape(std::size_t atom, const std::string& what)
      : Error("atom " + std::to_string(atom) + ": " + what), atom_(atom) {}

  std::size_t atom() const noexcept { return atom_; }

 private:
  std::size_t atom_;
};

/// Malformed problem file or field.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace fibrefix
