#pragma once

#include <stdexcept>
#include <string>

namespace jssa {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector sizes disagree with the chain or with each other.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN or infinity in an input that must be finite.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// Critical point pair is (numerically) coincident; the separation direction is undefined.
class DegenerateDistance : public Error {
 public:
  using Error::Error;
};

class TaskInfeasible : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent configuration document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace jssa
