#pragma once

#include <stdexcept>
#include <string>

namespace gka {

// Base of every error the library raises. Each subclass maps onto one failure
// category a caller may want to distinguish.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonInvertible : public Error {
 public:
  NonInvertible() : Error("element has no multiplicative inverse") {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : Error("byte string length mismatch: " + std::to_string(a) + " vs " +
              std::to_string(b)) {}
};

class ParamError : public Error {
 public:
  using Error::Error;
};

class SelfKeyError : public Error {
 public:
  SelfKeyError() : Error("cannot derive a pairwise key with oneself") {}
};

class ArityError : public Error {
 public:
  ArityError(std::size_t got, std::size_t want)
      : Error("expected " + std::to_string(want) + " contributions, got " +
              std::to_string(got)) {}
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Misuse of a participant state machine (calling a stage out of order).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace gka
