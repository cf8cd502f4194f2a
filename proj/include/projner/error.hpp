#pragma once

#include <stdexcept>
#include <string>

namespace projner {

// Base of every error raised by the library. The CLI maps subclasses onto
// exit codes (see cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (standoff lines, Pharaoh tokens, JSON records).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Offsets or indices outside the bounds of their owner.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Data that is well-formed but inconsistent with itself (surface mismatch,
// placeholder overlapping an entity, differing texts).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// A caller violated an operation precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Ungrammatical BILOU action sequence.
class StructureError : public Error {
 public:
  StructureError(const std::string& what, std::size_t position)
      : Error(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// Mismatched sequence lengths between paired inputs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration, label maps, or command-line values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A referenced input file or directory does not exist.
class MissingInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace projner
