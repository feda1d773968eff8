#pragma once

#include <stdexcept>
#include <string>

namespace vasculink {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The input document is malformed: bad JSON, missing or mistyped fields,
/// duplicate ids, references to unknown nodes or pipes.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// The input is well-formed but describes an invalid or degenerate model
/// (self-loops, cycles, inconsistent flow, no Tx->Rx path, ...).
class ModelError : public Error {
 public:
  using Error::Error;
};

}  // namespace vasculink
