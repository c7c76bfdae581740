#pragma once

#include <stdexcept>
#include <string>

namespace spanex {

// Base class for all library errors. The CLI maps any Error to a nonzero
// exit code with the message on stderr.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (JSON syntax, missing field, bad config line).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structurally valid input that violates a data invariant (span out of
// range, inverted offsets, dangling relation endpoint).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Label not present in a fixed vocabulary, or a reserved label in data.
class VocabError : public Error {
 public:
  using Error::Error;
};

// Dimension or arity mismatch in a tensor-valued operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Out-of-range lookup into an embedding table.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Bad or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Token sequence longer than the encoder adapter supports.
class LengthError : public Error {
 public:
  using Error::Error;
};

// Gold/predicted corpora do not describe the same sentences.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Unreadable checkpoint or fingerprint mismatch on load.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

// Non-finite training loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace spanex
