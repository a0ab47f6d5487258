#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace msmi {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (JSONL records, TOML, templates). Carries a 1-based
/// line number when one is known; 0 means "no line information".
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message, std::size_t line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Invalid configuration: bad ratios, missing required keys, out-of-range
/// thresholds, unknown template placeholders.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Semantically invalid data: unknown labels, duplicate ids, empty corpora,
/// class indices out of range.
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Model container problems: bad magic, unsupported version, checksum mismatch.
class ModelFormatError : public Error {
 public:
  using Error::Error;
};

/// Network-level failure talking to a remote classifier, embedder or chat
/// endpoint. `retryable()` distinguishes transient transport faults from
/// permanent rejections.
class TransportError : public Error {
 public:
  TransportError(const std::string& message, bool retryable)
      : Error(message), retryable_(retryable) {}

  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

/// A remote peer answered, but the payload violates the wire contract
/// (missing fields, wrong dimension, probabilities far from a distribution,
/// empty completion).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace msmi
