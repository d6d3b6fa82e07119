// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace denseworld {

// Root of every error raised by the library. Each subclass maps to one of the
// failure kinds callers are expected to branch on.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched or invalid image/grid dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// RLE counts that do not describe a valid mask.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

class EmptyMaskError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Retryable transport failure: connection refused, timeout, 5xx, 429.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Non-retryable HTTP status.
class ProtocolError : public Error {
 public:
  ProtocolError(int status, const std::string& what)
      : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

// Response body could not be decoded.
class DecodeError : public Error {
 public:
  using Error::Error;
};

// Response decoded but violates the request contract (e.g. mask size).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Scripted mock received a request it has no answer for.
class HarnessError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage could not produce output for an image.
class StageError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace denseworld
