// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kexprint {

enum class Errc {
  InvalidArgument,
  // wire
  InvalidField,
  NotSsh,
  Malformed,
  PayloadTooLarge,
  BadPacketLength,
  TooShort,
  InconsistentFraming,
  InvalidName,
  Truncated,
  WrongMessageType,
  // similarity
  NoSharedProbes,
  EmptyInput,
  // servers
  BindFailure,
  BackendUnavailable,
  // store
  IoFailure,
  ParseError,
  ProbeSetMismatch,
};

const char* errc_name(Errc c) noexcept;

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

// Raised by line-oriented loaders; line numbers are 1-based.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
    : Error(Errc::ParseError, "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

} // namespace kexprint
