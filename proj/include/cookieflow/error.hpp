#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cookieflow {

enum class ErrorCode {
  EmptyHost,
  InvalidLabel,
  MalformedRule,
  HostIsPublicSuffix,
  MalformedDomain,
  MalformedRecord,
  SequenceViolation,
  MalformedPair,
  MissingName,
  MalformedExpires,
  WrongPhase,
  SampleTooLarge,
  IoError,
  CorruptSnapshot,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Non-fatal problem found while parsing; `line` is 1-based, 0 when unknown.
struct Diagnostic {
  ErrorCode code;
  std::size_t line = 0;
  std::string message;
};

using Diagnostics = std::vector<Diagnostic>;

}  // namespace cookieflow
