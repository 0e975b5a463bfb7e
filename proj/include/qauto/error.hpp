#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qauto {

/// Every failure the library reports. Each code belongs to exactly one
/// error class, which decides the CLI exit status.
enum class ErrorCode {
  // input / configuration
  ParseError,
  SchemaError,
  InvalidArgument,
  // simulation runtime
  GimbalLock,
  NonFinite,
  NonPositiveMass,
  SingularInertia,
  EmptyChain,
  SizeMismatch,
  ZeroVector,
  NonUnitAxis,
  NonHermitian,
  DegenerateSpectrum,
  MisalignedStreams,
  EmptyKey,
  KeyExhausted,
  KeyReuse,
  UnsortedStream,
  NoCounts,
  ZeroDenominator,
  DegenerateLoop,
  ImproperTF,
  CoefficientOverflow,
  // filesystem
  IoError,
};

enum class ErrorClass { Schema, Runtime, Io };

std::string_view to_string(ErrorCode code);
ErrorClass error_class(ErrorCode code);

/// Process exit status for an error class: 2 schema, 3 runtime, 4 I/O.
int exit_code(ErrorClass cls);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorClass error_class() const noexcept { return qauto::error_class(code_); }

 private:
  ErrorCode code_;
};

}  // namespace qauto
