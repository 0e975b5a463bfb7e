#include "qauto/error.hpp"

namespace qauto {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::GimbalLock: return "GimbalLock";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NonPositiveMass: return "NonPositiveMass";
    case ErrorCode::SingularInertia: return "SingularInertia";
    case ErrorCode::EmptyChain: return "EmptyChain";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NonUnitAxis: return "NonUnitAxis";
    case ErrorCode::NonHermitian: return "NonHermitian";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::MisalignedStreams: return "MisalignedStreams";
    case ErrorCode::EmptyKey: return "EmptyKey";
    case ErrorCode::KeyExhausted: return "KeyExhausted";
    case ErrorCode::KeyReuse: return "KeyReuse";
    case ErrorCode::UnsortedStream: return "UnsortedStream";
    case ErrorCode::NoCounts: return "NoCounts";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::DegenerateLoop: return "DegenerateLoop";
    case ErrorCode::ImproperTF: return "ImproperTF";
    case ErrorCode::CoefficientOverflow: return "CoefficientOverflow";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorClass error_class(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::SchemaError:
    case ErrorCode::InvalidArgument:
      return ErrorClass::Schema;
    case ErrorCode::IoError:
      return ErrorClass::Io;
    default:
      return ErrorClass::Runtime;
  }
}

int exit_code(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::Schema: return 2;
    case ErrorClass::Runtime: return 3;
    case ErrorClass::Io: return 4;
  }
  return 3;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace qauto
