#include "sublevel/error.hpp"

namespace sublevel {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidMatrix: return "InvalidMatrix";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DimensionError: return "DimensionError";
    case ErrorCode::InvalidCoarseDim: return "InvalidCoarseDim";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::CapExceeded: return "CapExceeded";
    case ErrorCode::Precondition: return "Precondition";
    case ErrorCode::LineSearchFailed: return "LineSearchFailed";
    case ErrorCode::SingularHessian: return "SingularHessian";
    case ErrorCode::SingularReducedHessian: return "SingularReducedHessian";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace sublevel
