#include "adrsplit/error.hpp"

namespace adrsplit {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidDimension: return "invalid-dimension";
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::SingularResolvent: return "singular-resolvent";
    case ErrorCode::FactorizationFailure: return "factorization-failure";
    case ErrorCode::UnsupportedSubproblem: return "unsupported-subproblem";
    case ErrorCode::NonStronglyConvex: return "non-strongly-convex";
    case ErrorCode::OutOfTheory: return "out-of-theory";
    case ErrorCode::AssumptionViolation: return "assumption-violation";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::Certificate: return "certificate";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::NotReady: return "not-ready";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

}  // namespace adrsplit
