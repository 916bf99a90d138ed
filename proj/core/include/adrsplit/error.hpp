#pragma once

#include <stdexcept>
#include <string>

namespace adrsplit {

enum class ErrorCode {
  InvalidDimension,
  InvalidParameter,
  SingularResolvent,
  FactorizationFailure,
  UnsupportedSubproblem,
  NonStronglyConvex,
  OutOfTheory,
  AssumptionViolation,
  Infeasible,
  Certificate,
  Divergence,
  NotReady,
  Config,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace adrsplit
