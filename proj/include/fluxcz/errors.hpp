#pragma once

#include <stdexcept>
#include <string>

namespace fluxcz {

// Error categories surfaced through the C API as status codes. Values are
// part of the ABI; append only.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kDomain = 2,
  kNumerical = 3,
  kConvergence = 4,
  kLabeling = 5,
  kIntegration = 6,
  kPhaseUndefined = 7,
  kInfeasible = 8,
  kFit = 9,
  kCalibration = 10,
  kParse = 11,
  kValidation = 12,
  kIo = 13,
  kUnknownCommand = 14,
  kOptimizer = 15,
  kInternal = 99,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define FLUXCZ_DEFINE_ERROR(Name, Code)                                  \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {} \
  };

FLUXCZ_DEFINE_ERROR(InvalidArgumentError, kInvalidArgument)
FLUXCZ_DEFINE_ERROR(DomainError, kDomain)
FLUXCZ_DEFINE_ERROR(NumericalError, kNumerical)
FLUXCZ_DEFINE_ERROR(ConvergenceError, kConvergence)
FLUXCZ_DEFINE_ERROR(LabelingError, kLabeling)
FLUXCZ_DEFINE_ERROR(PhaseUndefinedError, kPhaseUndefined)
FLUXCZ_DEFINE_ERROR(InfeasibleError, kInfeasible)
FLUXCZ_DEFINE_ERROR(FitError, kFit)
FLUXCZ_DEFINE_ERROR(CalibrationError, kCalibration)
FLUXCZ_DEFINE_ERROR(ParseError, kParse)
FLUXCZ_DEFINE_ERROR(ValidationError, kValidation)
FLUXCZ_DEFINE_ERROR(IoError, kIo)
FLUXCZ_DEFINE_ERROR(UnknownCommandError, kUnknownCommand)
FLUXCZ_DEFINE_ERROR(OptimizerError, kOptimizer)

#undef FLUXCZ_DEFINE_ERROR

// Raised when the adaptive integrator cannot meet its tolerance.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double achieved_time)
      : Error(ErrorCode::kIntegration, what), achieved_time_(achieved_time) {}
  double achieved_time() const noexcept { return achieved_time_; }

 private:
  double achieved_time_;
};

}  // namespace fluxcz
