#include "fluxcz/errors.hpp"

namespace fluxcz {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kNumerical: return "numerical";
    case ErrorCode::kConvergence: return "convergence";
    case ErrorCode::kLabeling: return "labeling";
    case ErrorCode::kIntegration: return "integration";
    case ErrorCode::kPhaseUndefined: return "phase_undefined";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kFit: return "fit";
    case ErrorCode::kCalibration: return "calibration";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kUnknownCommand: return "unknown_command";
    case ErrorCode::kOptimizer: return "optimizer";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

}  // namespace fluxcz
