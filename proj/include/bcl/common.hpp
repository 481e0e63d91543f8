#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bcl {

using cd = std::complex<double>;
using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;
using MatC = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cd kI{0.0, 1.0};

enum class ErrorCode {
  PoleProximity,
  TruncationTooSmall,
  ConvergenceFailure,
  CrossingOffLattice,
  NotLinearCrossing,
  IsolationFailure,
  OverlapCollapse,
  SingularResolvent,
  LeftBrillouinWindow,
  NoCrossing,
  TangentialApproach,
  SecondCrossing,
  GridOverflow,
  DegenerateSlopes,
  EnvelopeClipped,
  StabilityViolation,
  GridMismatch,
  WindowEmpty,
  PhaseUnderResolved,
  DegenerateFit,
  InvalidConfig,
};

const char* error_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::PoleProximity: return "PoleProximity";
    case ErrorCode::TruncationTooSmall: return "TruncationTooSmall";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::CrossingOffLattice: return "CrossingOffLattice";
    case ErrorCode::NotLinearCrossing: return "NotLinearCrossing";
    case ErrorCode::IsolationFailure: return "IsolationFailure";
    case ErrorCode::OverlapCollapse: return "OverlapCollapse";
    case ErrorCode::SingularResolvent: return "SingularResolvent";
    case ErrorCode::LeftBrillouinWindow: return "LeftBrillouinWindow";
    case ErrorCode::NoCrossing: return "NoCrossing";
    case ErrorCode::TangentialApproach: return "TangentialApproach";
    case ErrorCode::SecondCrossing: return "SecondCrossing";
    case ErrorCode::GridOverflow: return "GridOverflow";
    case ErrorCode::DegenerateSlopes: return "DegenerateSlopes";
    case ErrorCode::EnvelopeClipped: return "EnvelopeClipped";
    case ErrorCode::StabilityViolation: return "StabilityViolation";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::WindowEmpty: return "WindowEmpty";
    case ErrorCode::PhaseUnderResolved: return "PhaseUnderResolved";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace bcl
