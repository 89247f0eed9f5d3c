#pragma once

#include <stdexcept>
#include <string>

namespace tqnf {

// Error taxonomy shared by the whole engine. The CLI maps ErrorKind to its
// exit codes: config/validation problems -> 2, numerical failures -> 3.
enum class ErrorKind {
  incompatible_hbar_tag,
  insufficient_grid,
  zero_shift,
  resonant_mode,
  resonant_frequency,
  neumann_diverges,
  series_diverges,
  not_hermitian,
  box_mismatch,
  theta_too_large,
  step_condition_violated,
  budget_exceeded,
  not_real,
  invalid_config,
};

class EngineError : public std::runtime_error {
 public:
  EngineError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

  static const char* kind_name(ErrorKind k) {
    switch (k) {
      case ErrorKind::incompatible_hbar_tag: return "IncompatibleHbarTag";
      case ErrorKind::insufficient_grid: return "InsufficientGrid";
      case ErrorKind::zero_shift: return "ZeroShift";
      case ErrorKind::resonant_mode: return "ResonantMode";
      case ErrorKind::resonant_frequency: return "ResonantFrequency";
      case ErrorKind::neumann_diverges: return "NeumannDiverges";
      case ErrorKind::series_diverges: return "SeriesDiverges";
      case ErrorKind::not_hermitian: return "NotHermitian";
      case ErrorKind::box_mismatch: return "BoxMismatch";
      case ErrorKind::theta_too_large: return "ThetaTooLarge";
      case ErrorKind::step_condition_violated: return "StepConditionViolated";
      case ErrorKind::budget_exceeded: return "BudgetExceeded";
      case ErrorKind::not_real: return "NotReal";
      case ErrorKind::invalid_config: return "InvalidConfig";
    }
    return "Unknown";
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw EngineError(kind, std::string(EngineError::kind_name(kind)) + ": " + msg);
}

}  // namespace tqnf
