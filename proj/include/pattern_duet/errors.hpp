#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pattern_duet {

enum class ErrorKind {
  InvalidInput,
  NoInteriorEquilibrium,
  ExistenceConditionViolated,
  DomainError,
  HypothesisViolated,
  NegativeCritical,
  SingularNormalizer,
  SideConditionFailed,
  InvalidModePair,
  UnexpectedSingularity,
  BorderedSolveFailed,
  NonFiniteCoefficient,
  RootFindingFailed,
  DegenerateCubic,
  NotApplicable,
  ContinuationStalled,
  StepSizeUnderflow,
  BlowUp,
};

constexpr std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::NoInteriorEquilibrium: return "NoInteriorEquilibrium";
    case ErrorKind::ExistenceConditionViolated: return "ExistenceConditionViolated";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::NegativeCritical: return "NegativeCritical";
    case ErrorKind::SingularNormalizer: return "SingularNormalizer";
    case ErrorKind::SideConditionFailed: return "SideConditionFailed";
    case ErrorKind::InvalidModePair: return "InvalidModePair";
    case ErrorKind::UnexpectedSingularity: return "UnexpectedSingularity";
    case ErrorKind::BorderedSolveFailed: return "BorderedSolveFailed";
    case ErrorKind::NonFiniteCoefficient: return "NonFiniteCoefficient";
    case ErrorKind::RootFindingFailed: return "RootFindingFailed";
    case ErrorKind::DegenerateCubic: return "DegenerateCubic";
    case ErrorKind::NotApplicable: return "NotApplicable";
    case ErrorKind::ContinuationStalled: return "ContinuationStalled";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::BlowUp: return "BlowUp";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace pattern_duet
