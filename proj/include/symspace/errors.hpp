#pragma once

#include <stdexcept>
#include <string>

namespace symspace {

/// Failure categories raised by the toolkit. Each value corresponds to a
/// named precondition or certification failure of one operation.
enum class Errc {
  NotClosed,
  Degenerate,
  CompactType,
  MixedAlgebras,
  ThetaNotAutomorphism,
  BThetaNotPositive,
  SeedNotInP,
  SeedNotExtendable,
  GenericityFailure,
  NotDecomposable,
  H1NotUnit,
  H1NotInA,
  NotInS,
  NilpotencyOverflow,
  NonDifferentiable,
  FlowEscape,
  BoundaryMass,
  BadExponent,
  SupportLeak,
  ZeroDenominator,
  NotDivFree,
  NoDecay,
  NoPositiveRho,
  ConfigError,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::NotClosed: return "NotClosed";
    case Errc::Degenerate: return "Degenerate";
    case Errc::CompactType: return "CompactType";
    case Errc::MixedAlgebras: return "MixedAlgebras";
    case Errc::ThetaNotAutomorphism: return "ThetaNotAutomorphism";
    case Errc::BThetaNotPositive: return "BThetaNotPositive";
    case Errc::SeedNotInP: return "SeedNotInP";
    case Errc::SeedNotExtendable: return "SeedNotExtendable";
    case Errc::GenericityFailure: return "GenericityFailure";
    case Errc::NotDecomposable: return "NotDecomposable";
    case Errc::H1NotUnit: return "H1NotUnit";
    case Errc::H1NotInA: return "H1NotInA";
    case Errc::NotInS: return "NotInS";
    case Errc::NilpotencyOverflow: return "NilpotencyOverflow";
    case Errc::NonDifferentiable: return "NonDifferentiable";
    case Errc::FlowEscape: return "FlowEscape";
    case Errc::BoundaryMass: return "BoundaryMass";
    case Errc::BadExponent: return "BadExponent";
    case Errc::SupportLeak: return "SupportLeak";
    case Errc::ZeroDenominator: return "ZeroDenominator";
    case Errc::NotDivFree: return "NotDivFree";
    case Errc::NoDecay: return "NoDecay";
    case Errc::NoPositiveRho: return "NoPositiveRho";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace symspace
