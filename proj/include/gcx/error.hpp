#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gcx {

enum class ErrorCode {
  Parse,
  Overflow,
  DivisionByZero,
  InvalidArgument,
  // compute units
  NonPositiveReference,
  NegativeHours,
  ZeroBatch,
  MissingDeadline,
  // instruments
  InvalidInstrument,
  NotAnOption,
  NotLong,
  Expired,
  NegativeInputs,
  // matching
  UnknownInstrument,
  BadTick,
  GateRejected,
  UnknownOrder,
  // risk
  MissingMark,
  MissingVol,
  UnknownAccount,
  // clearing
  NoGuarantor,
  NotExpired,
  NotAFuture,
  UnknownObligation,
  DeadlinePassed,
  BadState,
  // tokens
  Insufficient,
  LockedByObligations,
  ExceedsStake,
  CapExceeded,
  // harness
  ScenarioInvalid,
  VersionMismatch,
  CorruptLog,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveReference: return "NonPositiveReference";
    case ErrorCode::NegativeHours: return "NegativeHours";
    case ErrorCode::ZeroBatch: return "ZeroBatch";
    case ErrorCode::MissingDeadline: return "MissingDeadline";
    case ErrorCode::InvalidInstrument: return "InvalidInstrument";
    case ErrorCode::NotAnOption: return "NotAnOption";
    case ErrorCode::NotLong: return "NotLong";
    case ErrorCode::Expired: return "Expired";
    case ErrorCode::NegativeInputs: return "NegativeInputs";
    case ErrorCode::UnknownInstrument: return "UnknownInstrument";
    case ErrorCode::BadTick: return "BadTick";
    case ErrorCode::GateRejected: return "GateRejected";
    case ErrorCode::UnknownOrder: return "UnknownOrder";
    case ErrorCode::MissingMark: return "MissingMark";
    case ErrorCode::MissingVol: return "MissingVol";
    case ErrorCode::UnknownAccount: return "UnknownAccount";
    case ErrorCode::NoGuarantor: return "NoGuarantor";
    case ErrorCode::NotExpired: return "NotExpired";
    case ErrorCode::NotAFuture: return "NotAFuture";
    case ErrorCode::UnknownObligation: return "UnknownObligation";
    case ErrorCode::DeadlinePassed: return "DeadlinePassed";
    case ErrorCode::BadState: return "BadState";
    case ErrorCode::Insufficient: return "Insufficient";
    case ErrorCode::LockedByObligations: return "LockedByObligations";
    case ErrorCode::ExceedsStake: return "ExceedsStake";
    case ErrorCode::CapExceeded: return "CapExceeded";
    case ErrorCode::ScenarioInvalid: return "ScenarioInvalid";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptLog: return "CorruptLog";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gcx
