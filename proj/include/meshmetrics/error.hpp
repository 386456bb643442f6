#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace meshmetrics {

enum class Errc {
  // core
  InvalidArgument,
  DanglingEndpoint,
  ChannelOutOfRange,
  DuplicateLink,
  DuplicateNode,
  InvalidLink,
  UnknownLink,
  UnknownNode,
  Discontiguous,
  RepeatedNode,
  // linksim
  EmptyWindow,
  TooFewRecords,
  NoSamples,
  NonPositiveDelay,
  // metrics
  DeadLink,
  NegativeVariance,
  BadThreshold,
  ZeroBandwidth,
  EmptyPath,
  BadScale,
  BadRatio,
  FullOutage,
  MissingSelf,
  ZeroContention,
  ZeroRate,
  // routing
  NoRoute,
  SearchBudgetExceeded,
  LocalMinimum,
  UnknownMetric,
  // harness
  InvalidRoute,
  // cli
  FileNotFound,
  SchemaError,
  InvariantViolation,
  IoError,
};

constexpr std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DanglingEndpoint: return "DanglingEndpoint";
    case Errc::ChannelOutOfRange: return "ChannelOutOfRange";
    case Errc::DuplicateLink: return "DuplicateLink";
    case Errc::DuplicateNode: return "DuplicateNode";
    case Errc::InvalidLink: return "InvalidLink";
    case Errc::UnknownLink: return "UnknownLink";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::Discontiguous: return "Discontiguous";
    case Errc::RepeatedNode: return "RepeatedNode";
    case Errc::EmptyWindow: return "EmptyWindow";
    case Errc::TooFewRecords: return "TooFewRecords";
    case Errc::NoSamples: return "NoSamples";
    case Errc::NonPositiveDelay: return "NonPositiveDelay";
    case Errc::DeadLink: return "DeadLink";
    case Errc::NegativeVariance: return "NegativeVariance";
    case Errc::BadThreshold: return "BadThreshold";
    case Errc::ZeroBandwidth: return "ZeroBandwidth";
    case Errc::EmptyPath: return "EmptyPath";
    case Errc::BadScale: return "BadScale";
    case Errc::BadRatio: return "BadRatio";
    case Errc::FullOutage: return "FullOutage";
    case Errc::MissingSelf: return "MissingSelf";
    case Errc::ZeroContention: return "ZeroContention";
    case Errc::ZeroRate: return "ZeroRate";
    case Errc::NoRoute: return "NoRoute";
    case Errc::SearchBudgetExceeded: return "SearchBudgetExceeded";
    case Errc::LocalMinimum: return "LocalMinimum";
    case Errc::UnknownMetric: return "UnknownMetric";
    case Errc::InvalidRoute: return "InvalidRoute";
    case Errc::FileNotFound: return "FileNotFound";
    case Errc::SchemaError: return "SchemaError";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, Errc code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace meshmetrics
