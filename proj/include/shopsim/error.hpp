#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shopsim {

// Every failure the library reports carries one of these codes. The names are
// stable: they appear verbatim in NACK frames, CommandRejected log entries and
// CLI diagnostics.
enum class Errc {
  IllegalAction,
  IllegalTransition,
  NoPower,
  UnknownDevice,
  InvalidId,
  InvalidManifest,
  InvalidParams,
  InvalidPolicy,
  NonFiniteTemperature,
  InvalidScenario,
  InjectionAfterEnd,
  ParseError,
  LogCorrupt,
  SchemaMismatch,
  UsageError,
  FileNotFound,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::IllegalAction: return "IllegalAction";
    case Errc::IllegalTransition: return "IllegalTransition";
    case Errc::NoPower: return "NoPower";
    case Errc::UnknownDevice: return "UnknownDevice";
    case Errc::InvalidId: return "InvalidId";
    case Errc::InvalidManifest: return "InvalidManifest";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::InvalidPolicy: return "InvalidPolicy";
    case Errc::NonFiniteTemperature: return "NonFiniteTemperature";
    case Errc::InvalidScenario: return "InvalidScenario";
    case Errc::InjectionAfterEnd: return "InjectionAfterEnd";
    case Errc::ParseError: return "ParseError";
    case Errc::LogCorrupt: return "LogCorrupt";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::UsageError: return "UsageError";
    case Errc::FileNotFound: return "FileNotFound";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace shopsim
