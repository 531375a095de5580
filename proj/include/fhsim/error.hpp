#pragma once

#include <stdexcept>
#include <string>

namespace fhsim {

enum class Errc {
  MissingLink,
  DeviceOff,
  TransitionInProgress,
  TimeInPast,
  UnknownNode,
  UnknownDevice,
  UnknownFlow,
  NoPathAvailable,
  EmptySamples,
  NoTapData,
  MissingArtifact,
  BadScenario,
  BadTopology,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MissingLink: return "MissingLink";
    case Errc::DeviceOff: return "DeviceOff";
    case Errc::TransitionInProgress: return "TransitionInProgress";
    case Errc::TimeInPast: return "TimeInPast";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::UnknownDevice: return "UnknownDevice";
    case Errc::UnknownFlow: return "UnknownFlow";
    case Errc::NoPathAvailable: return "NoPathAvailable";
    case Errc::EmptySamples: return "EmptySamples";
    case Errc::NoTapData: return "NoTapData";
    case Errc::MissingArtifact: return "MissingArtifact";
    case Errc::BadScenario: return "BadScenario";
    case Errc::BadTopology: return "BadTopology";
  }
  return "?";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace fhsim
