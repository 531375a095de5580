#pragma once

#include <cstdint>
#include <optional>
#include <variant>

#include "fhsim/time.hpp"
#include "fhsim/topology.hpp"

namespace fhsim {

enum class PacketKind : std::uint8_t { ProbeRequest, ProbeReply, Cbr, Control };

inline const char* packet_kind_name(PacketKind k) {
  switch (k) {
    case PacketKind::ProbeRequest: return "probe_request";
    case PacketKind::ProbeReply: return "probe_reply";
    case PacketKind::Cbr: return "cbr";
    case PacketKind::Control: return "control";
  }
  return "?";
}

using FlowId = std::uint32_t;
constexpr FlowId kControlFlow = 0xffffffff;

struct Packet {
  std::uint64_t seq = 0;       // monotone per flow
  FlowId flow = kControlFlow;
  std::uint32_t size = 0;      // bytes on the wire
  SimTime created_at = 0;
  Vlan vlan = 0;
  PacketKind kind = PacketKind::Cbr;
  std::uint32_t control_idx = 0xffffffff;  // index into the run's control messages
};

// Control-plane message vocabulary. Defined next to PacketKind because
// in-band messages travel as Control packets and show up in capture records.
enum class ControlKind : std::uint8_t { SleepCommand, WakeCommand, OltNotify, FlowMod, Trigger, Ack };

inline const char* control_kind_name(ControlKind k) {
  switch (k) {
    case ControlKind::SleepCommand: return "sleep_command";
    case ControlKind::WakeCommand: return "wake_command";
    case ControlKind::OltNotify: return "olt_notify";
    case ControlKind::FlowMod: return "flow_mod";
    case ControlKind::Trigger: return "trigger";
    case ControlKind::Ack: return "ack";
  }
  return "?";
}

enum class PowerDirection : std::uint8_t { Off, On };

inline const char* power_direction_name(PowerDirection d) {
  return d == PowerDirection::Off ? "off" : "on";
}

enum class DropReason : std::uint8_t { NoMatch, DeviceOff, BufferFull, Filtered };

inline const char* drop_reason_name(DropReason r) {
  switch (r) {
    case DropReason::NoMatch: return "no_match";
    case DropReason::DeviceOff: return "device_off";
    case DropReason::BufferFull: return "buffer_full";
    case DropReason::Filtered: return "filtered";
  }
  return "?";
}

// Match-action entry. Ports are identified by the attached link.
struct FlowMatch {
  LinkId ingress;
  Vlan vlan = 0;
  int priority = 0;

  friend bool operator==(const FlowMatch& a, const FlowMatch& b) {
    return a.ingress == b.ingress && a.vlan == b.vlan && a.priority == b.priority;
  }
  friend bool operator<(const FlowMatch& a, const FlowMatch& b) {
    if (a.ingress != b.ingress) return a.ingress < b.ingress;
    if (a.vlan != b.vlan) return a.vlan < b.vlan;
    return a.priority > b.priority;  // higher priority first
  }
};

struct OutputAction {
  LinkId egress;
  friend bool operator==(OutputAction a, OutputAction b) { return a.egress == b.egress; }
};
struct DropAction {
  friend bool operator==(DropAction, DropAction) { return true; }
};
using FlowAction = std::variant<OutputAction, DropAction>;

struct FlowEntry {
  FlowMatch match;
  FlowAction action;

  friend bool operator==(const FlowEntry& a, const FlowEntry& b) {
    return a.match == b.match && a.action == b.action;
  }
};

enum class PowerPhase : std::uint8_t { On, Off, TurningOn, TurningOff };

inline const char* power_phase_name(PowerPhase p) {
  switch (p) {
    case PowerPhase::On: return "on";
    case PowerPhase::Off: return "off";
    case PowerPhase::TurningOn: return "turning_on";
    case PowerPhase::TurningOff: return "turning_off";
  }
  return "?";
}

struct PowerState {
  PowerPhase phase = PowerPhase::On;
  SimTime transition_until = 0;  // meaningful only while turning

  bool on() const { return phase == PowerPhase::On; }
  bool transitioning() const {
    return phase == PowerPhase::TurningOn || phase == PowerPhase::TurningOff;
  }
};

}  // namespace fhsim
