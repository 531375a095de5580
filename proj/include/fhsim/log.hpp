#pragma once

#include <cstdio>
#include <string>
#include <variant>
#include <vector>

#include "fhsim/packet.hpp"
#include "fhsim/time.hpp"
#include "fhsim/topology.hpp"

namespace fhsim {

// One record per simulation event of interest. A full run serializes to
// newline-delimited JSON, one object per record, in emission order; equal
// (seed, config) runs produce byte-identical streams.

struct RecMeta {
  std::string name;
  std::uint64_t seed;
};

struct RecPktCreate {
  SimTime t;
  FlowId flow;
  std::uint64_t seq;
  PacketKind kind;
  Vlan vlan;
  std::uint32_t size;
  std::uint32_t node;
};

struct RecPktEnqueue {
  SimTime t;
  FlowId flow;
  std::uint64_t seq;
  PacketKind kind;
  std::uint32_t node;
  std::uint32_t link;
  SimTime departure;
};

struct RecPktDeliver {
  SimTime t;
  FlowId flow;
  std::uint64_t seq;
  PacketKind kind;
  Vlan vlan;
  std::uint32_t node;
  SimTime created_at;
};

struct RecPktDrop {
  SimTime t;
  FlowId flow;
  std::uint64_t seq;
  PacketKind kind;
  Vlan vlan;
  std::uint32_t node;
  DropReason reason;
  SimTime created_at;
};

// Capture-tap observation: a packet transiting `node`, seen on its ingress
// side, the way tshark observed the L2SW.
struct RecTap {
  SimTime t;
  std::uint32_t node;
  FlowId flow;
  std::uint64_t seq;
  PacketKind kind;
  Vlan vlan;
  std::uint32_t ingress_link;
  ControlKind msg_kind;        // meaningful when kind == Control
  PowerDirection direction;    // meaningful when msg_kind == OltNotify
};

struct RecCtl {
  SimTime t;
  bool deliver;  // false: sent
  ControlKind msg_kind;
  std::uint32_t sender;
  std::uint32_t receiver;
  PowerDirection direction;
  Vlan vlan;
};

struct RecInstall {
  SimTime t;  // effective time
  std::uint32_t node;
  std::uint32_t ingress;
  Vlan vlan;
  bool remove;
  bool drop_action;
  std::uint32_t egress;
};

struct RecPower {
  SimTime t;
  std::uint32_t node;
  PowerPhase phase;
};

// Ground-truth bookkeeping for one reconfiguration episode.
struct RecEpisode {
  std::uint32_t idx;
  PowerDirection direction;
  SimTime t_cmd;
  SimTime t_notify_tap;
  SimTime t_last_install;
  SimTime t_acked;
  bool complete;
};

struct RecWarn {
  SimTime t;
  std::string text;
};

struct RecEnd {
  SimTime t;
  std::uint64_t created;
  std::uint64_t delivered;
  std::uint64_t dropped;
  std::uint64_t in_flight;
};

using LogRecord = std::variant<RecMeta, RecPktCreate, RecPktEnqueue, RecPktDeliver, RecPktDrop,
                               RecTap, RecCtl, RecInstall, RecPower, RecEpisode, RecWarn, RecEnd>;

using EventLog = std::vector<LogRecord>;

namespace detail {

inline void append_kv(std::string& out, const char* key, const std::string& value, bool quote) {
  out += ",\"";
  out += key;
  out += quote ? "\":\"" : "\":";
  out += value;
  if (quote) out += '"';
}

inline std::string u64s(std::uint64_t v) { return std::to_string(v); }

}  // namespace detail

inline std::string to_ndjson_line(const LogRecord& rec) {
  using detail::append_kv;
  using detail::u64s;
  std::string out;
  out.reserve(160);
  auto head = [&](const char* ev, SimTime t) {
    out += "{\"ev\":\"";
    out += ev;
    out += "\",\"t\":\"";
    out += format_seconds(t);
    out += '"';
  };
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, RecMeta>) {
          out += "{\"ev\":\"meta\",\"name\":\"" + r.name + "\",\"seed\":" + u64s(r.seed);
        } else if constexpr (std::is_same_v<T, RecPktCreate>) {
          head("create", r.t);
          append_kv(out, "flow", u64s(r.flow), false);
          append_kv(out, "seq", u64s(r.seq), false);
          append_kv(out, "kind", packet_kind_name(r.kind), true);
          append_kv(out, "vlan", u64s(r.vlan), false);
          append_kv(out, "size", u64s(r.size), false);
          append_kv(out, "node", u64s(r.node), false);
        } else if constexpr (std::is_same_v<T, RecPktEnqueue>) {
          head("enqueue", r.t);
          append_kv(out, "flow", u64s(r.flow), false);
          append_kv(out, "seq", u64s(r.seq), false);
          append_kv(out, "node", u64s(r.node), false);
          append_kv(out, "link", u64s(r.link), false);
          append_kv(out, "departure", format_seconds(r.departure), true);
        } else if constexpr (std::is_same_v<T, RecPktDeliver>) {
          head("deliver", r.t);
          append_kv(out, "flow", u64s(r.flow), false);
          append_kv(out, "seq", u64s(r.seq), false);
          append_kv(out, "kind", packet_kind_name(r.kind), true);
          append_kv(out, "vlan", u64s(r.vlan), false);
          append_kv(out, "node", u64s(r.node), false);
          append_kv(out, "created_at", format_seconds(r.created_at), true);
        } else if constexpr (std::is_same_v<T, RecPktDrop>) {
          head("drop", r.t);
          append_kv(out, "flow", u64s(r.flow), false);
          append_kv(out, "seq", u64s(r.seq), false);
          append_kv(out, "kind", packet_kind_name(r.kind), true);
          append_kv(out, "vlan", u64s(r.vlan), false);
          append_kv(out, "node", u64s(r.node), false);
          append_kv(out, "reason", drop_reason_name(r.reason), true);
          append_kv(out, "created_at", format_seconds(r.created_at), true);
        } else if constexpr (std::is_same_v<T, RecTap>) {
          head("tap", r.t);
          append_kv(out, "node", u64s(r.node), false);
          append_kv(out, "flow", u64s(r.flow), false);
          append_kv(out, "seq", u64s(r.seq), false);
          append_kv(out, "kind", packet_kind_name(r.kind), true);
          append_kv(out, "vlan", u64s(r.vlan), false);
          append_kv(out, "ingress", u64s(r.ingress_link), false);
          if (r.kind == PacketKind::Control) {
            append_kv(out, "msg", control_kind_name(r.msg_kind), true);
            append_kv(out, "dir", power_direction_name(r.direction), true);
          }
        } else if constexpr (std::is_same_v<T, RecCtl>) {
          head(r.deliver ? "ctl_deliver" : "ctl_send", r.t);
          append_kv(out, "msg", control_kind_name(r.msg_kind), true);
          append_kv(out, "sender", u64s(r.sender), false);
          append_kv(out, "receiver", u64s(r.receiver), false);
          append_kv(out, "dir", power_direction_name(r.direction), true);
          append_kv(out, "vlan", u64s(r.vlan), false);
        } else if constexpr (std::is_same_v<T, RecInstall>) {
          head("install", r.t);
          append_kv(out, "node", u64s(r.node), false);
          append_kv(out, "ingress", u64s(r.ingress), false);
          append_kv(out, "vlan", u64s(r.vlan), false);
          append_kv(out, "op", r.remove ? "remove" : "add", true);
          if (!r.remove)
            append_kv(out, "action", r.drop_action ? "drop" : "out:" + u64s(r.egress), true);
        } else if constexpr (std::is_same_v<T, RecPower>) {
          head("power", r.t);
          append_kv(out, "node", u64s(r.node), false);
          append_kv(out, "state", power_phase_name(r.phase), true);
        } else if constexpr (std::is_same_v<T, RecEpisode>) {
          head("episode", r.t_cmd);
          append_kv(out, "idx", u64s(r.idx), false);
          append_kv(out, "dir", power_direction_name(r.direction), true);
          append_kv(out, "notify_tap", format_seconds(r.t_notify_tap), true);
          append_kv(out, "last_install", format_seconds(r.t_last_install), true);
          append_kv(out, "acked", format_seconds(r.t_acked), true);
          append_kv(out, "complete", r.complete ? "true" : "false", false);
        } else if constexpr (std::is_same_v<T, RecWarn>) {
          head("warn", r.t);
          append_kv(out, "text", r.text, true);
        } else if constexpr (std::is_same_v<T, RecEnd>) {
          head("end", r.t);
          append_kv(out, "created", u64s(r.created), false);
          append_kv(out, "delivered", u64s(r.delivered), false);
          append_kv(out, "dropped", u64s(r.dropped), false);
          append_kv(out, "in_flight", u64s(r.in_flight), false);
        }
      },
      rec);
  out += "}\n";
  return out;
}

inline std::string to_ndjson(const EventLog& log) {
  std::string out;
  for (const auto& r : log) out += to_ndjson_line(r);
  return out;
}

// Packet events in CSV form, the stream offered for offline inspection.
inline std::string packet_csv_header() {
  return "time_s,event,flow,seq,kind,vlan,node,link,reason\n";
}

inline std::string to_packet_csv_row(const LogRecord& rec) {
  char buf[192];
  buf[0] = 0;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, RecPktCreate>) {
          std::snprintf(buf, sizeof(buf), "%s,create,%u,%llu,%s,%u,%u,,\n",
                        format_seconds(r.t).c_str(), r.flow, (unsigned long long)r.seq,
                        packet_kind_name(r.kind), r.vlan, r.node);
        } else if constexpr (std::is_same_v<T, RecPktEnqueue>) {
          std::snprintf(buf, sizeof(buf), "%s,enqueue,%u,%llu,,,%u,%u,\n",
                        format_seconds(r.t).c_str(), r.flow, (unsigned long long)r.seq, r.node,
                        r.link);
        } else if constexpr (std::is_same_v<T, RecPktDeliver>) {
          std::snprintf(buf, sizeof(buf), "%s,deliver,%u,%llu,%s,%u,%u,,\n",
                        format_seconds(r.t).c_str(), r.flow, (unsigned long long)r.seq,
                        packet_kind_name(r.kind), r.vlan, r.node);
        } else if constexpr (std::is_same_v<T, RecPktDrop>) {
          std::snprintf(buf, sizeof(buf), "%s,drop,%u,%llu,%s,%u,%u,,%s\n",
                        format_seconds(r.t).c_str(), r.flow, (unsigned long long)r.seq,
                        packet_kind_name(r.kind), r.vlan, r.node, drop_reason_name(r.reason));
        }
      },
      rec);
  return buf;
}

}  // namespace fhsim
