#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fhsim/error.hpp"
#include "fhsim/packet.hpp"
#include "fhsim/time.hpp"
#include "fhsim/topology.hpp"

namespace fhsim {

// Ping-like workload: fixed-interval requests, immediate replies on the
// reverse path.
struct ProbeFlowSpec {
  std::string src;
  std::string dst;
  double interval_s = 0.001;
  Vlan vlan = 0;
};

// Constant-bit-rate UDP workload. offered_load is payload-level; header
// overhead is added on the wire.
struct CbrFlowSpec {
  std::string src;
  std::string dst;
  std::uint32_t payload_bytes = 1400;
  double offered_load_bps = 0.0;
  Vlan vlan = 0;
};

inline SimTime cbr_period(std::uint32_t payload_bytes, double offered_load_bps) {
  return static_cast<SimTime>(
      std::llround(static_cast<double>(payload_bytes) * 8.0 * 1e9 / offered_load_bps));
}

struct ResolvedFlow {
  FlowId id = 0;
  PacketKind kind = PacketKind::Cbr;
  std::string name;
  NodeId src;
  NodeId dst;
  Vlan vlan = 0;
  SimTime period = 0;
  std::uint32_t wire_size = 0;  // bytes per emitted packet
};

inline ResolvedFlow resolve_probe_flow(const Topology& topo, const ProbeFlowSpec& s,
                                       std::uint32_t probe_size_bytes) {
  if (s.interval_s <= 0) raise(Errc::BadScenario, "probe interval must be > 0");
  auto src = topo.find_node(s.src);
  if (!src) raise(Errc::UnknownNode, "probe src '" + s.src + "'");
  auto dst = topo.find_node(s.dst);
  if (!dst) raise(Errc::UnknownNode, "probe dst '" + s.dst + "'");
  if (*src == *dst) raise(Errc::UnknownNode, "probe src and dst are both '" + s.src + "'");
  if (!is_host_kind(topo.node(*src).kind) || !is_host_kind(topo.node(*dst).kind))
    raise(Errc::BadScenario, "probe endpoints must be hosts");
  ResolvedFlow f;
  f.kind = PacketKind::ProbeRequest;
  f.name = "probe:" + s.src + ">" + s.dst;
  f.src = *src;
  f.dst = *dst;
  f.vlan = s.vlan;
  f.period = from_seconds(s.interval_s);
  f.wire_size = probe_size_bytes;
  return f;
}

inline ResolvedFlow resolve_cbr_flow(const Topology& topo, const CbrFlowSpec& s,
                                     std::uint32_t overhead_bytes) {
  if (s.payload_bytes == 0) raise(Errc::BadScenario, "cbr payload_bytes must be > 0");
  if (!(s.offered_load_bps > 0)) raise(Errc::BadScenario, "cbr offered_load_bps must be > 0");
  auto src = topo.find_node(s.src);
  if (!src) raise(Errc::UnknownNode, "cbr src '" + s.src + "'");
  auto dst = topo.find_node(s.dst);
  if (!dst) raise(Errc::UnknownNode, "cbr dst '" + s.dst + "'");
  if (*src == *dst) raise(Errc::UnknownNode, "cbr src and dst are both '" + s.src + "'");
  ResolvedFlow f;
  f.kind = PacketKind::Cbr;
  f.name = "cbr:" + s.src + ">" + s.dst;
  f.src = *src;
  f.dst = *dst;
  f.vlan = s.vlan;
  f.period = cbr_period(s.payload_bytes, s.offered_load_bps);
  f.wire_size = s.payload_bytes + overhead_bytes;
  return f;
}

}  // namespace fhsim
