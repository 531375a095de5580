#pragma once

#include <functional>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "fhsim/dataplane.hpp"
#include "fhsim/packet.hpp"
#include "fhsim/topology.hpp"

namespace fhsim {

struct ControlMessage {
  ControlKind kind = ControlKind::OltNotify;
  NodeId sender;
  NodeId receiver;
  PowerDirection direction = PowerDirection::Off;
  Vlan vlan = 0;      // affected vlan, 0 when none
  NodeId dev_onu;     // payload: affected devices
  NodeId dev_lc;
  SimTime sent_at = 0;
  std::uint32_t episode = 0xffffffff;
};

struct ControllerState {
  std::set<Vlan> pending_reconfigs;
};

using PoweredFn = std::function<bool(NodeId)>;

namespace detail {

inline bool reroute_transit_ok(NodeKind k) {
  return k == NodeKind::Onu || k == NodeKind::OltLineCard ||
         k == NodeKind::AggregationL2Switch || k == NodeKind::AggregationSwitch;
}

}  // namespace detail

// Minimum-hop path from the surviving access ONU to the VLAN's original NF
// server, avoiding `off` and powered-off nodes. Ties break toward the
// lexicographically smallest node-label sequence. If the VLAN's current
// active path is untouched by `off`, it is returned unchanged.
inline VlanPath compute_reroute(const Topology& topo, std::span<const VlanPath> live, Vlan vlan,
                                const std::set<NodeId>& off, const PoweredFn& powered_on) {
  const VlanPath* current = nullptr;
  for (const auto& p : live) {
    if (p.vlan_id == vlan && p.status == VlanStatus::Active) {
      current = &p;
      break;
    }
  }
  if (!current) raise(Errc::NoPathAvailable, "vlan " + std::to_string(vlan) + " has no active path");

  bool intact = true;
  for (NodeId h : current->hops) {
    if (off.count(h) || !powered_on(h)) {
      intact = false;
      break;
    }
  }
  if (intact) return *current;

  const NodeId dst = current->hops.back();

  // Surviving access device: lexicographically smallest live ONU.
  NodeId start;
  std::string best_label;
  for (const auto& n : topo.nodes()) {
    if (n.kind != NodeKind::Onu || off.count(n.id) || !powered_on(n.id)) continue;
    if (!start.valid() || n.label < best_label) {
      start = n.id;
      best_label = n.label;
    }
  }
  if (!start.valid())
    raise(Errc::NoPathAvailable, "vlan " + std::to_string(vlan) + ": no surviving access onu");

  auto allowed = [&](NodeId n) {
    if (off.count(n) || !powered_on(n)) return false;
    if (n == dst || n == start) return true;
    return detail::reroute_transit_ok(topo.node(n).kind);
  };

  // BFS from the server side gives hop distances; a greedy walk from the
  // access side over distance-decreasing neighbors picks the smallest-label
  // path among the minimum-hop ones.
  constexpr int kUnreached = -1;
  std::vector<int> dist(topo.nodes().size(), kUnreached);
  std::vector<NodeId> frontier{dst};
  dist[dst.v] = 0;
  while (!frontier.empty()) {
    std::vector<NodeId> next;
    for (NodeId n : frontier) {
      for (NodeId m : topo.neighbors_sorted(n)) {
        if (dist[m.v] != kUnreached || !allowed(m)) continue;
        dist[m.v] = dist[n.v] + 1;
        next.push_back(m);
      }
    }
    frontier = std::move(next);
  }
  if (dist[start.v] == kUnreached)
    raise(Errc::NoPathAvailable, "vlan " + std::to_string(vlan) + ": '" +
                                     topo.node(start).label + "' cannot reach '" +
                                     topo.node(dst).label + "'");

  VlanPath out;
  out.vlan_id = vlan;
  out.status = VlanStatus::Active;
  NodeId cur = start;
  out.hops.push_back(cur);
  while (cur != dst) {
    NodeId step;
    for (NodeId m : topo.neighbors_sorted(cur)) {
      if (allowed(m) && dist[m.v] == dist[cur.v] - 1) {
        step = m;
        break;
      }
    }
    cur = step;
    out.hops.push_back(cur);
  }
  return out;
}

inline VlanPath compute_reroute(const Topology& topo, Vlan vlan, const std::set<NodeId>& off) {
  return compute_reroute(topo, std::span<const VlanPath>(topo.vlans()), vlan, off,
                         [](NodeId) { return true; });
}

// Desired match-action entries along a path, both directions, listed from the
// NF-server side toward the access side. When the aggregation L2SW carries a
// monitor host for the vlan, the server-to-access direction at that switch is
// steered to the monitor port instead, and the monitor port gets an entry
// into the path.
inline std::vector<std::pair<NodeId, FlowEntry>> switch_entries_for_path(
    const Topology& topo, const VlanPath& path, LinkId monitor = LinkId{}) {
  std::vector<std::pair<NodeId, FlowEntry>> out;
  if (path.hops.size() < 3) return out;
  for (std::size_t i = path.hops.size() - 2; i >= 1; --i) {
    const NodeId h = path.hops[i];
    const NodeKind kind = topo.node(h).kind;
    if (!is_switch_kind(kind)) continue;
    const LinkId up = *topo.find_link(path.hops[i - 1], h);    // access side
    const LinkId down = *topo.find_link(h, path.hops[i + 1]);  // server side
    out.push_back({h, FlowEntry{{up, path.vlan_id, 0}, OutputAction{down}}});
    if (kind == NodeKind::AggregationL2Switch && monitor.valid()) {
      out.push_back({h, FlowEntry{{monitor, path.vlan_id, 0}, OutputAction{down}}});
      out.push_back({h, FlowEntry{{down, path.vlan_id, 0}, OutputAction{monitor}}});
    } else {
      out.push_back({h, FlowEntry{{down, path.vlan_id, 0}, OutputAction{up}}});
    }
  }
  return out;
}

// A batch of table changes that still have install latency ahead of them.
struct PlannedInstall {
  NodeId node;
  FlowEntry entry;
};

// Step (2): the aggregation-node L2SW remap, derived from the rerouted path.
// Only entries that differ from the current table are emitted.
inline std::vector<PlannedInstall> plan_l2sw_remap(const Topology& topo, const Dataplane& dp,
                                                   const VlanPath& new_path, LinkId monitor) {
  std::vector<PlannedInstall> out;
  for (const auto& [node, entry] : switch_entries_for_path(topo, new_path, monitor)) {
    if (topo.node(node).kind != NodeKind::AggregationL2Switch) continue;
    auto cur = dp.table(node).exact(entry.match);
    if (cur && *cur == entry.action) continue;
    out.push_back({node, entry});
  }
  return out;
}

// Step (4): the aggregation-network switches, server side first.
inline std::vector<PlannedInstall> plan_aggregation_reroute(const Topology& topo,
                                                            const Dataplane& dp,
                                                            const VlanPath& new_path) {
  std::vector<PlannedInstall> out;
  for (const auto& [node, entry] : switch_entries_for_path(topo, new_path)) {
    if (topo.node(node).kind != NodeKind::AggregationSwitch) continue;
    auto cur = dp.table(node).exact(entry.match);
    if (cur && *cur == entry.action) continue;
    out.push_back({node, entry});
  }
  return out;
}

// The vlan whose path (of the wanted status) contains both affected devices.
inline std::optional<std::size_t> find_affected_path(std::span<const VlanPath> live, NodeId onu,
                                                     NodeId lc, VlanStatus status) {
  for (std::size_t i = 0; i < live.size(); ++i) {
    if (live[i].status != status) continue;
    bool has_onu = false, has_lc = false;
    for (NodeId h : live[i].hops) {
      has_onu |= h == onu;
      has_lc |= h == lc;
    }
    if (has_onu || has_lc) {
      if (!(has_onu && has_lc)) continue;
      return i;
    }
  }
  return std::nullopt;
}

}  // namespace fhsim
