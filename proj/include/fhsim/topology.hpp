#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fhsim/error.hpp"
#include "fhsim/time.hpp"

namespace fhsim {

struct NodeId {
  std::uint32_t v = 0xffffffff;

  bool valid() const { return v != 0xffffffff; }
  friend bool operator==(NodeId a, NodeId b) { return a.v == b.v; }
  friend bool operator!=(NodeId a, NodeId b) { return a.v != b.v; }
  friend bool operator<(NodeId a, NodeId b) { return a.v < b.v; }
};

struct LinkId {
  std::uint32_t v = 0xffffffff;

  bool valid() const { return v != 0xffffffff; }
  friend bool operator==(LinkId a, LinkId b) { return a.v == b.v; }
  friend bool operator!=(LinkId a, LinkId b) { return a.v != b.v; }
  friend bool operator<(LinkId a, LinkId b) { return a.v < b.v; }
};

enum class NodeKind {
  UeHost,
  AccessSwitch,
  Onu,
  OltLineCard,
  TunnelEndpoint,
  AggregationL2Switch,
  AggregationSwitch,
  NfServer,
  LitController,
  SdnController,
};

inline const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::UeHost: return "ue_host";
    case NodeKind::AccessSwitch: return "access_switch";
    case NodeKind::Onu: return "onu";
    case NodeKind::OltLineCard: return "olt_line_card";
    case NodeKind::TunnelEndpoint: return "tunnel_endpoint";
    case NodeKind::AggregationL2Switch: return "aggregation_l2_switch";
    case NodeKind::AggregationSwitch: return "aggregation_switch";
    case NodeKind::NfServer: return "nf_server";
    case NodeKind::LitController: return "lit_controller";
    case NodeKind::SdnController: return "sdn_controller";
  }
  return "?";
}

inline std::optional<NodeKind> node_kind_from_name(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(NodeKind::SdnController); ++i) {
    auto k = static_cast<NodeKind>(i);
    if (s == node_kind_name(k)) return k;
  }
  return std::nullopt;
}

inline bool is_switch_kind(NodeKind k) {
  return k == NodeKind::AccessSwitch || k == NodeKind::AggregationL2Switch ||
         k == NodeKind::AggregationSwitch;
}

inline bool is_host_kind(NodeKind k) {
  return k == NodeKind::UeHost || k == NodeKind::NfServer || k == NodeKind::TunnelEndpoint;
}

inline bool is_sleepable_kind(NodeKind k) {
  return k == NodeKind::Onu || k == NodeKind::OltLineCard;
}

struct Node {
  NodeId id;
  NodeKind kind = NodeKind::UeHost;
  std::string label;
};

struct Link {
  LinkId id;
  NodeId a;
  NodeId b;
  double capacity_bps = 0.0;
  SimTime propagation_delay = 0;       // ns
  std::uint64_t buffer_limit = 262142; // bytes per egress direction

  NodeId other(NodeId n) const { return n == a ? b : a; }
  bool joins(NodeId x, NodeId y) const { return (a == x && b == y) || (a == y && b == x); }
};

enum class VlanStatus { Active, Superseded };

using Vlan = std::uint16_t;

// An ordered node sequence bound to a VLAN tag, access side first, NF server
// last. This is the unit the control plane reconfigures.
struct VlanPath {
  Vlan vlan_id = 0;
  std::vector<NodeId> hops;
  VlanStatus status = VlanStatus::Active;

  friend bool operator==(const VlanPath& x, const VlanPath& y) {
    return x.vlan_id == y.vlan_id && x.hops == y.hops && x.status == y.status;
  }
};

struct ControlChannels {
  bool olt_to_lit_in_band = true;    // OLT agent -> LitController rides the data plane
  bool lit_to_sdn_in_band = false;   // LitController -> SdnController is a dedicated link
};

struct Violation {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

class Topology {
 public:
  NodeId add_node(NodeKind kind, const std::string& label) {
    NodeId id{static_cast<std::uint32_t>(nodes_.size())};
    nodes_.push_back(Node{id, kind, label});
    adjacency_.emplace_back();
    return id;
  }

  LinkId add_link(NodeId a, NodeId b, double capacity_bps, SimTime propagation_delay,
                  std::uint64_t buffer_limit = 262142) {
    LinkId id{static_cast<std::uint32_t>(links_.size())};
    links_.push_back(Link{id, a, b, capacity_bps, propagation_delay, buffer_limit});
    adjacency_[a.v].push_back(id);
    adjacency_[b.v].push_back(id);
    return id;
  }

  void add_vlan(VlanPath p) { vlans_.push_back(std::move(p)); }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<VlanPath>& vlans() const { return vlans_; }
  std::vector<VlanPath>& vlans() { return vlans_; }
  const ControlChannels& control_channels() const { return control_; }
  ControlChannels& control_channels() { return control_; }

  const Node& node(NodeId id) const { return nodes_.at(id.v); }
  const Link& link(LinkId id) const { return links_.at(id.v); }
  const std::vector<LinkId>& links_at(NodeId id) const { return adjacency_.at(id.v); }

  std::optional<NodeId> find_node(const std::string& label) const {
    for (const auto& n : nodes_)
      if (n.label == label) return n.id;
    return std::nullopt;
  }

  // Throwing variant for call sites that already validated the label.
  NodeId node_by_label(const std::string& label) const {
    auto id = find_node(label);
    if (!id) raise(Errc::UnknownNode, "no node labelled '" + label + "'");
    return *id;
  }

  std::optional<LinkId> find_link(NodeId a, NodeId b) const {
    for (LinkId l : adjacency_.at(a.v))
      if (links_[l.v].joins(a, b)) return l;
    return std::nullopt;
  }

  // Neighbors ordered by label so that graph traversals are deterministic.
  std::vector<NodeId> neighbors_sorted(NodeId n) const {
    std::vector<NodeId> out;
    for (LinkId l : adjacency_.at(n.v)) out.push_back(links_[l.v].other(n));
    std::sort(out.begin(), out.end(),
              [&](NodeId x, NodeId y) { return node(x).label < node(y).label; });
    return out;
  }

  std::size_t count_kind(NodeKind k) const {
    std::size_t c = 0;
    for (const auto& n : nodes_)
      if (n.kind == k) ++c;
    return c;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<std::vector<LinkId>> adjacency_;
  std::vector<VlanPath> vlans_;
  ControlChannels control_;
};

// Links joining consecutive hops of `path`, in hop order. |hops|-1 entries.
inline std::vector<LinkId> path_links(const Topology& topo, const VlanPath& path) {
  std::vector<LinkId> out;
  if (path.hops.size() < 2) return out;
  out.reserve(path.hops.size() - 1);
  for (std::size_t i = 0; i + 1 < path.hops.size(); ++i) {
    auto l = topo.find_link(path.hops[i], path.hops[i + 1]);
    if (!l) {
      raise(Errc::MissingLink, "no link joins hop " + std::to_string(i) + " (" +
                                   topo.node(path.hops[i]).label + " -> " +
                                   topo.node(path.hops[i + 1]).label + ")");
    }
    out.push_back(*l);
  }
  return out;
}

// Structural validation. Never throws: every violated invariant becomes one
// report entry.
inline ValidationReport validate(const Topology& topo) {
  ValidationReport rep;
  auto add = [&](const std::string& code, const std::string& msg) {
    rep.violations.push_back({code, msg});
  };

  std::set<std::string> labels;
  for (const auto& n : topo.nodes()) {
    if (!labels.insert(n.label).second) add("duplicate_label", "node label '" + n.label + "' reused");
  }

  if (topo.count_kind(NodeKind::LitController) != 1)
    add("controller_count", "expected exactly one lit_controller, found " +
                                std::to_string(topo.count_kind(NodeKind::LitController)));
  if (topo.count_kind(NodeKind::SdnController) != 1)
    add("controller_count", "expected exactly one sdn_controller, found " +
                                std::to_string(topo.count_kind(NodeKind::SdnController)));

  for (const auto& l : topo.links()) {
    if (l.a == l.b) add("link_endpoints", "link " + std::to_string(l.id.v) + " joins a node to itself");
    if (!(l.capacity_bps > 0)) add("link_capacity", "link " + std::to_string(l.id.v) + " capacity must be > 0");
    if (l.propagation_delay < 0) add("link_delay", "link " + std::to_string(l.id.v) + " negative propagation delay");
    if (l.buffer_limit == 0) add("link_buffer", "link " + std::to_string(l.id.v) + " buffer limit must be > 0");
  }

  // Every ONU hangs off exactly one OLT line card.
  for (const auto& n : topo.nodes()) {
    if (n.kind != NodeKind::Onu) continue;
    std::size_t lcs = 0;
    for (LinkId l : topo.links_at(n.id))
      if (topo.node(topo.link(l).other(n.id)).kind == NodeKind::OltLineCard) ++lcs;
    if (lcs != 1)
      add("onu_line_card", "onu '" + n.label + "' linked to " + std::to_string(lcs) +
                               " line cards, expected 1");
  }

  for (const auto& p : topo.vlans()) {
    const std::string tag = "vlan " + std::to_string(p.vlan_id);
    if (p.hops.size() < 2) {
      add("vlan_hops", tag + ": needs at least access node and nf server");
      continue;
    }
    if (topo.node(p.hops.front()).kind != NodeKind::Onu)
      add("vlan_access", tag + ": first hop '" + topo.node(p.hops.front()).label +
                             "' is not an access (onu) node");
    if (topo.node(p.hops.back()).kind != NodeKind::NfServer)
      add("vlan_terminal", tag + ": last hop '" + topo.node(p.hops.back()).label +
                               "' is not an nf_server");
    for (std::size_t i = 0; i + 1 < p.hops.size(); ++i) {
      if (!topo.find_link(p.hops[i], p.hops[i + 1]))
        add("vlan_missing_link", tag + ": hops " + topo.node(p.hops[i]).label + " -> " +
                                     topo.node(p.hops[i + 1]).label + " not joined by a link");
    }
  }

  return rep;
}

struct ReferenceDefaults {
  double pon_capacity_bps = 1e9;        // one wavelength pair per ONU, 1 Gb/s
  double tunnel_capacity_bps = 1e8;     // GRE tunnel modeled as a 100 Mb/s link
  double access_capacity_bps = 1e9;
  double aggregation_capacity_bps = 1e9;
  SimTime access_delay = 1 * kMicrosecond;
  SimTime pon_delay = 5 * kMicrosecond;
  SimTime tunnel_delay = 0;             // GRE delay excluded from measured metrics
  SimTime host_delay = 1 * kMicrosecond;
  // Fig. 3 gives no link lengths. The s1 side defaults to a much longer run
  // than the s2 side: the s1-s3 route acts as the geographically longer
  // protection path, so traffic detoured onto it pays a visible delay cost.
  SimTime agg_s1_delay = 1200 * kMicrosecond;
  SimTime agg_s2_delay = 50 * kMicrosecond;
  SimTime agg_server_delay = 50 * kMicrosecond;
  SimTime controller_delay = 10 * kMicrosecond;
  SimTime oob_delay = 1 * kMillisecond;  // LitController <-> SdnController
  std::uint64_t buffer_limit = 262142;   // bytes, from the experiment's UDP buffer
};

// The fixed federated-testbed topology: two UE hosts behind an access switch,
// two ONU/line-card pairs, per-LC tunnels into the aggregation L2SW, three
// aggregation switches, two NF servers, and the two controllers.
//
// VLAN1 (tag 1) is provisioned ONU1-LC1-L2SW-s1-s3-NF1 and VLAN2a (tag 2)
// ONU2-LC2-L2SW-s2-s3-NF2, both active.
inline Topology build_reference_topology(const ReferenceDefaults& d = {}) {
  Topology t;
  NodeId ue1 = t.add_node(NodeKind::UeHost, "UE1");
  NodeId ue2 = t.add_node(NodeKind::UeHost, "UE2");
  NodeId acc = t.add_node(NodeKind::AccessSwitch, "ACC");
  NodeId onu1 = t.add_node(NodeKind::Onu, "ONU1");
  NodeId onu2 = t.add_node(NodeKind::Onu, "ONU2");
  NodeId lc1 = t.add_node(NodeKind::OltLineCard, "LC1");
  NodeId lc2 = t.add_node(NodeKind::OltLineCard, "LC2");
  NodeId xen1 = t.add_node(NodeKind::TunnelEndpoint, "xenvm1");
  NodeId xen2 = t.add_node(NodeKind::TunnelEndpoint, "xenvm2");
  NodeId l2sw = t.add_node(NodeKind::AggregationL2Switch, "L2SW");
  NodeId s1 = t.add_node(NodeKind::AggregationSwitch, "s1");
  NodeId s2 = t.add_node(NodeKind::AggregationSwitch, "s2");
  NodeId s3 = t.add_node(NodeKind::AggregationSwitch, "s3");
  NodeId nf1 = t.add_node(NodeKind::NfServer, "NF1");
  NodeId nf2 = t.add_node(NodeKind::NfServer, "NF2");
  NodeId lit = t.add_node(NodeKind::LitController, "LitCtrl");
  NodeId sdn = t.add_node(NodeKind::SdnController, "SdnCtrl");

  const auto buf = d.buffer_limit;
  t.add_link(ue1, acc, d.access_capacity_bps, d.access_delay, buf);
  t.add_link(ue2, acc, d.access_capacity_bps, d.access_delay, buf);
  t.add_link(acc, onu1, d.access_capacity_bps, d.access_delay, buf);
  t.add_link(acc, onu2, d.access_capacity_bps, d.access_delay, buf);
  t.add_link(onu1, lc1, d.pon_capacity_bps, d.pon_delay, buf);
  t.add_link(onu2, lc2, d.pon_capacity_bps, d.pon_delay, buf);
  t.add_link(lc1, l2sw, d.tunnel_capacity_bps, d.tunnel_delay, buf);
  t.add_link(lc2, l2sw, d.tunnel_capacity_bps, d.tunnel_delay, buf);
  t.add_link(xen1, l2sw, d.access_capacity_bps, d.host_delay, buf);
  t.add_link(xen2, l2sw, d.access_capacity_bps, d.host_delay, buf);
  t.add_link(l2sw, s1, d.aggregation_capacity_bps, d.agg_s1_delay, buf);
  t.add_link(l2sw, s2, d.aggregation_capacity_bps, d.agg_s2_delay, buf);
  t.add_link(s1, s2, d.aggregation_capacity_bps, d.agg_s2_delay, buf);
  t.add_link(s1, s3, d.aggregation_capacity_bps, d.agg_s1_delay, buf);
  t.add_link(s2, s3, d.aggregation_capacity_bps, d.agg_s2_delay, buf);
  t.add_link(s3, nf1, d.aggregation_capacity_bps, d.agg_server_delay, buf);
  t.add_link(s3, nf2, d.aggregation_capacity_bps, d.agg_server_delay, buf);
  t.add_link(l2sw, lit, d.aggregation_capacity_bps, d.controller_delay, buf);
  t.add_link(lit, sdn, d.aggregation_capacity_bps, d.oob_delay, buf);

  t.add_vlan(VlanPath{1, {onu1, lc1, l2sw, s1, s3, nf1}, VlanStatus::Active});
  t.add_vlan(VlanPath{2, {onu2, lc2, l2sw, s2, s3, nf2}, VlanStatus::Active});

  t.control_channels() = ControlChannels{true, false};
  return t;
}

}  // namespace fhsim
