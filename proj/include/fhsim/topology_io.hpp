#pragma once

#include <string>

#include <json.hpp>

#include "fhsim/error.hpp"
#include "fhsim/topology.hpp"

namespace fhsim {

using json = nlohmann::json;

inline json topology_to_json(const Topology& topo) {
  json nodes = json::array();
  for (const auto& n : topo.nodes())
    nodes.push_back({{"label", n.label}, {"kind", node_kind_name(n.kind)}});

  json links = json::array();
  for (const auto& l : topo.links()) {
    links.push_back({{"a", topo.node(l.a).label},
                     {"b", topo.node(l.b).label},
                     {"capacity_bps", l.capacity_bps},
                     {"propagation_delay_s", to_seconds(l.propagation_delay)},
                     {"buffer_limit_bytes", l.buffer_limit}});
  }

  json vlans = json::array();
  for (const auto& p : topo.vlans()) {
    json hops = json::array();
    for (NodeId h : p.hops) hops.push_back(topo.node(h).label);
    vlans.push_back({{"vlan_id", p.vlan_id},
                     {"hops", hops},
                     {"status", p.status == VlanStatus::Active ? "active" : "superseded"}});
  }

  return json{{"nodes", nodes},
              {"links", links},
              {"vlans", vlans},
              {"control_channels",
               {{"olt_to_lit", topo.control_channels().olt_to_lit_in_band ? "in_band" : "out_of_band"},
                {"lit_to_sdn", topo.control_channels().lit_to_sdn_in_band ? "in_band" : "out_of_band"}}}};
}

inline Topology topology_from_json(const json& j) {
  if (!j.is_object()) raise(Errc::BadTopology, "topology document must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "nodes" && key != "links" && key != "vlans" && key != "control_channels")
      raise(Errc::BadTopology, "unknown topology field '" + key + "'");
  }

  Topology t;
  for (const auto& n : j.at("nodes")) {
    const std::string label = n.at("label").get<std::string>();
    auto kind = node_kind_from_name(n.at("kind").get<std::string>());
    if (!kind) raise(Errc::BadTopology, "node '" + label + "': unknown kind");
    t.add_node(*kind, label);
  }

  for (const auto& l : j.at("links")) {
    const std::string a = l.at("a").get<std::string>();
    const std::string b = l.at("b").get<std::string>();
    auto na = t.find_node(a);
    auto nb = t.find_node(b);
    if (!na || !nb) raise(Errc::BadTopology, "link references unknown node '" + (na ? b : a) + "'");
    t.add_link(*na, *nb, l.at("capacity_bps").get<double>(),
               from_seconds(l.at("propagation_delay_s").get<double>()),
               l.at("buffer_limit_bytes").get<std::uint64_t>());
  }

  if (j.contains("vlans")) {
    for (const auto& v : j.at("vlans")) {
      VlanPath p;
      p.vlan_id = v.at("vlan_id").get<Vlan>();
      for (const auto& h : v.at("hops")) {
        auto id = t.find_node(h.get<std::string>());
        if (!id) raise(Errc::BadTopology, "vlan hop references unknown node '" + h.get<std::string>() + "'");
        p.hops.push_back(*id);
      }
      const std::string st = v.value("status", "active");
      p.status = st == "active" ? VlanStatus::Active : VlanStatus::Superseded;
      t.add_vlan(std::move(p));
    }
  }

  if (j.contains("control_channels")) {
    const auto& c = j.at("control_channels");
    t.control_channels().olt_to_lit_in_band = c.value("olt_to_lit", "in_band") == std::string("in_band");
    t.control_channels().lit_to_sdn_in_band = c.value("lit_to_sdn", "out_of_band") == std::string("in_band");
  }

  return t;
}

}  // namespace fhsim
