#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fhsim/energy.hpp"
#include "fhsim/error.hpp"
#include "fhsim/random.hpp"
#include "fhsim/topology.hpp"
#include "fhsim/topology_io.hpp"
#include "fhsim/traffic.hpp"

namespace fhsim {

struct ScheduleNone {};
struct ScheduleDayNight {
  std::uint32_t cycles = 60;
  double period_s = 60.0;  // one sleep at the start, one wake at the half period
};
struct SchedulePeriodic {
  double t_rec_s = 30.0;  // off for t_rec, on for t_rec, starting off at t=0; 0 = never off
};
using SleepSchedule = std::variant<ScheduleNone, ScheduleDayNight, SchedulePeriodic>;

struct LatencyParams {
  RandomVar d_lit_ms = RandomVar::uniform(4.0, 35.0);
  RandomVar d_sdn_ms = RandomVar::uniform(4.0, 35.0);
  double d_link_ms = 1.0;
  double install_us = 50.0;
  double cleanup_guard_ms = 100.0;
  double transition_ms = 1.0;
};

struct Scenario {
  int schema_version = 1;
  std::string name = "unnamed";
  std::string topology_ref = "reference";  // or "inline"
  std::optional<nlohmann::json> topology_inline;
  std::vector<ProbeFlowSpec> probes;
  std::vector<CbrFlowSpec> cbr;
  SleepSchedule schedule = ScheduleNone{};
  std::string sleep_onu = "ONU2";
  std::string sleep_lc = "LC2";
  LatencyParams latency;
  PowerModel power;
  std::uint32_t frame_overhead_bytes = 54;
  std::uint32_t probe_size_bytes = 64;
  std::uint32_t control_size_bytes = 128;
  std::uint64_t seed = 1;
  double t_end_s = 10.0;
};

namespace detail {

inline void require_keys(const nlohmann::json& j, const char* where,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) raise(Errc::BadScenario, std::string(where) + ": unknown field '" + key + "'");
  }
}

inline RandomVar parse_random_var(const nlohmann::json& j, const char* where) {
  if (j.is_number()) return RandomVar::fixed(j.get<double>());
  require_keys(j, where, {"dist", "value", "lo", "hi"});
  const std::string dist = j.at("dist").get<std::string>();
  if (dist == "fixed") return RandomVar::fixed(j.at("value").get<double>());
  if (dist == "uniform") {
    const double lo = j.at("lo").get<double>();
    const double hi = j.at("hi").get<double>();
    if (hi < lo) raise(Errc::BadScenario, std::string(where) + ": hi < lo");
    return RandomVar::uniform(lo, hi);
  }
  raise(Errc::BadScenario, std::string(where) + ": unknown dist '" + dist + "'");
}

inline nlohmann::json random_var_to_json(const RandomVar& v) {
  if (v.kind == RandomVar::Kind::Fixed)
    return nlohmann::json{{"dist", "fixed"}, {"value", v.a}};
  return nlohmann::json{{"dist", "uniform"}, {"lo", v.a}, {"hi", v.b}};
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::require_keys;
  if (!j.is_object()) raise(Errc::BadScenario, "scenario document must be an object");
  require_keys(j, "scenario",
               {"schema_version", "name", "topology", "flows", "sleep_schedule", "sleep_pair",
                "latency", "power_model", "frame_overhead_bytes", "probe_size_bytes",
                "control_size_bytes", "seed", "t_end_s"});

  Scenario s;
  s.schema_version = j.at("schema_version").get<int>();
  if (s.schema_version != 1)
    raise(Errc::BadScenario, "schema_version " + std::to_string(s.schema_version) + " unsupported");
  s.name = j.value("name", "unnamed");

  const auto& topo = j.at("topology");
  if (topo.is_string()) {
    s.topology_ref = topo.get<std::string>();
    if (s.topology_ref != "reference")
      raise(Errc::BadScenario, "topology: unknown reference '" + s.topology_ref + "'");
  } else {
    s.topology_ref = "inline";
    s.topology_inline = topo;
  }

  if (j.contains("flows")) {
    const auto& f = j.at("flows");
    require_keys(f, "flows", {"probes", "cbr"});
    if (f.contains("probes")) {
      for (const auto& p : f.at("probes")) {
        require_keys(p, "flows.probes[]", {"src", "dst", "interval_s", "vlan"});
        ProbeFlowSpec spec;
        spec.src = p.at("src").get<std::string>();
        spec.dst = p.at("dst").get<std::string>();
        spec.interval_s = p.at("interval_s").get<double>();
        spec.vlan = p.at("vlan").get<Vlan>();
        s.probes.push_back(spec);
      }
    }
    if (f.contains("cbr")) {
      for (const auto& c : f.at("cbr")) {
        require_keys(c, "flows.cbr[]", {"src", "dst", "payload_bytes", "offered_load_bps", "vlan"});
        CbrFlowSpec spec;
        spec.src = c.at("src").get<std::string>();
        spec.dst = c.at("dst").get<std::string>();
        spec.payload_bytes = c.at("payload_bytes").get<std::uint32_t>();
        spec.offered_load_bps = c.at("offered_load_bps").get<double>();
        spec.vlan = c.at("vlan").get<Vlan>();
        s.cbr.push_back(spec);
      }
    }
  }

  if (j.contains("sleep_schedule")) {
    const auto& sch = j.at("sleep_schedule");
    const std::string mode = sch.at("mode").get<std::string>();
    if (mode == "none") {
      require_keys(sch, "sleep_schedule", {"mode"});
      s.schedule = ScheduleNone{};
    } else if (mode == "daynight") {
      require_keys(sch, "sleep_schedule", {"mode", "cycles", "period_s"});
      ScheduleDayNight d;
      d.cycles = sch.at("cycles").get<std::uint32_t>();
      d.period_s = sch.at("period_s").get<double>();
      if (d.period_s <= 0) raise(Errc::BadScenario, "sleep_schedule.period_s must be > 0");
      s.schedule = d;
    } else if (mode == "periodic") {
      require_keys(sch, "sleep_schedule", {"mode", "t_rec_s"});
      SchedulePeriodic p;
      p.t_rec_s = sch.at("t_rec_s").get<double>();
      if (p.t_rec_s < 0) raise(Errc::BadScenario, "sleep_schedule.t_rec_s must be >= 0");
      s.schedule = p;
    } else {
      raise(Errc::BadScenario, "sleep_schedule.mode: unknown mode '" + mode + "'");
    }
  }

  if (j.contains("sleep_pair")) {
    const auto& p = j.at("sleep_pair");
    require_keys(p, "sleep_pair", {"onu", "lc"});
    s.sleep_onu = p.at("onu").get<std::string>();
    s.sleep_lc = p.at("lc").get<std::string>();
  }

  if (j.contains("latency")) {
    const auto& l = j.at("latency");
    require_keys(l, "latency",
                 {"d_lit_ms", "d_sdn_ms", "d_link_ms", "install_us", "cleanup_guard_ms",
                  "transition_ms"});
    if (l.contains("d_lit_ms")) s.latency.d_lit_ms = detail::parse_random_var(l.at("d_lit_ms"), "latency.d_lit_ms");
    if (l.contains("d_sdn_ms")) s.latency.d_sdn_ms = detail::parse_random_var(l.at("d_sdn_ms"), "latency.d_sdn_ms");
    s.latency.d_link_ms = l.value("d_link_ms", s.latency.d_link_ms);
    s.latency.install_us = l.value("install_us", s.latency.install_us);
    s.latency.cleanup_guard_ms = l.value("cleanup_guard_ms", s.latency.cleanup_guard_ms);
    s.latency.transition_ms = l.value("transition_ms", s.latency.transition_ms);
  }

  if (j.contains("power_model")) {
    const auto& p = j.at("power_model");
    require_keys(p, "power_model", {"olt_on_w", "olt_off_w", "onu_on_w", "onu_off_w"});
    s.power.p_olt_on = p.at("olt_on_w").get<double>();
    s.power.p_olt_off = p.at("olt_off_w").get<double>();
    s.power.p_onu_on = p.at("onu_on_w").get<double>();
    s.power.p_onu_off = p.at("onu_off_w").get<double>();
    if (!s.power.valid()) raise(Errc::BadScenario, "power_model: off powers must not exceed on powers");
  }

  s.frame_overhead_bytes = j.value("frame_overhead_bytes", s.frame_overhead_bytes);
  s.probe_size_bytes = j.value("probe_size_bytes", s.probe_size_bytes);
  s.control_size_bytes = j.value("control_size_bytes", s.control_size_bytes);
  s.seed = j.value("seed", s.seed);
  s.t_end_s = j.at("t_end_s").get<double>();
  if (s.t_end_s <= 0) raise(Errc::BadScenario, "t_end_s must be > 0");
  return s;
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json flows;
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& p : s.probes)
    probes.push_back({{"src", p.src}, {"dst", p.dst}, {"interval_s", p.interval_s}, {"vlan", p.vlan}});
  nlohmann::json cbr = nlohmann::json::array();
  for (const auto& c : s.cbr)
    cbr.push_back({{"src", c.src},
                   {"dst", c.dst},
                   {"payload_bytes", c.payload_bytes},
                   {"offered_load_bps", c.offered_load_bps},
                   {"vlan", c.vlan}});
  flows["probes"] = probes;
  flows["cbr"] = cbr;

  nlohmann::json sched;
  if (std::holds_alternative<ScheduleNone>(s.schedule)) {
    sched = {{"mode", "none"}};
  } else if (const auto* d = std::get_if<ScheduleDayNight>(&s.schedule)) {
    sched = {{"mode", "daynight"}, {"cycles", d->cycles}, {"period_s", d->period_s}};
  } else {
    sched = {{"mode", "periodic"}, {"t_rec_s", std::get<SchedulePeriodic>(s.schedule).t_rec_s}};
  }

  return nlohmann::json{
      {"schema_version", s.schema_version},
      {"name", s.name},
      {"topology", s.topology_inline ? *s.topology_inline : nlohmann::json(s.topology_ref)},
      {"flows", flows},
      {"sleep_schedule", sched},
      {"sleep_pair", {{"onu", s.sleep_onu}, {"lc", s.sleep_lc}}},
      {"latency",
       {{"d_lit_ms", detail::random_var_to_json(s.latency.d_lit_ms)},
        {"d_sdn_ms", detail::random_var_to_json(s.latency.d_sdn_ms)},
        {"d_link_ms", s.latency.d_link_ms},
        {"install_us", s.latency.install_us},
        {"cleanup_guard_ms", s.latency.cleanup_guard_ms},
        {"transition_ms", s.latency.transition_ms}}},
      {"power_model",
       {{"olt_on_w", s.power.p_olt_on},
        {"olt_off_w", s.power.p_olt_off},
        {"onu_on_w", s.power.p_onu_on},
        {"onu_off_w", s.power.p_onu_off}}},
      {"frame_overhead_bytes", s.frame_overhead_bytes},
      {"probe_size_bytes", s.probe_size_bytes},
      {"control_size_bytes", s.control_size_bytes},
      {"seed", s.seed},
      {"t_end_s", s.t_end_s}};
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::BadScenario, "cannot open scenario file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    raise(Errc::BadScenario, "parse error in '" + path + "': " + e.what());
  }
  return scenario_from_json(j);
}

inline Topology scenario_topology(const Scenario& s) {
  if (s.topology_inline) return topology_from_json(*s.topology_inline);
  return build_reference_topology();
}

}  // namespace fhsim
