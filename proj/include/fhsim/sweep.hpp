#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <string>
#include <vector>

#include "fhsim/simulation.hpp"
#include "fhsim/topology_io.hpp"

namespace fhsim {

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) raise(Errc::MissingArtifact, "cannot write '" + p.string() + "'");
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) raise(Errc::MissingArtifact, "missing file '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

}  // namespace detail

// The flow the experiment reports on: the CBR flow riding the sleep pair's
// vlan, or the first CBR flow, or the first flow.
inline std::string measured_flow_name(const RunResult& r, Vlan affected_vlan) {
  const ResolvedFlow* fallback = nullptr;
  for (const auto& f : r.flows) {
    if (f.kind != PacketKind::Cbr) continue;
    if (!fallback) fallback = &f;
    if (f.vlan == affected_vlan) return f.name;
  }
  if (fallback) return fallback->name;
  return r.flows.empty() ? std::string() : r.flows.front().name;
}

struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path manifest() const { return dir / "manifest.json"; }
  std::filesystem::path events() const { return dir / "events.ndjson"; }
  std::filesystem::path samples() const { return dir / "reconfig_samples.csv"; }
  std::filesystem::path pmf() const { return dir / "pmf.csv"; }
  std::filesystem::path flows() const { return dir / "flows.csv"; }
  std::filesystem::path summary() const { return dir / "summary.csv"; }
  std::filesystem::path packets() const { return dir / "packets.csv"; }
};

struct RunToDirOptions {
  bool log_packets = false;
  bool packet_csv = false;
  double pmf_bin_ms = 10.0;
};

inline std::string samples_csv(const MetricsReport& rep) {
  std::string out = "episode,duration_ms\n";
  for (const auto& s : rep.reconfig_samples) {
    out += std::to_string(s.episode);
    out += ",";
    out += detail::fmt("%.6f", to_millis(s.duration));
    out += "\n";
  }
  return out;
}

inline std::string pmf_csv(const Histogram& h) {
  std::string out = "bin_start_ms,probability\n";
  for (std::size_t i = 0; i < h.probabilities.size(); ++i) {
    out += detail::fmt("%.3f", static_cast<double>(i) * h.bin_width_s * 1e3);
    out += ",";
    out += detail::fmt("%.9f", h.probabilities[i]);
    out += "\n";
  }
  return out;
}

inline std::string flows_csv(const MetricsReport& rep) {
  std::string out = "flow,created,delivered,delivered_other,dropped,loss_pct,mean_delay_ms\n";
  for (const auto& [name, st] : rep.flows) {
    out += name;
    out += "," + std::to_string(st.created);
    out += "," + std::to_string(st.delivered);
    out += "," + std::to_string(st.delivered_other);
    out += "," + std::to_string(st.dropped);
    out += "," + detail::fmt("%.6f", st.loss_ratio() * 100.0);
    out += ",";
    out += st.mean_delay_s() ? detail::fmt("%.6f", *st.mean_delay_s() * 1e3) : "nan";
    out += "\n";
  }
  return out;
}

inline std::string summary_csv(const Scenario& scn, const RunResult& r) {
  std::string out =
      "name,seed,t_end_s,eta,conservation_ok,incomplete_episodes,reconfig_samples,created,"
      "delivered,dropped,in_flight\n";
  out += scn.name;
  out += "," + std::to_string(scn.seed);
  out += "," + detail::fmt("%.3f", scn.t_end_s);
  out += "," + detail::fmt("%.9f", r.report.eta.value_or(0.0));
  out += r.report.conservation_ok ? ",1" : ",0";
  out += "," + std::to_string(r.report.incomplete_episodes);
  out += "," + std::to_string(r.report.reconfig_samples.size());
  out += "," + std::to_string(r.created);
  out += "," + std::to_string(r.delivered);
  out += "," + std::to_string(r.dropped);
  out += "," + std::to_string(r.in_flight);
  out += "\n";
  return out;
}

inline nlohmann::json run_manifest(const Scenario& scn, const RunResult& r) {
  nlohmann::json j;
  j["tool"] = "fhsim";
  j["format_version"] = 1;
  j["scenario"] = scenario_to_json(scn);
  j["topology_resolved"] = topology_to_json(r.topology);
  j["semantics"] = {
      {"t_rec", "periodic schedule: pair off for t_rec then on for t_rec, starting off at t=0; "
                "t_rec=0 means never off"},
      {"measured_flow", measured_flow_name(r, 2)},
      {"reconfiguration_time", "off-direction olt notify transit at the aggregation L2SW to the "
                               "first subsequent probe reply of the affected vlan seen there"},
      {"loss_ratio", "dropped/created per flow"}};
  return j;
}

// Executes one scenario and writes the results directory.
inline RunResult run_scenario_to_dir(const Scenario& scn, const std::filesystem::path& dir,
                                     const RunToDirOptions& opt = {}) {
  std::filesystem::create_directories(dir);
  RunPaths paths{dir};

  std::ofstream events(paths.events(), std::ios::binary);
  std::ofstream packets;
  if (opt.packet_csv) {
    packets.open(paths.packets(), std::ios::binary);
    packets << packet_csv_header();
  }

  RunOptions ropt;
  ropt.log_packets = opt.log_packets || opt.packet_csv;
  ropt.sink = [&](const LogRecord& rec) {
    const bool pkt_level = std::holds_alternative<RecPktCreate>(rec) ||
                           std::holds_alternative<RecPktEnqueue>(rec) ||
                           std::holds_alternative<RecPktDeliver>(rec) ||
                           std::holds_alternative<RecPktDrop>(rec) ||
                           (std::holds_alternative<RecTap>(rec) &&
                            std::get<RecTap>(rec).kind != PacketKind::Control);
    if (!pkt_level || opt.log_packets) events << to_ndjson_line(rec);
    if (opt.packet_csv && pkt_level) {
      const std::string row = to_packet_csv_row(rec);
      if (!row.empty()) packets << row;
    }
  };

  Simulation sim(scn, ropt);
  RunResult r = sim.run();

  if (!r.report.reconfig_samples.empty() && opt.pmf_bin_ms > 0 && opt.pmf_bin_ms != 10.0) {
    std::vector<double> durs;
    for (const auto& s : r.report.reconfig_samples) durs.push_back(to_seconds(s.duration));
    r.report.reconfig_pmf = pmf(durs, opt.pmf_bin_ms / 1e3);
  }

  detail::write_file(paths.manifest(), run_manifest(scn, r).dump(2) + "\n");
  detail::write_file(paths.samples(), samples_csv(r.report));
  if (r.report.reconfig_pmf) detail::write_file(paths.pmf(), pmf_csv(*r.report.reconfig_pmf));
  detail::write_file(paths.flows(), flows_csv(r.report));
  detail::write_file(paths.summary(), summary_csv(scn, r));
  return r;
}

struct SweepCell {
  double t_rec_s = 0.0;
  double load_mbps = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double mean_delay_ms = 0.0;
  double loss_pct = 0.0;
  double eta = 0.0;
};

// Cross product of reconfiguration periods and offered loads. Every cell is
// an independent run; cell seed = base seed + t_rec row index.
inline std::vector<SweepCell> run_sweep(const Scenario& base, const std::vector<double>& trecs,
                                        const std::vector<double>& loads, unsigned jobs = 2) {
  std::vector<SweepCell> cells;
  for (std::size_t row = 0; row < trecs.size(); ++row)
    for (double load : loads) {
      SweepCell c;
      c.t_rec_s = trecs[row];
      c.load_mbps = load;
      c.seed = base.seed + row;
      cells.push_back(c);
    }

  auto run_cell = [&base](SweepCell c) {
    Scenario scn = base;
    scn.name = base.name + "_trec" + detail::fmt("%.0f", c.t_rec_s) + "_load" +
               detail::fmt("%.0f", c.load_mbps);
    scn.schedule = SchedulePeriodic{c.t_rec_s};
    scn.seed = c.seed;
    for (auto& f : scn.cbr) f.offered_load_bps = c.load_mbps * 1e6;
    try {
      Simulation sim(scn);
      RunResult r = sim.run();
      const std::string mf = measured_flow_name(r, 2);
      const auto it = r.report.flows.find(mf);
      if (it == r.report.flows.end()) raise(Errc::UnknownFlow, "measured flow '" + mf + "'");
      c.mean_delay_ms = it->second.mean_delay_s().value_or(0.0) * 1e3;
      c.loss_pct = it->second.loss_ratio() * 100.0;
      c.eta = r.report.eta.value_or(0.0);
      c.ok = true;
    } catch (const std::exception& e) {
      c.ok = false;
      c.error = e.what();
    }
    return c;
  };

  if (jobs <= 1) {
    for (auto& c : cells) c = run_cell(c);
    return cells;
  }
  for (std::size_t i = 0; i < cells.size(); i += jobs) {
    std::vector<std::future<SweepCell>> batch;
    for (std::size_t k = i; k < std::min(cells.size(), i + jobs); ++k)
      batch.push_back(std::async(std::launch::async, run_cell, cells[k]));
    for (std::size_t k = 0; k < batch.size(); ++k) cells[i + k] = batch[k].get();
  }
  return cells;
}

inline std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::string out = "trec_s,load_mbps,mean_delay_ms,loss_pct,eta,status\n";
  for (const auto& c : cells) {
    out += detail::fmt("%.3f", c.t_rec_s);
    out += "," + detail::fmt("%.3f", c.load_mbps);
    out += "," + detail::fmt("%.6f", c.mean_delay_ms);
    out += "," + detail::fmt("%.6f", c.loss_pct);
    out += "," + detail::fmt("%.9f", c.eta);
    out += c.ok ? ",ok" : ",error:" + c.error;
    out += "\n";
  }
  return out;
}

// ---- report: plot-data files from a results directory ----------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (first) {
      t.header = fields;
      first = false;
    } else {
      t.rows.push_back(fields);
    }
  }
  return t;
}

// Generates pmf.dat, delay_vs_trec_<load>.dat and loss_grid.csv from whatever
// run/sweep artifacts the directory holds.
inline std::vector<std::string> generate_report(const std::filesystem::path& results_dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  const fs::path pmf_csv_path = results_dir / "pmf.csv";
  const fs::path sweep_csv_path = results_dir / "sweep.csv";
  if (!fs::exists(pmf_csv_path) && !fs::exists(sweep_csv_path)) {
    raise(Errc::MissingArtifact, "neither '" + pmf_csv_path.string() + "' nor '" +
                                     sweep_csv_path.string() + "' exists");
  }

  if (fs::exists(pmf_csv_path)) {
    const CsvTable t = parse_csv(detail::read_file(pmf_csv_path));
    std::string out = "# bin_start_ms probability\n";
    for (const auto& row : t.rows) out += row[0] + " " + row[1] + "\n";
    detail::write_file(results_dir / "pmf.dat", out);
    written.push_back("pmf.dat");
  }

  if (fs::exists(sweep_csv_path)) {
    const CsvTable t = parse_csv(detail::read_file(sweep_csv_path));
    // Columns: trec_s, load_mbps, mean_delay_ms, loss_pct, eta, status.
    std::vector<double> trecs, loads;
    for (const auto& row : t.rows) {
      const double trec = std::stod(row[0]);
      const double load = std::stod(row[1]);
      if (std::find(trecs.begin(), trecs.end(), trec) == trecs.end()) trecs.push_back(trec);
      if (std::find(loads.begin(), loads.end(), load) == loads.end()) loads.push_back(load);
    }
    std::sort(trecs.begin(), trecs.end());
    std::sort(loads.begin(), loads.end());

    auto cell = [&](double trec, double load, std::size_t col) -> std::string {
      for (const auto& row : t.rows)
        if (std::stod(row[0]) == trec && std::stod(row[1]) == load) return row[col];
      return "nan";
    };

    for (double load : loads) {
      std::string out = "# trec_s mean_delay_ms (load " + detail::fmt("%.0f", load) + " Mb/s)\n";
      for (double trec : trecs)
        out += detail::fmt("%.3f", trec) + " " + cell(trec, load, 2) + "\n";
      const std::string name = "delay_vs_trec_load" + detail::fmt("%.0f", load) + ".dat";
      detail::write_file(results_dir / name, out);
      written.push_back(name);
    }

    std::string grid = "trec_s";
    for (double load : loads) grid += "," + detail::fmt("%.0f", load);
    grid += "\n";
    for (double trec : trecs) {
      grid += detail::fmt("%.3f", trec);
      for (double load : loads) grid += "," + cell(trec, load, 3);
      grid += "\n";
    }
    detail::write_file(results_dir / "loss_grid.csv", grid);
    written.push_back("loss_grid.csv");
  }

  return written;
}

}  // namespace fhsim
