#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fhsim/energy.hpp"
#include "fhsim/error.hpp"
#include "fhsim/log.hpp"
#include "fhsim/packet.hpp"
#include "fhsim/time.hpp"
#include "fhsim/topology.hpp"

namespace fhsim {

// One measured reconfiguration: the off-direction trigger message transiting
// the tap, paired with the first subsequent probe reply of the affected vlan
// seen there.
struct ReconfigSample {
  std::uint32_t episode = 0;
  SimTime trigger_seen_at = 0;
  SimTime first_reply_at = 0;
  // first_reply_at - trigger_seen_at, minus the configured constant tunnel
  // delay (0 by default, matching the measurement's exclusion of it).
  SimTime duration = 0;
};

struct Histogram {
  double bin_width_s = 0.010;
  std::vector<double> probabilities;  // bins anchored at 0

  double mass(double lo_s, double hi_s) const {
    double m = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      const double b = static_cast<double>(i) * bin_width_s;
      if (b >= lo_s - 1e-12 && b < hi_s - 1e-12) m += probabilities[i];
    }
    return m;
  }
};

inline Histogram pmf(const std::vector<double>& samples_s, double bin_width_s) {
  if (samples_s.empty()) raise(Errc::EmptySamples, "pmf of zero samples");
  if (!(bin_width_s > 0)) raise(Errc::EmptySamples, "pmf bin width must be > 0");
  Histogram h;
  h.bin_width_s = bin_width_s;
  std::size_t max_bin = 0;
  std::vector<std::size_t> bins;
  for (double s : samples_s) {
    const auto b = static_cast<std::size_t>(std::floor(s / bin_width_s));
    if (b >= bins.size()) bins.resize(b + 1, 0);
    max_bin = std::max(max_bin, b);
    ++bins[b];
  }
  h.probabilities.resize(max_bin + 1, 0.0);
  for (std::size_t i = 0; i <= max_bin; ++i)
    h.probabilities[i] = static_cast<double>(bins[i]) / static_cast<double>(samples_s.size());
  return h;
}

struct FlowStats {
  std::uint64_t created = 0;
  std::uint64_t delivered = 0;        // at the flow destination
  std::uint64_t delivered_other = 0;  // at some other host (transition windows)
  std::uint64_t dropped = 0;
  SimTime delay_sum = 0;  // over packets delivered at the destination

  std::optional<double> mean_delay_s() const {
    if (delivered == 0) return std::nullopt;
    return to_seconds(delay_sum) / static_cast<double>(delivered);
  }

  double loss_ratio() const {
    if (created == 0) return 0.0;
    return static_cast<double>(dropped) / static_cast<double>(created);
  }

  std::uint64_t in_flight() const { return created - delivered - delivered_other - dropped; }
};

// Per-episode ground truth kept alongside the tap measurement.
struct EpisodeRecord {
  std::uint32_t idx = 0;
  PowerDirection direction = PowerDirection::Off;
  Vlan vlan = 0;
  SimTime commanded_at = -1;
  SimTime notify_tap = -1;
  SimTime last_install = -1;
  SimTime acked = -1;
  bool complete = false;
};

// Stable windows between a completed off-reconfiguration and the next
// command, used to check that rerouted probes all arrive.
struct StableWindow {
  SimTime t0 = 0;
  SimTime t1 = -1;
  std::uint64_t probes_created = 0;
  std::uint64_t probes_delivered = 0;
};

struct MetricsReport {
  std::vector<ReconfigSample> reconfig_samples;
  std::uint32_t incomplete_episodes = 0;
  std::optional<Histogram> reconfig_pmf;
  std::map<std::string, FlowStats> flows;
  bool conservation_ok = true;
  std::optional<double> eta;  // energy savings over the simulated schedule
};

// Single-pass extraction shared by the online collector and the log replay
// path. Feed tap observations in time order.
class TapPairing {
 public:
  explicit TapPairing(SimTime subtract = 0) : subtract_(subtract) {}

  void on_notify(SimTime t, PowerDirection dir, Vlan vlan, std::uint32_t episode) {
    if (dir != PowerDirection::Off) return;  // wake restores do not interrupt the prober
    if (open_) ++incomplete_;
    open_ = true;
    sample_ = ReconfigSample{episode, t, 0, 0};
    vlan_ = vlan;
  }

  void on_probe_reply(SimTime t, Vlan vlan) {
    if (!open_ || vlan != vlan_) return;
    sample_.first_reply_at = t;
    const SimTime raw = sample_.first_reply_at - sample_.trigger_seen_at;
    sample_.duration = std::max<SimTime>(0, raw - subtract_);
    samples_.push_back(sample_);
    open_ = false;
  }

  void finish() {
    if (open_) ++incomplete_;
    open_ = false;
  }

  const std::vector<ReconfigSample>& samples() const { return samples_; }
  std::uint32_t incomplete() const { return incomplete_; }

 private:
  bool open_ = false;
  ReconfigSample sample_;
  Vlan vlan_ = 0;
  SimTime subtract_ = 0;
  std::vector<ReconfigSample> samples_;
  std::uint32_t incomplete_ = 0;
};

// Tap-based reconfiguration times from a serialized run log.
inline std::vector<ReconfigSample> reconfiguration_times(const EventLog& log, NodeId tap,
                                                         SimTime tunnel_subtract = 0) {
  TapPairing pairing(tunnel_subtract);
  bool saw_tap = false;
  for (const auto& rec : log) {
    const auto* t = std::get_if<RecTap>(&rec);
    if (!t || t->node != tap.v) continue;
    saw_tap = true;
    if (t->kind == PacketKind::Control && t->msg_kind == ControlKind::OltNotify)
      pairing.on_notify(t->t, t->direction, t->vlan, static_cast<std::uint32_t>(t->seq));
    else if (t->kind == PacketKind::ProbeReply)
      pairing.on_probe_reply(t->t, t->vlan);
  }
  if (!saw_tap) raise(Errc::NoTapData, "log has no capture records at node " + std::to_string(tap.v));
  pairing.finish();
  return pairing.samples();
}

// Mean one-way delay and loss ratio of one flow from a serialized run log.
inline FlowStats one_way_stats(const EventLog& log, FlowId flow, NodeId dst) {
  FlowStats st;
  bool seen = false;
  for (const auto& rec : log) {
    if (const auto* c = std::get_if<RecPktCreate>(&rec)) {
      if (c->flow == flow) {
        ++st.created;
        seen = true;
      }
    } else if (const auto* d = std::get_if<RecPktDeliver>(&rec)) {
      if (d->flow == flow) {
        seen = true;
        if (d->node == dst.v) {
          ++st.delivered;
          st.delay_sum += d->t - d->created_at;
        } else {
          ++st.delivered_other;
        }
      }
    } else if (const auto* x = std::get_if<RecPktDrop>(&rec)) {
      if (x->flow == flow) {
        ++st.dropped;
        seen = true;
      }
    }
  }
  if (!seen) raise(Errc::UnknownFlow, "flow " + std::to_string(flow) + " absent from log");
  return st;
}

// Energy savings from aggregate sleep durations, Eq. (1)-(3) applied to the
// simulated schedule. Transition periods bill at the on rate.
inline double energy_report(const PowerModel& model, double pair_off_s, double total_s) {
  DutyCycle d{total_s - pair_off_s, pair_off_s};
  return energy_savings(model, d);
}

}  // namespace fhsim
