#pragma once

#include <algorithm>
#include <cassert>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fhsim/controlplane.hpp"
#include "fhsim/dataplane.hpp"
#include "fhsim/engine.hpp"
#include "fhsim/log.hpp"
#include "fhsim/metrics.hpp"
#include "fhsim/random.hpp"
#include "fhsim/scenario.hpp"
#include "fhsim/traffic.hpp"

namespace fhsim {

struct RunOptions {
  bool keep_log = false;     // retain the full event log in memory
  bool log_packets = false;  // include per-packet records in the log/sink
  std::function<void(const LogRecord&)> sink;  // streaming consumer, optional
};

struct RunResult {
  MetricsReport report;
  std::vector<EpisodeRecord> episodes;
  std::vector<StableWindow> windows;
  EventLog log;
  std::map<std::string, std::vector<FlowEntry>> initial_tables;
  std::map<std::string, std::vector<FlowEntry>> final_tables;
  std::uint64_t created = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_flight = 0;
  SimTime end_time = 0;
  double pair_off_s = 0.0;
  std::vector<ResolvedFlow> flows;
  Topology topology;
};

// One run: topology + scenario wired onto the event engine. All state
// mutation happens on the single event loop; distinct Simulation instances
// share nothing.
class Simulation {
 public:
  explicit Simulation(Scenario scn, RunOptions opt = {})
      : scn_(std::move(scn)),
        opt_(std::move(opt)),
        topo_(scenario_topology(scn_)),
        dp_(topo_),
        rng_(scn_.seed),
        t_end_(from_seconds(scn_.t_end_s)) {
    resolve_roles();
    resolve_flows();
    provision_initial_tables();
    flushed_skip_.assign(dp_.queue_count(), 0);
    schedule_sleep_cycle();
    for (const auto& f : flows_) q_.schedule(0, ActTimer{f.def.id});
    emit(RecMeta{scn_.name, scn_.seed});
  }

  RunResult run() {
    while (!q_.empty() && q_.peek().time <= t_end_) {
      auto ev = q_.pop();
      std::visit([&](auto& act) { handle(ev.time, act); }, ev.action);
    }
    return finalize();
  }

  // Spec-level operation: entry becomes effective at `at` + install latency.
  SimTime install_flow(NodeId sw, const FlowEntry& entry, SimTime at) {
    if (!is_switch_kind(topo_.node(sw).kind))
      raise(Errc::UnknownNode, "'" + topo_.node(sw).label + "' is not a switch");
    if (!dp_.power(sw).on())
      raise(Errc::DeviceOff, "'" + topo_.node(sw).label + "' is not powered on");
    const SimTime effective = at + install_latency_;
    q_.schedule(effective, ActInstall{sw.v, entry.match, entry.action, kNoEpisode, false});
    return effective;
  }

  // Spec-level operation: begins the transition and schedules its completion.
  SimTime set_power(NodeId dev, PowerDirection target, SimTime at) {
    const SimTime done = dp_.set_power(dev, target, at, transition_);
    emit(RecPower{at, dev.v, dp_.power(dev).phase});
    track_power(dev, at);
    if (done > at) q_.schedule(done, ActPowerDone{dev.v});
    return done;
  }

  const Topology& topology() const { return topo_; }
  Dataplane& dataplane() { return dp_; }
  const std::vector<VlanPath>& live_vlans() const { return live_vlans_; }
  const ControllerState& lit_state() const { return lit_state_; }

  // Direct controller/agent entry points, exposed so the state machines can
  // be exercised without a full run.
  void lit_handle_notify(const ControlMessage& m, SimTime at) { lit_process_notify(m, 0, at); }
  void sdn_handle_trigger(const ControlMessage& m, SimTime at) { sdn_process_trigger(m, at); }
  void olt_command(PowerDirection dir, SimTime at) { agent_command(dir, at); }
  ControlMessage make_message(ControlKind kind, PowerDirection dir, Vlan vlan) {
    ControlMessage m;
    m.kind = kind;
    m.sender = pair_lc_;
    m.receiver = kind == ControlKind::Trigger ? sdn_node_ : lit_node_;
    m.direction = dir;
    m.vlan = vlan;
    m.dev_onu = pair_onu_;
    m.dev_lc = pair_lc_;
    m.episode = kNoEpisode;
    return m;
  }

  // Drains all scheduled events up to and including `until`. For tests.
  void drain_until(SimTime until) {
    while (!q_.empty() && q_.peek().time <= until) {
      auto ev = q_.pop();
      std::visit([&](auto& act) { handle(ev.time, act); }, ev.action);
    }
  }

 private:
  static constexpr std::uint32_t kNoEpisode = 0xffffffff;

  struct ActTimer {
    FlowId flow;
  };
  struct ActDeparture {
    std::uint32_t queue;
  };
  struct ActArrival {
    std::uint32_t link;
    std::uint8_t dir;  // 0: traveling a->b
    Packet pkt;
  };
  struct ActPowerDone {
    std::uint32_t node;
  };
  struct ActOob {
    std::uint32_t msg;
  };
  struct ActCtrlProcess {
    std::uint8_t who;  // 0 = lit, 1 = sdn
    std::uint32_t msg;
  };
  struct ActInstall {
    std::uint32_t node;
    FlowMatch match;
    std::optional<FlowAction> action;  // nullopt = remove
    std::uint32_t episode;
    bool record_delta;
  };
  struct ActAgent {
    std::uint8_t what;  // 0 = power off, 1 = cleanup
    std::uint32_t episode;
  };
  struct ActSched {
    PowerDirection direction;
  };
  using Action = std::variant<ActTimer, ActDeparture, ActArrival, ActPowerDone, ActOob,
                              ActCtrlProcess, ActInstall, ActAgent, ActSched>;

  struct TableDelta {
    NodeId node;
    FlowMatch match;
    std::optional<FlowAction> old_action;
  };

  struct EpisodeState {
    EpisodeRecord rec;
    std::vector<TableDelta> deltas;
  };

  struct FlowRuntime {
    ResolvedFlow def;
    std::uint64_t next_seq = 0;
    FlowStats stats;
  };

  enum class PairState { Awake, SleepPending, Asleep, WakePending };

  // ---- setup -------------------------------------------------------------

  void resolve_roles() {
    for (const auto& n : topo_.nodes()) {
      if (n.kind == NodeKind::LitController) lit_node_ = n.id;
      if (n.kind == NodeKind::SdnController) sdn_node_ = n.id;
      if (n.kind == NodeKind::AggregationL2Switch) tap_ = n.id;
    }
    auto rep = validate(topo_);
    if (!rep.ok()) raise(Errc::BadTopology, "topology invalid: " + rep.violations[0].message);

    pair_onu_ = topo_.node_by_label(scn_.sleep_onu);
    pair_lc_ = topo_.node_by_label(scn_.sleep_lc);
    if (topo_.node(pair_onu_).kind != NodeKind::Onu)
      raise(Errc::BadScenario, "sleep_pair.onu '" + scn_.sleep_onu + "' is not an onu");
    if (topo_.node(pair_lc_).kind != NodeKind::OltLineCard)
      raise(Errc::BadScenario, "sleep_pair.lc '" + scn_.sleep_lc + "' is not an olt line card");
    auto tl = tap_.valid() ? topo_.find_link(pair_lc_, tap_) : std::nullopt;
    if (tl)
      pair_tunnel_ = *tl;
    else if (!std::holds_alternative<ScheduleNone>(scn_.schedule))
      raise(Errc::BadScenario, "sleep pair line card has no tunnel to the aggregation L2SW");

    install_latency_ = from_micros(scn_.latency.install_us);
    d_link_ = from_millis(scn_.latency.d_link_ms);
    guard_ = from_millis(scn_.latency.cleanup_guard_ms);
    transition_ = from_millis(scn_.latency.transition_ms);

    live_vlans_ = topo_.vlans();
    for (const auto& p : live_vlans_) original_paths_[p.vlan_id] = p;
  }

  void resolve_flows() {
    FlowId id = 0;
    for (const auto& p : scn_.probes) {
      auto f = resolve_probe_flow(topo_, p, scn_.probe_size_bytes);
      f.id = id++;
      flows_.push_back(FlowRuntime{f, 0, {}});
      if (topo_.node(f.src).kind == NodeKind::TunnelEndpoint) {
        auto l = topo_.find_link(f.src, tap_);
        if (l && !monitor_links_.count(f.vlan)) monitor_links_[f.vlan] = *l;
      }
    }
    for (const auto& c : scn_.cbr) {
      auto f = resolve_cbr_flow(topo_, c, scn_.frame_overhead_bytes);
      f.id = id++;
      flows_.push_back(FlowRuntime{f, 0, {}});
    }
  }

  void provision_initial_tables() {
    for (const auto& path : live_vlans_) {
      if (path.status != VlanStatus::Active) continue;
      for (const auto& [node, entry] : switch_entries_for_path(topo_, path))
        dp_.table(node).install(entry);
    }
    // Access-switch attachment for UE-sourced flows.
    for (const auto& f : flows_) {
      const Node& src = topo_.node(f.def.src);
      if (src.kind != NodeKind::UeHost) continue;
      const VlanPath* active = active_path(f.def.vlan);
      if (!active) raise(Errc::BadScenario, "flow '" + f.def.name + "': no active vlan " +
                                                std::to_string(f.def.vlan));
      NodeId acc;
      for (LinkId l : topo_.links_at(src.id)) {
        NodeId o = topo_.link(l).other(src.id);
        if (topo_.node(o).kind == NodeKind::AccessSwitch) acc = o;
      }
      if (!acc.valid()) raise(Errc::BadScenario, "ue host '" + src.label + "' has no access switch");
      auto ue_link = topo_.find_link(acc, src.id);
      auto onu_link = topo_.find_link(acc, active->hops.front());
      if (!onu_link)
        raise(Errc::BadScenario, "access switch cannot reach onu of vlan " +
                                     std::to_string(f.def.vlan));
      dp_.table(acc).install(FlowEntry{{*ue_link, f.def.vlan, 0}, OutputAction{*onu_link}});
      dp_.table(acc).install(FlowEntry{{*onu_link, f.def.vlan, 0}, OutputAction{*ue_link}});
    }
    initial_tables_ = snapshot_tables();
  }

  void schedule_sleep_cycle() {
    if (const auto* d = std::get_if<ScheduleDayNight>(&scn_.schedule)) {
      const SimTime period = from_seconds(d->period_s);
      for (std::uint32_t k = 0; k < d->cycles; ++k) {
        const SimTime t0 = static_cast<SimTime>(k) * period;
        if (t0 > t_end_) break;
        q_.schedule(t0, ActSched{PowerDirection::Off});
        if (t0 + period / 2 <= t_end_) q_.schedule(t0 + period / 2, ActSched{PowerDirection::On});
      }
    } else if (const auto* p = std::get_if<SchedulePeriodic>(&scn_.schedule)) {
      if (p->t_rec_s <= 0) return;  // t_rec = 0: the pair never sleeps
      const SimTime t_rec = from_seconds(p->t_rec_s);
      PowerDirection dir = PowerDirection::Off;
      for (SimTime t = 0; t <= t_end_; t += t_rec) {
        q_.schedule(t, ActSched{dir});
        dir = dir == PowerDirection::Off ? PowerDirection::On : PowerDirection::Off;
      }
    }
  }

  // ---- helpers -----------------------------------------------------------

  void emit(LogRecord rec) {
    if (opt_.sink) opt_.sink(rec);
    if (opt_.keep_log) log_.push_back(std::move(rec));
  }

  void emit_packet(LogRecord rec) {
    if (!opt_.log_packets) return;
    emit(std::move(rec));
  }

  const VlanPath* active_path(Vlan vlan) const {
    for (const auto& p : live_vlans_)
      if (p.vlan_id == vlan && p.status == VlanStatus::Active) return &p;
    return nullptr;
  }

  bool node_powered(NodeId n) const { return dp_.power(n).on(); }

  // Management-plane next hop toward `dst`, ignoring flow tables. Cached.
  LinkId control_next_hop(NodeId at, NodeId dst) {
    const std::uint64_t key = (static_cast<std::uint64_t>(at.v) << 32) | dst.v;
    auto it = ctl_routes_.find(key);
    if (it != ctl_routes_.end()) return it->second;
    // BFS from dst over every link; first hop from `at` toward dst.
    std::vector<int> dist(topo_.nodes().size(), -1);
    std::vector<NodeId> frontier{dst};
    dist[dst.v] = 0;
    while (!frontier.empty()) {
      std::vector<NodeId> next;
      for (NodeId n : frontier)
        for (NodeId m : topo_.neighbors_sorted(n))
          if (dist[m.v] == -1) {
            dist[m.v] = dist[n.v] + 1;
            next.push_back(m);
          }
      frontier = std::move(next);
    }
    LinkId hop;
    for (NodeId m : topo_.neighbors_sorted(at))
      if (dist[m.v] != -1 && dist[m.v] == dist[at.v] - 1) {
        hop = *topo_.find_link(at, m);
        break;
      }
    if (!hop.valid()) raise(Errc::NoPathAvailable, "no control route " + topo_.node(at).label +
                                                       " -> " + topo_.node(dst).label);
    ctl_routes_[key] = hop;
    return hop;
  }

  void count_created(const Packet& pkt) {
    if (pkt.flow == kControlFlow) {
      ++control_stats_.created;
    } else {
      ++flows_[pkt.flow].stats.created;
      if (pkt.kind == PacketKind::ProbeRequest && !windows_.empty()) {
        auto& w = windows_.back();
        // Probes created within the tail margin may still be in flight when
        // the run is cut off, so the window excludes them.
        if (w.t1 < 0 && pkt.created_at >= w.t0 && pkt.vlan == window_vlan_ &&
            pkt.created_at <= t_end_ - 10 * kMillisecond)
          ++w.probes_created;
      }
    }
    ++total_created_;
  }

  void drop_packet(const Packet& pkt, NodeId where, DropReason reason, SimTime now) {
    if (pkt.flow == kControlFlow)
      ++control_stats_.dropped;
    else
      ++flows_[pkt.flow].stats.dropped;
    ++total_dropped_;
    emit_packet(RecPktDrop{now, pkt.flow, pkt.seq, pkt.kind, pkt.vlan, where.v, reason,
                           pkt.created_at});
  }

  void enqueue_packet(NodeId from, LinkId link, const Packet& pkt, SimTime now) {
    const std::uint32_t qi = dp_.queue_index(link, from);
    auto res = dp_.enqueue(qi, pkt, now);
    if (std::holds_alternative<EnqueueDropped>(res)) {
      drop_packet(pkt, from, DropReason::BufferFull, now);
      return;
    }
    const SimTime departure = std::get<EnqueueAccepted>(res).departure;
    emit_packet(RecPktEnqueue{now, pkt.flow, pkt.seq, pkt.kind, from.v, link.v, departure});
    q_.schedule(departure, ActDeparture{qi});
  }

  void deliver_packet(const Packet& pkt, NodeId at, SimTime now) {
    emit_packet(RecPktDeliver{now, pkt.flow, pkt.seq, pkt.kind, pkt.vlan, at.v, pkt.created_at});
    ++total_delivered_;
    if (pkt.flow == kControlFlow) {
      ++control_stats_.delivered;
      return;
    }
    auto& f = flows_[pkt.flow];
    const NodeId expected =
        pkt.kind == PacketKind::ProbeReply ? f.def.src : f.def.dst;
    if (at == expected) {
      ++f.stats.delivered;
      f.stats.delay_sum += now - pkt.created_at;
      if (pkt.kind == PacketKind::ProbeRequest) note_window_delivery(pkt);
    } else {
      ++f.stats.delivered_other;
    }
    if (pkt.kind == PacketKind::ProbeRequest && at == f.def.dst) {
      Packet reply = pkt;
      reply.kind = PacketKind::ProbeReply;
      reply.size = scn_.probe_size_bytes;
      reply.created_at = now;
      count_created(reply);
      emit_packet(RecPktCreate{now, reply.flow, reply.seq, reply.kind, reply.vlan, reply.size, at.v});
      enqueue_packet(at, topo_.links_at(at)[0], reply, now);
    }
  }

  void note_window_delivery(const Packet& pkt) {
    if (pkt.vlan != window_vlan_) return;
    for (auto it = windows_.rbegin(); it != windows_.rend(); ++it) {
      if (pkt.created_at >= it->t0 && (it->t1 < 0 || pkt.created_at < it->t1)) {
        ++it->probes_delivered;
        return;
      }
      if (pkt.created_at >= it->t0) return;
    }
  }

  std::uint32_t new_message(ControlKind kind, NodeId sender, NodeId receiver, PowerDirection dir,
                            Vlan vlan, std::uint32_t episode, SimTime now) {
    ControlMessage m;
    m.kind = kind;
    m.sender = sender;
    m.receiver = receiver;
    m.direction = dir;
    m.vlan = vlan;
    m.dev_onu = pair_onu_;
    m.dev_lc = pair_lc_;
    m.sent_at = now;
    m.episode = episode;
    msgs_.push_back(m);
    emit(RecCtl{now, false, kind, sender.v, receiver.v, dir, vlan});
    return static_cast<std::uint32_t>(msgs_.size() - 1);
  }

  // In-band injection at the line card's tunnel egress. The management PC
  // terminating the tunnel stays powered, so this works regardless of the
  // line card's sleep state.
  void inject_inband(std::uint32_t msg_idx, SimTime now) {
    const ControlMessage& m = msgs_[msg_idx];
    Packet pkt;
    pkt.seq = m.episode;
    pkt.flow = kControlFlow;
    pkt.size = scn_.control_size_bytes;
    pkt.created_at = now;
    pkt.vlan = m.vlan;
    pkt.kind = PacketKind::Control;
    pkt.control_idx = msg_idx;
    count_created(pkt);
    emit_packet(RecPktCreate{now, pkt.flow, pkt.seq, pkt.kind, pkt.vlan, pkt.size, m.sender.v});
    enqueue_packet(m.sender, pair_tunnel_, pkt, now);
  }

  void send_inband_from(NodeId node, std::uint32_t msg_idx, SimTime now) {
    const ControlMessage& m = msgs_[msg_idx];
    Packet pkt;
    pkt.seq = m.episode;
    pkt.flow = kControlFlow;
    pkt.size = scn_.control_size_bytes;
    pkt.created_at = now;
    pkt.vlan = m.vlan;
    pkt.kind = PacketKind::Control;
    pkt.control_idx = msg_idx;
    count_created(pkt);
    emit_packet(RecPktCreate{now, pkt.flow, pkt.seq, pkt.kind, pkt.vlan, pkt.size, node.v});
    enqueue_packet(node, control_next_hop(node, m.receiver), pkt, now);
  }

  void schedule_install(NodeId node, FlowMatch match, std::optional<FlowAction> action,
                        std::uint32_t episode, bool record_delta, SimTime now) {
    q_.schedule(now + install_latency_, ActInstall{node.v, match, action, episode, record_delta});
  }

  std::map<std::string, std::vector<FlowEntry>> snapshot_tables() const {
    std::map<std::string, std::vector<FlowEntry>> out;
    for (const auto& n : topo_.nodes())
      if (is_switch_kind(n.kind)) out[n.label] = dp_.table(n.id).snapshot();
    return out;
  }

  void track_power(NodeId n, SimTime now) {
    // Accumulate the time spent in the phase we are leaving.
    auto& tr = power_track_[n.v];
    if (tr.since >= 0) {
      if (tr.phase == PowerPhase::Off) tr.off_total += now - tr.since;
    }
    tr.phase = dp_.power(n).phase;
    tr.since = now;
  }

  // ---- event handlers ----------------------------------------------------

  void handle(SimTime now, ActTimer& a) {
    auto& f = flows_[a.flow];
    Packet pkt;
    pkt.seq = f.next_seq++;
    pkt.flow = f.def.id;
    pkt.size = f.def.wire_size;
    pkt.created_at = now;
    pkt.vlan = f.def.vlan;
    pkt.kind = f.def.kind;
    count_created(pkt);
    emit_packet(RecPktCreate{now, pkt.flow, pkt.seq, pkt.kind, pkt.vlan, pkt.size, f.def.src.v});
    enqueue_packet(f.def.src, topo_.links_at(f.def.src)[0], pkt, now);
    if (now + f.def.period <= t_end_) q_.schedule(now + f.def.period, ActTimer{a.flow});
  }

  void handle(SimTime now, ActDeparture& a) {
    if (flushed_skip_[a.queue] > 0) {
      --flushed_skip_[a.queue];
      return;
    }
    QueuedPacket qp = dp_.pop_front(a.queue);
    const EgressQueue& q = dp_.queue(a.queue);
    const Link& l = topo_.link(q.link);
    q_.schedule(now + l.propagation_delay, ActArrival{q.link.v, q.dir, qp.packet});
  }

  void handle(SimTime now, ActArrival& a) {
    const Link& l = topo_.link(LinkId{a.link});
    const NodeId to = a.dir == 0 ? l.b : l.a;
    const Packet& pkt = a.pkt;

    if (to == tap_) {
      if (pkt.kind == PacketKind::Control) {
        const ControlMessage& m = msgs_[pkt.control_idx];
        if (m.kind == ControlKind::OltNotify) {
          pairing_.on_notify(now, m.direction, m.vlan, m.episode);
          if (m.episode != kNoEpisode && m.episode < episodes_.size())
            episodes_[m.episode].rec.notify_tap = now;
        }
        emit(RecTap{now, to.v, pkt.flow, pkt.seq, pkt.kind, m.vlan, a.link, m.kind, m.direction});
      } else {
        if (pkt.kind == PacketKind::ProbeReply) pairing_.on_probe_reply(now, pkt.vlan);
        emit_packet(RecTap{now, to.v, pkt.flow, pkt.seq, pkt.kind, pkt.vlan, a.link,
                           ControlKind::OltNotify, PowerDirection::Off});
      }
    }

    if (!dp_.power(to).on()) {
      drop_packet(pkt, to, DropReason::DeviceOff, now);
      return;
    }

    if (pkt.kind == PacketKind::Control) {
      const ControlMessage& m = msgs_[pkt.control_idx];
      if (m.receiver == to) {
        deliver_packet(pkt, to, now);
        control_delivered(pkt.control_idx, now);
        return;
      }
      enqueue_packet(to, control_next_hop(to, m.receiver), pkt, now);
      return;
    }

    const NodeKind kind = topo_.node(to).kind;
    if (is_host_kind(kind)) {
      deliver_packet(pkt, to, now);
      return;
    }
    if (is_sleepable_kind(kind)) {
      // ONU and line card forward transparently between their two sides.
      const auto& links = topo_.links_at(to);
      for (LinkId cand : links) {
        if (cand.v != a.link) {
          enqueue_packet(to, cand, pkt, now);
          return;
        }
      }
      drop_packet(pkt, to, DropReason::NoMatch, now);
      return;
    }
    if (is_switch_kind(kind)) {
      auto res = dp_.forward(to, LinkId{a.link}, pkt.vlan);
      if (const auto* out = std::get_if<ForwardOutput>(&res)) {
        enqueue_packet(to, out->egress, pkt, now);
      } else {
        drop_packet(pkt, to, std::get<ForwardDrop>(res).reason, now);
      }
      return;
    }
    // Controllers receive only control packets.
    drop_packet(pkt, to, DropReason::NoMatch, now);
  }

  void handle(SimTime now, ActPowerDone& a) {
    dp_.finish_transition(NodeId{a.node});
    emit(RecPower{now, a.node, dp_.power(NodeId{a.node}).phase});
    track_power(NodeId{a.node}, now);
  }

  void handle(SimTime now, ActOob& a) {
    const ControlMessage m = msgs_[a.msg];
    emit(RecCtl{now, true, m.kind, m.sender.v, m.receiver.v, m.direction, m.vlan});
    if (m.receiver == sdn_node_ && m.kind == ControlKind::Trigger) {
      const SimTime d_sdn = from_millis(scn_.latency.d_sdn_ms.sample(rng_));
      q_.schedule(now + d_sdn, ActCtrlProcess{1, a.msg});
      return;
    }
    if (m.receiver == lit_node_ && m.kind == ControlKind::Ack) {
      lit_state_.pending_reconfigs.erase(m.vlan);
      const std::uint32_t ack = new_message(ControlKind::Ack, lit_node_, pair_lc_, m.direction,
                                            m.vlan, m.episode, now);
      send_inband_from(lit_node_, ack, now);
      return;
    }
  }

  void control_delivered(std::uint32_t msg_idx, SimTime now) {
    const ControlMessage m = msgs_[msg_idx];
    emit(RecCtl{now, true, m.kind, m.sender.v, m.receiver.v, m.direction, m.vlan});
    if (m.receiver == lit_node_ && m.kind == ControlKind::OltNotify) {
      const SimTime d_lit = from_millis(scn_.latency.d_lit_ms.sample(rng_));
      q_.schedule(now + d_lit, ActCtrlProcess{0, msg_idx});
      return;
    }
    if (m.receiver == pair_lc_ && m.kind == ControlKind::Ack) {
      agent_on_ack(m, now);
      return;
    }
  }

  void handle(SimTime now, ActCtrlProcess& a) {
    const ControlMessage m = msgs_[a.msg];
    if (a.who == 0)
      lit_process_notify(m, a.msg, now);
    else
      sdn_process_trigger(m, now);
  }

  // Step (2): remap the aggregation-node L2SW, then trigger the SdnCtrler.
  void lit_process_notify(const ControlMessage& m, std::uint32_t msg_idx, SimTime now) {
    if (m.dev_onu.v >= topo_.nodes().size() || m.dev_lc.v >= topo_.nodes().size())
      raise(Errc::UnknownDevice, "notify names a device outside the topology");

    if (m.direction == PowerDirection::Off) {
      auto affected = find_affected_path(live_vlans_, m.dev_onu, m.dev_lc, VlanStatus::Active);
      if (affected) {
        const Vlan vlan = live_vlans_[*affected].vlan_id;
        lit_state_.pending_reconfigs.insert(vlan);
        const std::set<NodeId> off{m.dev_onu, m.dev_lc};
        VlanPath next = compute_reroute(topo_, live_vlans_, vlan, off,
                                        [&](NodeId n) { return node_powered_for_reroute(n); });
        LinkId monitor;
        auto mi = monitor_links_.find(vlan);
        if (mi != monitor_links_.end()) monitor = mi->second;
        for (const auto& pi : plan_l2sw_remap(topo_, dp_, next, monitor))
          schedule_install(pi.node, pi.entry.match, pi.entry.action, m.episode, true, now);
      }
    } else {
      auto affected = find_affected_path(live_vlans_, m.dev_onu, m.dev_lc, VlanStatus::Superseded);
      if (affected) {
        const Vlan vlan = live_vlans_[*affected].vlan_id;
        lit_state_.pending_reconfigs.insert(vlan);
        for (const auto& [node, entry] : switch_entries_for_path(topo_, live_vlans_[*affected])) {
          if (topo_.node(node).kind != NodeKind::AggregationL2Switch) continue;
          auto cur = dp_.table(node).exact(entry.match);
          if (cur && *cur == entry.action) continue;
          schedule_install(node, entry.match, entry.action, m.episode, false, now);
        }
      }
    }

    const std::uint32_t trig = new_message(ControlKind::Trigger, lit_node_, sdn_node_,
                                           m.direction, m.vlan, m.episode, now);
    q_.schedule(now + d_link_, ActOob{trig});
    (void)msg_idx;
  }

  // Step (4): reconfigure the aggregation switches, server side first, and
  // acknowledge once the new entries are effective.
  void sdn_process_trigger(const ControlMessage& m, SimTime now) {
    if (m.direction == PowerDirection::Off) {
      auto affected = find_affected_path(live_vlans_, m.dev_onu, m.dev_lc, VlanStatus::Active);
      if (affected) {
        const Vlan vlan = live_vlans_[*affected].vlan_id;
        const std::set<NodeId> off{m.dev_onu, m.dev_lc};
        VlanPath next = compute_reroute(topo_, live_vlans_, vlan, off,
                                        [&](NodeId n) { return node_powered_for_reroute(n); });
        if (!(next == live_vlans_[*affected])) {
          for (const auto& pi : plan_aggregation_reroute(topo_, dp_, next))
            schedule_install(pi.node, pi.entry.match, pi.entry.action, m.episode, true, now);
          live_vlans_[*affected].status = VlanStatus::Superseded;
          live_vlans_.push_back(next);
        }
      }
    } else {
      auto affected = find_affected_path(live_vlans_, m.dev_onu, m.dev_lc, VlanStatus::Superseded);
      if (affected) {
        const VlanPath original = live_vlans_[*affected];
        for (const auto& pi : plan_aggregation_reroute(topo_, dp_, original))
          schedule_install(pi.node, pi.entry.match, pi.entry.action, m.episode, false, now);
        // Retire the reroute path and mark the original active again.
        const Vlan vlan = original.vlan_id;
        for (std::size_t i = 0; i < live_vlans_.size();) {
          if (live_vlans_[i].vlan_id == vlan && live_vlans_[i].status == VlanStatus::Active &&
              !(live_vlans_[i] == original)) {
            live_vlans_.erase(live_vlans_.begin() + static_cast<std::ptrdiff_t>(i));
          } else {
            ++i;
          }
        }
        for (auto& p : live_vlans_)
          if (p.vlan_id == vlan && p.hops == original.hops) p.status = VlanStatus::Active;
      }
    }

    const std::uint32_t ack =
        new_message(ControlKind::Ack, sdn_node_, lit_node_, m.direction, m.vlan, m.episode, now);
    q_.schedule(now + install_latency_ + d_link_, ActOob{ack});
  }

  bool node_powered_for_reroute(NodeId n) const {
    const auto& p = dp_.power(n);
    return p.phase == PowerPhase::On || p.phase == PowerPhase::TurningOn;
  }

  void handle(SimTime now, ActInstall& a) {
    const NodeId node{a.node};
    auto old = dp_.table(node).exact(a.match);
    bool drop_action = false;
    std::uint32_t egress = 0xffffffff;
    if (a.action) {
      dp_.table(node).install(FlowEntry{a.match, *a.action});
      if (const auto* out = std::get_if<OutputAction>(&*a.action))
        egress = out->egress.v;
      else
        drop_action = true;
    } else {
      dp_.table(node).remove(a.match);
    }
    emit(RecInstall{now, a.node, a.match.ingress.v, a.match.vlan, !a.action.has_value(),
                    drop_action, egress});
    if (a.episode != kNoEpisode) {
      auto& ep = episodes_[a.episode];
      ep.rec.last_install = std::max(ep.rec.last_install, now);
      if (a.record_delta) ep.deltas.push_back(TableDelta{node, a.match, old});
    }
  }

  void agent_on_ack(const ControlMessage& m, SimTime now) {
    auto& ep = episodes_[m.episode];
    ep.rec.acked = now;
    ep.rec.complete = true;
    if (m.direction == PowerDirection::Off) {
      reattach_ue(m.vlan, m.episode, now);
      open_window(m.vlan, now);
      q_.schedule(now + guard_, ActAgent{0, m.episode});
      pair_state_ = PairState::Asleep;
      last_sleep_episode_ = m.episode;
    } else {
      // Put the UE back on its home attachment, then retire the reroute
      // entries once in-flight traffic has drained.
      if (last_sleep_episode_ != kNoEpisode) {
        for (const auto& d : episodes_[last_sleep_episode_].deltas) {
          if (topo_.node(d.node).kind != NodeKind::AccessSwitch || !d.old_action) continue;
          dp_.table(d.node).install(FlowEntry{d.match, *d.old_action});
          emit(RecInstall{now, d.node.v, d.match.ingress.v, d.match.vlan, false,
                          std::holds_alternative<DropAction>(*d.old_action),
                          std::holds_alternative<OutputAction>(*d.old_action)
                              ? std::get<OutputAction>(*d.old_action).egress.v
                              : 0xffffffff});
        }
        q_.schedule(now + guard_, ActAgent{1, m.episode});
      }
      pair_state_ = PairState::Awake;
    }
  }

  // Radio-side reattachment, modeled as an immediate access-switch update:
  // the UE behind the affected vlan now enters through the surviving ONU.
  void reattach_ue(Vlan vlan, std::uint32_t episode, SimTime now) {
    if (vlan == 0) return;
    const VlanPath* active = active_path(vlan);
    if (!active) return;
    const NodeId new_onu = active->hops.front();
    for (const auto& n : topo_.nodes()) {
      if (n.kind != NodeKind::AccessSwitch) continue;
      auto onu_link = topo_.find_link(n.id, new_onu);
      if (!onu_link) continue;
      for (const auto& e : dp_.table(n.id).snapshot()) {
        if (e.match.vlan != vlan) continue;
        const NodeId other = topo_.link(e.match.ingress).other(n.id);
        if (topo_.node(other).kind != NodeKind::UeHost) continue;
        auto old = dp_.table(n.id).exact(e.match);
        dp_.table(n.id).install(FlowEntry{e.match, OutputAction{*onu_link}});
        episodes_[episode].deltas.push_back(TableDelta{n.id, e.match, old});
        emit(RecInstall{now, n.id.v, e.match.ingress.v, vlan, false, false, onu_link->v});
        // Reverse direction back toward the UE.
        FlowMatch rev{*onu_link, vlan, 0};
        auto rev_old = dp_.table(n.id).exact(rev);
        dp_.table(n.id).install(FlowEntry{rev, OutputAction{e.match.ingress}});
        episodes_[episode].deltas.push_back(TableDelta{n.id, rev, rev_old});
        emit(RecInstall{now, n.id.v, rev.ingress.v, vlan, false, false, e.match.ingress.v});
      }
    }
  }

  void open_window(Vlan vlan, SimTime t0) {
    window_vlan_ = vlan;
    windows_.push_back(StableWindow{t0, -1, 0, 0});
  }

  void close_window(SimTime t1) {
    if (!windows_.empty() && windows_.back().t1 < 0) windows_.back().t1 = t1;
  }

  void handle(SimTime now, ActAgent& a) {
    if (a.what == 0) {
      // Deferred power-off: connectivity has been rerouted and in-flight
      // packets have drained.
      for (NodeId dev : {pair_onu_, pair_lc_}) {
        flush_device_queues(dev, now);
        set_power(dev, PowerDirection::Off, now);
      }
      finish_episode(a.episode, now);
    } else {
      // Wake cleanup: undo the sleep episode's additions in reverse order.
      if (last_sleep_episode_ != kNoEpisode) {
        const auto& deltas = episodes_[last_sleep_episode_].deltas;
        for (auto it = deltas.rbegin(); it != deltas.rend(); ++it) {
          auto cur = dp_.table(it->node).exact(it->match);
          if (it->old_action) {
            if (!cur || !(*cur == *it->old_action))
              schedule_install(it->node, it->match, it->old_action, a.episode, false, now);
          } else if (cur) {
            schedule_install(it->node, it->match, std::nullopt, a.episode, false, now);
          }
        }
      }
      finish_episode(a.episode, now);
    }
  }

  void finish_episode(std::uint32_t episode, SimTime now) {
    const auto& e = episodes_[episode].rec;
    emit(RecEpisode{e.idx, e.direction, e.commanded_at, e.notify_tap, e.last_install, e.acked,
                    e.complete});
    (void)now;
  }

  void handle(SimTime now, ActSched& a) {
    agent_command(a.direction, now);
  }

  void agent_command(PowerDirection dir, SimTime now) {
    if (dir == PowerDirection::Off) {
      if (pair_state_ != PairState::Awake || !dp_.power(pair_onu_).on() ||
          !dp_.power(pair_lc_).on()) {
        emit(RecWarn{now, "sleep command ignored: pair not awake"});
        return;
      }
      close_window(now);
      const std::uint32_t episode = new_episode(PowerDirection::Off, now);
      const std::uint32_t m = new_message(ControlKind::OltNotify, pair_lc_, lit_node_,
                                          PowerDirection::Off, episode_vlan(), episode, now);
      inject_inband(m, now);
      pair_state_ = PairState::SleepPending;
    } else {
      if (pair_state_ != PairState::Asleep) {
        emit(RecWarn{now, "wake command ignored: pair not asleep"});
        return;
      }
      close_window(now);
      const std::uint32_t episode = new_episode(PowerDirection::On, now);
      for (NodeId dev : {pair_onu_, pair_lc_}) set_power(dev, PowerDirection::On, now);
      const std::uint32_t m = new_message(ControlKind::OltNotify, pair_lc_, lit_node_,
                                          PowerDirection::On, episode_vlan(), episode, now);
      inject_inband(m, now);
      pair_state_ = PairState::WakePending;
    }
  }

  Vlan episode_vlan() const {
    for (const auto& p : original_paths_) {
      bool has_onu = false, has_lc = false;
      for (NodeId h : p.second.hops) {
        has_onu |= h == pair_onu_;
        has_lc |= h == pair_lc_;
      }
      if (has_onu && has_lc) return p.first;
    }
    return 0;
  }

  std::uint32_t new_episode(PowerDirection dir, SimTime now) {
    EpisodeState e;
    e.rec.idx = static_cast<std::uint32_t>(episodes_.size());
    e.rec.direction = dir;
    e.rec.vlan = episode_vlan();
    e.rec.commanded_at = now;
    episodes_.push_back(std::move(e));
    return episodes_.back().rec.idx;
  }

  // Packets still in the device's own egress queues at power-off are lost.
  // Their already-scheduled departure events become no-ops via the skip
  // counters.
  void flush_device_queues(NodeId dev, SimTime now) {
    for (LinkId l : topo_.links_at(dev)) {
      const std::uint32_t qi = dp_.queue_index(l, dev);
      auto& q = dp_.queue(qi);
      while (!q.fifo.empty()) {
        drop_packet(q.fifo.front().packet, dev, DropReason::DeviceOff, now);
        q.fifo.pop_front();
        ++flushed_skip_[qi];
      }
      q.occupancy = 0;
    }
  }

  // ---- finalize ----------------------------------------------------------

  RunResult finalize() {
    const SimTime end = t_end_;
    pairing_.finish();
    close_window(end - 10 * kMillisecond);
    for (NodeId dev : {pair_onu_, pair_lc_}) track_power(dev, end);

    RunResult out;
    out.topology = topo_;
    out.end_time = end;
    out.initial_tables = initial_tables_;
    out.final_tables = snapshot_tables();

    std::uint64_t in_flight = 0;
    for (std::uint32_t i = 0; i < dp_.queue_count(); ++i) in_flight += dp_.queue(i).fifo.size();
    for (const auto& ev : q_.pending())
      if (std::holds_alternative<ActArrival>(ev.action)) ++in_flight;
    out.created = total_created_;
    out.delivered = total_delivered_;
    out.dropped = total_dropped_;
    out.in_flight = in_flight;

    bool conserved = total_created_ == total_delivered_ + total_dropped_ + in_flight;

    MetricsReport rep;
    rep.reconfig_samples = pairing_.samples();
    rep.incomplete_episodes = pairing_.incomplete();
    if (!rep.reconfig_samples.empty()) {
      std::vector<double> durs;
      durs.reserve(rep.reconfig_samples.size());
      for (const auto& s : rep.reconfig_samples) durs.push_back(to_seconds(s.duration));
      rep.reconfig_pmf = pmf(durs, 0.010);
    }
    for (auto& f : flows_) rep.flows[f.def.name] = f.stats;
    rep.flows["control"] = control_stats_;
    rep.conservation_ok = conserved;

    const double total_s = to_seconds(end);
    double onu_off = to_seconds(power_track_[pair_onu_.v].off_total);
    double lc_off = to_seconds(power_track_[pair_lc_.v].off_total);
    out.pair_off_s = std::min(onu_off, lc_off);
    rep.eta = energy_report(scn_.power, out.pair_off_s, total_s);

    emit(RecEnd{end, total_created_, total_delivered_, total_dropped_, in_flight});

    for (auto& e : episodes_) out.episodes.push_back(e.rec);
    out.windows = windows_;
    for (auto& f : flows_) out.flows.push_back(f.def);
    out.report = std::move(rep);
    out.log = std::move(log_);
    return out;
  }

  struct PowerTrack {
    PowerPhase phase = PowerPhase::On;
    SimTime since = 0;
    SimTime off_total = 0;
  };

  Scenario scn_;
  RunOptions opt_;
  Topology topo_;
  Dataplane dp_;
  Rng rng_;
  SimTime t_end_;

  EventQueue<Action> q_;
  std::vector<ControlMessage> msgs_;
  std::vector<FlowRuntime> flows_;
  std::vector<VlanPath> live_vlans_;
  std::map<Vlan, VlanPath> original_paths_;
  std::map<Vlan, LinkId> monitor_links_;
  std::vector<EpisodeState> episodes_;
  std::vector<StableWindow> windows_;
  Vlan window_vlan_ = 0;

  NodeId lit_node_, sdn_node_, tap_, pair_onu_, pair_lc_;
  LinkId pair_tunnel_;
  SimTime install_latency_ = 0, d_link_ = 0, guard_ = 0, transition_ = 0;

  ControllerState lit_state_;
  PairState pair_state_ = PairState::Awake;
  std::uint32_t last_sleep_episode_ = kNoEpisode;

  TapPairing pairing_;
  FlowStats control_stats_;
  std::uint64_t total_created_ = 0, total_delivered_ = 0, total_dropped_ = 0;
  std::vector<std::uint32_t> flushed_skip_;
  std::map<std::uint32_t, PowerTrack> power_track_;
  std::map<std::uint64_t, LinkId> ctl_routes_;

  EventLog log_;
  std::map<std::string, std::vector<FlowEntry>> initial_tables_;
};

}  // namespace fhsim
