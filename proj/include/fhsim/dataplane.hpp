#pragma once

#include <climits>
#include <deque>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "fhsim/packet.hpp"
#include "fhsim/time.hpp"
#include "fhsim/topology.hpp"

namespace fhsim {

// Per-switch match-action table. Keys order priority descending within one
// (ingress, vlan) group so the first hit is the winning entry.
class FlowTable {
 public:
  void install(const FlowEntry& e) { entries_[e.match] = e.action; }

  bool remove(const FlowMatch& m) { return entries_.erase(m) > 0; }

  std::optional<FlowAction> lookup(LinkId ingress, Vlan vlan) const {
    auto it = entries_.lower_bound(FlowMatch{ingress, vlan, INT_MAX});
    if (it == entries_.end()) return std::nullopt;
    if (it->first.ingress != ingress || it->first.vlan != vlan) return std::nullopt;
    return it->second;
  }

  std::optional<FlowAction> exact(const FlowMatch& m) const {
    auto it = entries_.find(m);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  // Normalized view for set-equality checks.
  std::vector<FlowEntry> snapshot() const {
    std::vector<FlowEntry> out;
    out.reserve(entries_.size());
    for (const auto& [m, a] : entries_) out.push_back(FlowEntry{m, a});
    return out;
  }

  std::size_t size() const { return entries_.size(); }

 private:
  std::map<FlowMatch, FlowAction> entries_;
};

struct QueuedPacket {
  Packet packet;
  SimTime departure;
};

// FIFO drop-tail egress queue for one direction of one link. The occupancy
// covers every byte accepted and not yet fully serialized.
struct EgressQueue {
  LinkId link;
  std::uint8_t dir = 0;  // 0: a->b, 1: b->a
  std::uint64_t occupancy = 0;
  SimTime busy_until = 0;
  std::deque<QueuedPacket> fifo;
};

struct EnqueueAccepted {
  SimTime departure;
};
struct EnqueueDropped {};
using EnqueueResult = std::variant<EnqueueAccepted, EnqueueDropped>;

struct ForwardOutput {
  LinkId egress;
};
struct ForwardDrop {
  DropReason reason;
};
using ForwardResult = std::variant<ForwardOutput, ForwardDrop>;

// All mutable data-plane state of one run: power per device, tables per
// switch, one queue per link direction. Mutations happen in event order on
// the owning engine's thread.
class Dataplane {
 public:
  explicit Dataplane(const Topology& topo) : topo_(&topo) {
    power_.resize(topo.nodes().size());
    tables_.resize(topo.nodes().size());
    queues_.reserve(topo.links().size() * 2);
    for (const auto& l : topo.links()) {
      queues_.push_back(EgressQueue{l.id, 0, 0, 0, {}});
      queues_.push_back(EgressQueue{l.id, 1, 0, 0, {}});
    }
  }

  const Topology& topology() const { return *topo_; }

  PowerState& power(NodeId n) { return power_[n.v]; }
  const PowerState& power(NodeId n) const { return power_[n.v]; }

  FlowTable& table(NodeId n) { return tables_[n.v]; }
  const FlowTable& table(NodeId n) const { return tables_[n.v]; }

  // Queue for packets leaving `from` over `link`.
  std::uint32_t queue_index(LinkId link, NodeId from) const {
    const Link& l = topo_->link(link);
    return link.v * 2 + (l.a == from ? 0 : 1);
  }

  EgressQueue& queue(std::uint32_t idx) { return queues_[idx]; }
  const EgressQueue& queue(std::uint32_t idx) const { return queues_[idx]; }
  std::size_t queue_count() const { return queues_.size(); }

  NodeId queue_receiver(const EgressQueue& q) const {
    const Link& l = topo_->link(q.link);
    return q.dir == 0 ? l.b : l.a;
  }

  // Drop-tail admission. Departure = max(now, busy_until) + serialization;
  // wire propagation is added when the packet leaves the queue.
  EnqueueResult enqueue(std::uint32_t queue_idx, const Packet& pkt, SimTime now) {
    EgressQueue& q = queues_[queue_idx];
    const Link& l = topo_->link(q.link);
    if (q.occupancy + pkt.size > l.buffer_limit) return EnqueueDropped{};
    const SimTime start = std::max(now, q.busy_until);
    const SimTime departure = start + serialization_time(pkt.size, l.capacity_bps);
    q.busy_until = departure;
    q.occupancy += pkt.size;
    q.fifo.push_back(QueuedPacket{pkt, departure});
    return EnqueueAccepted{departure};
  }

  QueuedPacket pop_front(std::uint32_t queue_idx) {
    EgressQueue& q = queues_[queue_idx];
    QueuedPacket p = q.fifo.front();
    q.fifo.pop_front();
    q.occupancy -= p.packet.size;
    return p;
  }

  // Match-action decision at a switch, power gate included.
  ForwardResult forward(NodeId sw, LinkId ingress, Vlan vlan) const {
    if (!power_[sw.v].on()) return ForwardDrop{DropReason::DeviceOff};
    auto action = tables_[sw.v].lookup(ingress, vlan);
    if (!action) return ForwardDrop{DropReason::NoMatch};
    if (std::holds_alternative<DropAction>(*action)) return ForwardDrop{DropReason::Filtered};
    return ForwardOutput{std::get<OutputAction>(*action).egress};
  }

  // Starts a power transition. Returns the completion time; the caller is
  // responsible for scheduling the completion event and calling
  // finish_transition there.
  SimTime set_power(NodeId n, PowerDirection target, SimTime now, SimTime transition) {
    const Node& node = topo_->node(n);
    if (!is_sleepable_kind(node.kind))
      raise(Errc::UnknownDevice, "set_power on '" + node.label + "' which is not an onu/line card");
    PowerState& st = power_[n.v];
    if (st.transitioning())
      raise(Errc::TransitionInProgress, "'" + node.label + "' is mid transition until " +
                                            format_seconds(st.transition_until));
    const PowerPhase want = target == PowerDirection::Off ? PowerPhase::Off : PowerPhase::On;
    if (st.phase == want) return now;  // already there: no-op
    if (transition <= 0) {
      st.phase = want;
      st.transition_until = 0;
      return now;
    }
    st.phase = target == PowerDirection::Off ? PowerPhase::TurningOff : PowerPhase::TurningOn;
    st.transition_until = now + transition;
    return st.transition_until;
  }

  void finish_transition(NodeId n) {
    PowerState& st = power_[n.v];
    st.phase = st.phase == PowerPhase::TurningOff ? PowerPhase::Off : PowerPhase::On;
    st.transition_until = 0;
  }

 private:
  const Topology* topo_;
  std::vector<PowerState> power_;
  std::vector<FlowTable> tables_;
  std::vector<EgressQueue> queues_;
};

}  // namespace fhsim
