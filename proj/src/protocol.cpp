#include "convoy/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "convoy/error.hpp"
#include "convoy/text.hpp"

namespace convoy::topo {

namespace {

// Hard cap on link-layer attempts; the final attempt always gets through so
// that a reliable send really is reliable for any drop probability below 1.
constexpr int kMaxArqAttempts = 64;
constexpr std::uint32_t kMaxDeferrals = 100000;

}  // namespace

const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::JoinRequest: return "JoinRequest";
    case MessageKind::JoinAdmit: return "JoinAdmit";
    case MessageKind::LeaveRequest: return "LeaveRequest";
    case MessageKind::TopologyUpdate: return "TopologyUpdate";
    case MessageKind::SensingData: return "SensingData";
    case MessageKind::DecisionData: return "DecisionData";
    case MessageKind::ControlData: return "ControlData";
  }
  return "?";
}

const char* to_string(TraceKind k) {
  switch (k) {
    case TraceKind::JoinRequest: return "JoinRequest";
    case TraceKind::JoinAdmit: return "JoinAdmit";
    case TraceKind::LeaveRequest: return "LeaveRequest";
    case TraceKind::TopologyUpdate: return "TopologyUpdate";
    case TraceKind::JoinTimeout: return "JoinTimeout";
  }
  return "?";
}

void HarnessConfig::validate() const {
  if (!(delay_min_s >= 0.0) || !(delay_max_s >= delay_min_s) || !std::isfinite(delay_max_s))
    fail(ErrorCode::Config, "network delay range must satisfy 0 <= min <= max");
  if (!(drop_prob >= 0.0 && drop_prob < 1.0)) fail(ErrorCode::Config, "drop probability must lie in [0, 1)");
  if (!(arq_timeout_s > 0.0) || !std::isfinite(arq_timeout_s)) fail(ErrorCode::Config, "arq timeout must be positive");
}

NetworkHarness::NetworkHarness(HarnessConfig cfg) : cfg_(cfg), rng_(derive_rng(cfg.seed, 0x4e4554)) { cfg_.validate(); }

double NetworkHarness::delay() {
  if (cfg_.delay_max_s == cfg_.delay_min_s) return cfg_.delay_min_s;
  return uniform(rng_, cfg_.delay_min_s, cfg_.delay_max_s);
}

void NetworkHarness::push(double at, Payload p) { queue_.push(Event{at, seq_++, std::move(p)}); }

bool NetworkHarness::send_once(VehicleId to, const ProtocolMessage& msg, double at) {
  ++sent_;
  if (cfg_.drop_prob > 0.0 && bernoulli(rng_, cfg_.drop_prob)) {
    ++dropped_;
    return false;
  }
  push(at + delay(), Delivery{to, msg});
  return true;
}

std::size_t NetworkHarness::send_reliable(VehicleId to, const ProtocolMessage& msg, double at) {
  std::size_t delivered = 0;
  for (int k = 0; k < kMaxArqAttempts; ++k) {
    const double t = at + k * cfg_.arq_timeout_s;
    const bool last = k + 1 == kMaxArqAttempts;
    ++sent_;
    if (!last && cfg_.drop_prob > 0.0 && bernoulli(rng_, cfg_.drop_prob)) {
      ++dropped_;
      continue;
    }
    push(t + delay(), Delivery{to, msg});
    ++delivered;
    // A lost acknowledgement makes the sender try again: the receiver sees a duplicate.
    if (last || cfg_.drop_prob == 0.0 || !bernoulli(rng_, cfg_.drop_prob)) break;
  }
  return delivered;
}

void NetworkHarness::set_timer(VehicleId vehicle, std::uint64_t token, double at) { push(at, Timer{vehicle, token}); }

void NetworkHarness::schedule_command(Command cmd, double at) { push(at, cmd); }

std::optional<double> NetworkHarness::next_time() const {
  if (queue_.empty()) return std::nullopt;
  return queue_.top().time;
}

std::optional<NetworkHarness::Event> NetworkHarness::pop_due(double until) {
  if (queue_.empty() || queue_.top().time > until) return std::nullopt;
  Event ev = queue_.top();
  queue_.pop();
  now_ = std::max(now_, ev.time);
  if (const auto* d = std::get_if<Delivery>(&ev.payload)) delivered_bytes_ += d->msg.data_bytes;
  return ev;
}

std::string trace_csv(const std::vector<TraceEntry>& trace) {
  std::string out = "time_s,vehicle_id,role_before,role_after,msg_kind,topology_version\n";
  for (const auto& e : trace) {
    out += format_double(e.time);
    out += ',' + std::to_string(e.vehicle) + ',' + to_string(e.before) + ',' + to_string(e.after) + ',' +
           to_string(e.kind) + ',' + std::to_string(e.version) + '\n';
  }
  return out;
}

void ProtocolConfig::validate() const {
  if (!(join_timeout_s > 0.0) || !std::isfinite(join_timeout_s)) fail(ErrorCode::Config, "join timeout must be positive");
  if (join_retries < 0) fail(ErrorCode::Config, "join retries must be >= 0");
  if (!(radio_range_m > 0.0)) fail(ErrorCode::Config, "radio range must be positive");
  if (!(topology.shadow_tolerance_deg >= 0.0 && topology.shadow_tolerance_deg < 180.0))
    fail(ErrorCode::Config, "shadow tolerance must lie in [0, 180)");
  network.validate();
}

ProtocolSim::ProtocolSim(ProtocolConfig cfg) : cfg_(cfg), net_(cfg.network) { cfg_.validate(); }

VehicleId ProtocolSim::add_vehicle(Vec3 position) {
  Agent a;
  a.id = static_cast<VehicleId>(agents_.size());
  a.position = position;
  agents_.push_back(a);
  return a.id;
}

ProtocolSim::Agent& ProtocolSim::agent(VehicleId id) {
  if (id >= agents_.size()) fail(ErrorCode::InvalidArgument, "unknown vehicle " + std::to_string(id));
  return agents_[id];
}

const ProtocolSim::Agent& ProtocolSim::agent(VehicleId id) const {
  if (id >= agents_.size()) fail(ErrorCode::InvalidArgument, "unknown vehicle " + std::to_string(id));
  return agents_[id];
}

void ProtocolSim::set_position(VehicleId id, Vec3 position) { agent(id).position = position; }
Vec3 ProtocolSim::position(VehicleId id) const { return agent(id).position; }
Role ProtocolSim::role(VehicleId id) const { return agent(id).role; }

std::optional<GroupId> ProtocolSim::group_of(VehicleId id) const {
  const auto& a = agent(id);
  if (a.role == Role::Free || !a.view) return std::nullopt;
  return a.view->group_id;
}

std::uint64_t ProtocolSim::local_version(VehicleId id) const {
  const auto& a = agent(id);
  return a.view ? a.view->version : 0;
}

bool ProtocolSim::join_pending(VehicleId id) const { return agent(id).join_pending; }
bool ProtocolSim::leave_pending(VehicleId id) const { return agent(id).leave_pending; }

std::vector<GroupTopology> ProtocolSim::groups() const {
  std::vector<GroupTopology> out;
  for (const auto& a : agents_)
    if (a.role == Role::Leader && a.view) out.push_back(*a.view);
  return out;
}

void ProtocolSim::record(const Agent& a, Role before, TraceKind kind, std::uint64_t version) {
  TraceEntry e{now_, a.id, before, a.role, kind, version};
  trace_.push_back(e);
  if (sink_) sink_->push_back(e);
}

void ProtocolSim::request_join(VehicleId id, double at) {
  agent(id);
  if (at < now_) fail(ErrorCode::InvalidArgument, "join scheduled in the past");
  net_.schedule_command({NetworkHarness::Command::Kind::Join, id}, at);
}

void ProtocolSim::request_leave(VehicleId id, double at) {
  agent(id);
  if (at < now_) fail(ErrorCode::InvalidArgument, "leave scheduled in the past");
  net_.schedule_command({NetworkHarness::Command::Kind::Leave, id}, at);
}

void ProtocolSim::send_data(VehicleId from, VehicleId to, MessageKind kind, std::size_t bytes) {
  if (kind != MessageKind::SensingData && kind != MessageKind::DecisionData && kind != MessageKind::ControlData)
    fail(ErrorCode::InvalidArgument, "send_data carries data messages only");
  agent(from);
  agent(to);
  ProtocolMessage m;
  m.kind = kind;
  m.sender = from;
  m.receiver = to;
  m.data_bytes = bytes;
  net_.send_once(to, m, now_);
}

std::size_t ProtocolSim::send_join_requests(Agent& a) {
  ProtocolMessage m;
  m.kind = MessageKind::JoinRequest;
  m.sender = a.id;
  m.position = a.position;
  m.request_id = a.request_id;
  std::size_t n = 0;
  for (const auto& other : agents_) {
    if (other.id == a.id || other.role != Role::Leader) continue;
    if ((other.position - a.position).norm() > cfg_.radio_range_m) continue;
    net_.send_once(other.id, m, now_);
    ++n;
  }
  ++a.join_token;
  net_.set_timer(a.id, a.join_token, now_ + cfg_.join_timeout_s);
  record(a, a.role, TraceKind::JoinRequest, 0);
  return n;
}

std::size_t ProtocolSim::broadcast_join(VehicleId id) {
  Agent& a = agent(id);
  if (a.role != Role::Free) fail(ErrorCode::Protocol, "vehicle " + std::to_string(id) + " is not free");
  if (a.join_pending) fail(ErrorCode::Protocol, "vehicle " + std::to_string(id) + " already has a join in progress");
  a.join_pending = true;
  a.join_expired = false;
  a.retries_left = cfg_.join_retries;
  a.request_id = next_request_id_++;
  return send_join_requests(a);
}

GroupTopology ProtocolSim::init_group(VehicleId id) {
  Agent& a = agent(id);
  if (a.role != Role::Free || !a.join_pending || !a.join_expired)
    fail(ErrorCode::Protocol, "init_group for vehicle " + std::to_string(id) + " before its join timer expired");
  a.join_pending = false;
  a.join_expired = false;
  ++a.join_token;
  const GroupId gid = (static_cast<GroupId>(a.id) << 32) | ++a.groups_founded;
  const Role before = a.role;
  a.view = topo::init_group(a.id, a.position, gid);
  a.role = Role::Leader;
  a.seen[gid] = a.view->version;
  a.successor.erase(gid);
  record(a, before, TraceKind::JoinTimeout, a.view->version);
  return *a.view;
}

void ProtocolSim::start_leave(Agent& a) {
  a.leave_pending = true;
  if (a.role == Role::Leader) {
    leave_as_authority(a, *a.view);
    return;
  }
  ProtocolMessage m;
  m.kind = MessageKind::LeaveRequest;
  m.sender = a.id;
  m.receiver = a.view->leader_id;
  m.group = a.view->group_id;
  net_.send_reliable(a.view->leader_id, m, now_);
}

std::vector<TraceEntry> ProtocolSim::step(double until) {
  if (until < now_) fail(ErrorCode::InvalidArgument, "protocol time must be monotone");
  std::vector<TraceEntry> out;
  sink_ = &out;
  try {
    while (auto ev = net_.pop_due(until)) {
      now_ = ev->time;
      handle(*ev);
    }
  } catch (...) {
    sink_ = nullptr;
    throw;
  }
  sink_ = nullptr;
  now_ = until;
  return out;
}

std::vector<TraceEntry> ProtocolSim::run_until_quiescent(double max_time) {
  std::vector<TraceEntry> out;
  while (auto t = net_.next_time()) {
    if (*t > max_time) break;
    auto part = step(*t);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

void ProtocolSim::handle(const NetworkHarness::Event& ev) {
  if (const auto* d = std::get_if<NetworkHarness::Delivery>(&ev.payload)) {
    on_message(agent(d->to), d->msg);
  } else if (const auto* t = std::get_if<NetworkHarness::Timer>(&ev.payload)) {
    on_timer(agent(t->vehicle), t->token);
  } else {
    const auto& c = std::get<NetworkHarness::Command>(ev.payload);
    on_command(agent(c.vehicle), c.kind);
  }
}

void ProtocolSim::on_command(Agent& a, NetworkHarness::Command::Kind kind) {
  if (kind == NetworkHarness::Command::Kind::Join) {
    if (a.role != Role::Free || a.join_pending) {
      ++rejected_commands_;
      return;
    }
    broadcast_join(a.id);
  } else {
    if (a.role == Role::Free || a.leave_pending) {
      ++rejected_commands_;
      return;
    }
    start_leave(a);
  }
}

void ProtocolSim::on_timer(Agent& a, std::uint64_t token) {
  if (!a.join_pending || token != a.join_token) return;
  if (a.retries_left > 0) {
    --a.retries_left;
    send_join_requests(a);
    return;
  }
  a.join_expired = true;
  init_group(a.id);
}

void ProtocolSim::on_message(Agent& a, const ProtocolMessage& msg) {
  switch (msg.kind) {
    case MessageKind::JoinRequest: on_join_request(a, msg); break;
    case MessageKind::LeaveRequest: on_leave_request(a, msg); break;
    case MessageKind::JoinAdmit:
    case MessageKind::TopologyUpdate: on_snapshot(a, msg); break;
    default: break;  // data traffic is only counted
  }
}

void ProtocolSim::on_join_request(Agent& a, const ProtocolMessage& msg) {
  if (a.role != Role::Leader || !a.view) return;
  const auto out = admit(*a.view, msg.sender, msg.position, cfg_.topology);
  ProtocolMessage reply;
  reply.kind = MessageKind::JoinAdmit;
  reply.sender = a.id;
  reply.receiver = msg.sender;
  reply.group = out.topology.group_id;
  reply.request_id = msg.request_id;
  reply.topology = std::make_shared<const GroupTopology>(out.topology);
  if (!out.admitted) {
    net_.send_reliable(msg.sender, reply, now_);
    return;
  }
  a.view = out.topology;
  a.seen[a.view->group_id] = a.view->version;
  record(a, Role::Leader, TraceKind::JoinAdmit, a.view->version);
  net_.send_reliable(msg.sender, reply, now_);
  publish(a, out.topology, std::nullopt);
}

void ProtocolSim::route_leave(Agent& a, const ProtocolMessage& msg) {
  ProtocolMessage fwd = msg;
  const auto it = a.successor.find(msg.group);
  if (it != a.successor.end()) {
    if (!it->second) return;  // group dissolved, nothing left to leave
    fwd.receiver = *it->second;
    net_.send_reliable(*it->second, fwd, now_);
    return;
  }
  // Authority is on its way to this vehicle; try again later.
  if (++fwd.deferrals > kMaxDeferrals) {
    ++undeliverable_;
    return;
  }
  net_.send_reliable(a.id, fwd, now_ + cfg_.network.arq_timeout_s);
}

void ProtocolSim::on_leave_request(Agent& a, const ProtocolMessage& msg) {
  if (a.role != Role::Leader || !a.view || a.view->group_id != msg.group) {
    route_leave(a, msg);
    return;
  }
  if (!a.view->contains(msg.sender)) return;  // duplicate or already handled
  if (msg.sender == a.id) {
    leave_as_authority(a, *a.view);
    return;
  }
  const auto out = remove_member(*a.view, msg.sender);
  a.view = out.topology;
  a.seen[a.view->group_id] = a.view->version;
  record(a, Role::Leader, TraceKind::LeaveRequest, a.view->version);
  publish(a, out.topology, msg.sender);
}

void ProtocolSim::publish(Agent& leader, GroupTopology next, std::optional<VehicleId> extra_recipient) {
  ProtocolMessage m;
  m.kind = MessageKind::TopologyUpdate;
  m.sender = leader.id;
  m.group = next.group_id;
  m.topology = std::make_shared<const GroupTopology>(std::move(next));
  for (const auto& [id, member] : m.topology->members) {
    if (id == leader.id) continue;
    net_.send_reliable(id, m, now_);
  }
  if (extra_recipient && !m.topology->contains(*extra_recipient) && *extra_recipient != leader.id)
    net_.send_reliable(*extra_recipient, m, now_);
}

void ProtocolSim::leave_as_authority(Agent& a, const GroupTopology& authority) {
  const auto out = remove_member(authority, a.id);
  const GroupId gid = authority.group_id;
  a.seen[gid] = out.topology.version;
  if (out.dissolved) {
    a.successor[gid] = std::nullopt;
  } else {
    a.successor[gid] = out.topology.leader_id;
    publish(a, out.topology, std::nullopt);
  }
  if (a.view && a.view->group_id == gid) {
    const Role before = a.role;
    a.view.reset();
    a.role = Role::Free;
    a.leave_pending = false;
    record(a, before, TraceKind::LeaveRequest, out.topology.version);
  }
}

void ProtocolSim::adopt(Agent& a, const GroupTopology& snapshot, TraceKind kind) {
  const Role before = a.role;
  const std::uint64_t prev = a.view && a.view->group_id == snapshot.group_id ? a.view->version : 0;
  if (prev != 0 && snapshot.version <= prev) ++version_regressions_;
  a.view = snapshot;
  a.role = snapshot.role_of(a.id);
  a.successor.erase(snapshot.group_id);
  record(a, before, kind, snapshot.version);
  if (a.role == Role::Leader && a.leave_pending) leave_as_authority(a, *a.view);
}

void ProtocolSim::on_snapshot(Agent& a, const ProtocolMessage& msg) {
  if (!msg.topology) return;
  const GroupTopology& snap = *msg.topology;
  const GroupId gid = snap.group_id;
  auto& seen = a.seen[gid];
  if (snap.version <= seen) return;  // stale or duplicate
  seen = snap.version;

  if (a.role != Role::Free && a.view && a.view->group_id == gid) {
    if (snap.contains(a.id)) {
      adopt(a, snap, TraceKind::TopologyUpdate);
    } else {
      const Role before = a.role;
      a.view.reset();
      a.role = Role::Free;
      a.leave_pending = false;
      record(a, before, TraceKind::TopologyUpdate, snap.version);
    }
    return;
  }
  if (!snap.contains(a.id)) return;
  // The update broadcast may overtake the admit; either one completes the join.
  if (a.role == Role::Free && a.join_pending) {
    a.join_pending = false;
    a.join_expired = false;
    ++a.join_token;
    adopt(a, snap, msg.kind == MessageKind::JoinAdmit ? TraceKind::JoinAdmit : TraceKind::TopologyUpdate);
    return;
  }
  // A group this vehicle is not committed to still lists it: withdraw.
  if (snap.leader_id == a.id) {
    leave_as_authority(a, snap);
    return;
  }
  ProtocolMessage m;
  m.kind = MessageKind::LeaveRequest;
  m.sender = a.id;
  m.receiver = snap.leader_id;
  m.group = gid;
  net_.send_reliable(snap.leader_id, m, now_);
}

InvariantReport ProtocolSim::check_invariants() const {
  InvariantReport rep;
  auto add = [&](std::string s) { rep.violations.push_back(std::move(s)); };
  std::map<VehicleId, std::vector<const Agent*>> holders;  // member -> leaders listing it
  std::set<GroupId> group_ids;
  for (const auto& a : agents_) {
    if (a.role != Role::Leader) continue;
    if (!a.view) {
      add("leader " + std::to_string(a.id) + " holds no topology");
      continue;
    }
    const auto& t = *a.view;
    if (t.leader_id != a.id) add("leader " + std::to_string(a.id) + " topology names " + std::to_string(t.leader_id));
    if (!group_ids.insert(t.group_id).second) add("group id " + std::to_string(t.group_id) + " led twice");
    for (auto& v : t.violations()) add("group " + std::to_string(t.group_id) + ": " + v);
    for (const auto& [id, m] : t.members) holders[id].push_back(&a);
  }
  for (const auto& a : agents_) {
    const auto it = holders.find(a.id);
    const std::size_t n = it == holders.end() ? 0 : it->second.size();
    const std::string who = "vehicle " + std::to_string(a.id);
    if (a.role == Role::Free) {
      if (n != 0) add(who + " is free but listed by " + std::to_string(n) + " group(s)");
      if (a.view) add(who + " is free but holds a topology");
      continue;
    }
    if (n != 1) {
      add(who + " (" + to_string(a.role) + ") listed by " + std::to_string(n) + " groups");
      continue;
    }
    const Agent& leader = *it->second.front();
    const auto& t = *leader.view;
    if (t.role_of(a.id) != a.role)
      add(who + " believes " + to_string(a.role) + ", leader records " + to_string(t.role_of(a.id)));
    if (!a.view || a.view->group_id != t.group_id)
      add(who + " holds a replica of another group");
    else if (a.view->version != t.version)
      add(who + " replica version " + std::to_string(a.view->version) + " vs leader " + std::to_string(t.version));
  }
  if (version_regressions_) add(std::to_string(version_regressions_) + " version regression(s)");
  if (undeliverable_) add(std::to_string(undeliverable_) + " undeliverable leave request(s)");
  return rep;
}

ProtocolStep handle_join(const GroupTopology& topology, const ProtocolMessage& request, const TopologyConfig& cfg) {
  if (request.kind != MessageKind::JoinRequest) fail(ErrorCode::Protocol, "handle_join expects a JoinRequest");
  auto out = admit(topology, request.sender, request.position, cfg);
  ProtocolStep step;
  step.topology = out.topology;
  auto snap = std::make_shared<const GroupTopology>(out.topology);
  ProtocolMessage reply;
  reply.kind = MessageKind::JoinAdmit;
  reply.sender = topology.leader_id;
  reply.receiver = request.sender;
  reply.group = topology.group_id;
  reply.request_id = request.request_id;
  reply.topology = snap;
  step.messages.push_back(reply);
  if (out.admitted) {
    ProtocolMessage upd;
    upd.kind = MessageKind::TopologyUpdate;
    upd.sender = topology.leader_id;
    upd.group = topology.group_id;
    upd.topology = snap;
    step.messages.push_back(upd);
  }
  return step;
}

ProtocolStep handle_leave(const GroupTopology& topology, VehicleId leaver) {
  auto out = remove_member(topology, leaver);
  ProtocolStep step;
  step.topology = out.topology;
  ProtocolMessage upd;
  upd.kind = MessageKind::TopologyUpdate;
  upd.sender = out.dissolved ? leaver : out.topology.leader_id;
  upd.group = topology.group_id;
  upd.topology = std::make_shared<const GroupTopology>(out.topology);
  step.messages.push_back(upd);
  return step;
}

FuzzReport fuzz_topology(const FuzzConfig& cfg) {
  if (cfg.vehicles == 0) fail(ErrorCode::Config, "fuzz needs at least one vehicle");
  if (cfg.max_burst == 0) fail(ErrorCode::Config, "fuzz burst size must be >= 1");
  ProtocolConfig pc;
  pc.network.drop_prob = cfg.drop_prob;
  pc.network.seed = cfg.seed;
  ProtocolSim sim(pc);
  Rng rng = derive_rng(cfg.seed, 0x46555a5a);
  for (std::size_t i = 0; i < cfg.vehicles; ++i)
    sim.add_vehicle({uniform(rng, 0.0, cfg.area_length_m), uniform(rng, 0.0, cfg.area_width_m), 0.0});

  FuzzReport rep;
  auto checkpoint = [&] {
    ++rep.quiescent_points;
    for (auto& v : sim.check_invariants().violations)
      rep.violations.push_back("t=" + format_double(sim.now()) + " " + v);
  };
  while (rep.events_applied < cfg.events) {
    const auto burst = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<std::int64_t>(cfg.max_burst)));
    for (std::size_t b = 0; b < burst && rep.events_applied < cfg.events; ++b) {
      const auto id = static_cast<VehicleId>(uniform_int(rng, 0, static_cast<std::int64_t>(cfg.vehicles) - 1));
      const double at = sim.now() + uniform(rng, 0.0, cfg.burst_window_s);
      if (sim.role(id) == Role::Free)
        sim.request_join(id, at);
      else
        sim.request_leave(id, at);
      ++rep.events_applied;
    }
    sim.run_until_quiescent(sim.now() + cfg.max_quiescence_s);
    if (!sim.quiescent()) {
      ++rep.quiescence_failures;
      break;
    }
    checkpoint();
    if (rep.violations.size() > 50) break;
  }
  rep.version_regressions = sim.version_regressions();
  rep.undeliverable = sim.undeliverable();
  rep.messages_sent = sim.network().sent();
  rep.messages_dropped = sim.network().dropped();
  rep.trace = sim.trace();
  return rep;
}

}  // namespace convoy::topo
