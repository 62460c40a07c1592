#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <variant>
#include <vector>

#include "convoy/random.hpp"
#include "convoy/topology.hpp"

namespace convoy::topo {

enum class MessageKind { JoinRequest, JoinAdmit, LeaveRequest, TopologyUpdate, SensingData, DecisionData, ControlData };
const char* to_string(MessageKind k);

struct ProtocolMessage {
  MessageKind kind = MessageKind::ControlData;
  VehicleId sender = 0;
  std::optional<VehicleId> receiver;  // nullopt: broadcast
  GroupId group = 0;
  std::uint64_t request_id = 0;       // JoinRequest / JoinAdmit pairing
  Vec3 position;                      // requester position on JoinRequest
  std::shared_ptr<const GroupTopology> topology;  // JoinAdmit / TopologyUpdate snapshot
  std::size_t data_bytes = 0;
  /// Times a leader-addressed message has been re-queued while its group's
  /// authority was in transit.
  std::uint32_t deferrals = 0;
};

struct HarnessConfig {
  double delay_min_s = 0.001;
  double delay_max_s = 0.005;
  double drop_prob = 0.0;
  /// Link-layer retransmission interval for unicast control messages.
  double arq_timeout_s = 0.02;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Simulated wireless medium with a single time-ordered queue. Broadcasts are
/// sent once; unicasts are retried by the link layer until acknowledged, so a
/// lost acknowledgement yields a duplicate delivery.
class NetworkHarness {
 public:
  struct Delivery {
    VehicleId to;
    ProtocolMessage msg;
  };
  struct Timer {
    VehicleId vehicle;
    std::uint64_t token;
  };
  struct Command {
    enum class Kind { Join, Leave } kind;
    VehicleId vehicle;
  };
  using Payload = std::variant<Delivery, Timer, Command>;

  struct Event {
    double time;
    std::uint64_t seq;
    Payload payload;
  };

  explicit NetworkHarness(HarnessConfig cfg = {});

  const HarnessConfig& config() const { return cfg_; }
  double now() const { return now_; }

  /// One attempt; returns false when the medium dropped it.
  bool send_once(VehicleId to, const ProtocolMessage& msg, double at);
  /// Returns the number of deliveries scheduled (>= 1).
  std::size_t send_reliable(VehicleId to, const ProtocolMessage& msg, double at);
  void set_timer(VehicleId vehicle, std::uint64_t token, double at);
  void schedule_command(Command cmd, double at);

  bool empty() const { return queue_.empty(); }
  std::size_t in_flight() const { return queue_.size(); }
  std::optional<double> next_time() const;
  /// Pops the earliest event if it is due at or before `until`.
  std::optional<Event> pop_due(double until);

  std::uint64_t sent() const { return sent_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t delivered_bytes() const { return delivered_bytes_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };
  double delay();
  void push(double at, Payload p);

  HarnessConfig cfg_;
  Rng rng_;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t sent_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t delivered_bytes_ = 0;
};

/// What a trace row records; the message kinds plus the join timeout.
enum class TraceKind { JoinRequest, JoinAdmit, LeaveRequest, TopologyUpdate, JoinTimeout };
const char* to_string(TraceKind k);

struct TraceEntry {
  double time;
  VehicleId vehicle;
  Role before;
  Role after;
  TraceKind kind;
  std::uint64_t version;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

std::string trace_csv(const std::vector<TraceEntry>& trace);

struct ProtocolConfig {
  double join_timeout_s = 0.2;
  int join_retries = 3;
  double radio_range_m = 300.0;
  TopologyConfig topology;
  HarnessConfig network;

  void validate() const;
};

struct InvariantReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// All vehicle state machines driven by one harness.
class ProtocolSim {
 public:
  explicit ProtocolSim(ProtocolConfig cfg = {});

  VehicleId add_vehicle(Vec3 position);
  void set_position(VehicleId id, Vec3 position);
  Vec3 position(VehicleId id) const;
  std::size_t vehicle_count() const { return agents_.size(); }

  /// Schedules a join attempt (broadcast of JoinRequest) or a leave at time `at`.
  void request_join(VehicleId id, double at);
  void request_leave(VehicleId id, double at);
  /// Opaque data message for load accounting; delivered unreliably.
  void send_data(VehicleId from, VehicleId to, MessageKind kind, std::size_t bytes);

  /// Sends one JoinRequest to every leader in radio range and starts the
  /// response timer. Returns the number of requests put on the air.
  std::size_t broadcast_join(VehicleId id);
  /// Founds a single-member group. Only legal once the last join timer has
  /// expired without an admission.
  GroupTopology init_group(VehicleId id);

  /// Delivers every event due at or before `until` and returns the transitions.
  std::vector<TraceEntry> step(double until);
  /// Runs until no message or timer is pending, or `max_time` passes.
  std::vector<TraceEntry> run_until_quiescent(double max_time);
  bool quiescent() const { return net_.empty(); }
  double now() const { return now_; }

  Role role(VehicleId id) const;
  std::optional<GroupId> group_of(VehicleId id) const;
  std::uint64_t local_version(VehicleId id) const;
  bool join_pending(VehicleId id) const;
  bool leave_pending(VehicleId id) const;
  /// The leader-held copy of every live group.
  std::vector<GroupTopology> groups() const;
  const std::vector<TraceEntry>& trace() const { return trace_; }
  const NetworkHarness& network() const { return net_; }
  std::uint64_t version_regressions() const { return version_regressions_; }
  std::uint64_t rejected_commands() const { return rejected_commands_; }
  std::uint64_t undeliverable() const { return undeliverable_; }

  InvariantReport check_invariants() const;

 private:
  struct Agent {
    VehicleId id = 0;
    Vec3 position;
    Role role = Role::Free;
    std::optional<GroupTopology> view;
    bool join_pending = false;
    int retries_left = 0;
    std::uint64_t join_token = 0;
    bool join_expired = false;
    std::uint64_t request_id = 0;
    bool leave_pending = false;
    std::uint32_t groups_founded = 0;
    std::map<GroupId, std::uint64_t> seen;  // highest snapshot version per group
    /// Where authority over a group went after this vehicle gave it up;
    /// nullopt when the group dissolved.
    std::map<GroupId, std::optional<VehicleId>> successor;
  };

  Agent& agent(VehicleId id);
  const Agent& agent(VehicleId id) const;
  void record(const Agent& a, Role before, TraceKind kind, std::uint64_t version);

  void handle(const NetworkHarness::Event& ev);
  void on_command(Agent& a, NetworkHarness::Command::Kind kind);
  void on_timer(Agent& a, std::uint64_t token);
  void on_message(Agent& a, const ProtocolMessage& msg);

  std::size_t send_join_requests(Agent& a);
  void start_leave(Agent& a);
  void on_join_request(Agent& a, const ProtocolMessage& msg);
  void on_leave_request(Agent& a, const ProtocolMessage& msg);
  void on_snapshot(Agent& a, const ProtocolMessage& msg);
  /// Applies a leader-side topology change and fans out the update.
  void publish(Agent& leader, GroupTopology next, std::optional<VehicleId> extra_recipient);
  void adopt(Agent& a, const GroupTopology& snapshot, TraceKind kind);
  /// Removes `a` from a group over which it holds authority and hands the
  /// group to the successor.
  void leave_as_authority(Agent& a, const GroupTopology& authority);
  void route_leave(Agent& a, const ProtocolMessage& msg);

  ProtocolConfig cfg_;
  NetworkHarness net_;
  double now_ = 0.0;
  std::vector<Agent> agents_;
  std::vector<TraceEntry> trace_;
  std::vector<TraceEntry>* sink_ = nullptr;
  std::uint64_t version_regressions_ = 0;
  std::uint64_t rejected_commands_ = 0;
  std::uint64_t undeliverable_ = 0;
  std::uint64_t next_request_id_ = 1;
};

/// Leader-side operations as pure functions returning the outgoing messages.
struct ProtocolStep {
  GroupTopology topology;
  std::vector<ProtocolMessage> messages;
};

ProtocolStep handle_join(const GroupTopology& topology, const ProtocolMessage& request, const TopologyConfig& cfg = {});
ProtocolStep handle_leave(const GroupTopology& topology, VehicleId leaver);

struct FuzzConfig {
  std::uint64_t seed = 1;
  std::size_t events = 1000;
  double drop_prob = 0.3;
  std::size_t vehicles = 24;
  double area_length_m = 200.0;
  double area_width_m = 14.0;
  std::size_t max_burst = 5;
  double burst_window_s = 0.05;
  double max_quiescence_s = 600.0;
};

struct FuzzReport {
  std::size_t events_applied = 0;
  std::size_t quiescent_points = 0;
  std::size_t quiescence_failures = 0;
  std::vector<std::string> violations;
  std::uint64_t version_regressions = 0;
  std::uint64_t undeliverable = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_dropped = 0;
  std::vector<TraceEntry> trace;

  bool ok() const {
    return quiescence_failures == 0 && violations.empty() && version_regressions == 0 &&
           undeliverable == 0;
  }
};

FuzzReport fuzz_topology(const FuzzConfig& cfg);

}  // namespace convoy::topo
