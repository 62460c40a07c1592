#include <cmath>
#include <vector>

#include "convoy/error.hpp"
#include "convoy/protocol.hpp"
#include "doctest.h"

using namespace convoy;
using namespace convoy::topo;

namespace {

ProtocolConfig fixed_delay(double d = 0.002) {
  ProtocolConfig c;
  c.network.delay_min_s = d;
  c.network.delay_max_s = d;
  return c;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

// Founds a group led by vehicle 0 and lets the others join one at a time.
ProtocolSim convoy_of(const std::vector<Vec3>& pos, ProtocolConfig cfg = fixed_delay()) {
  ProtocolSim sim(cfg);
  for (const auto& p : pos) sim.add_vehicle(p);
  sim.request_join(0, 0.0);
  sim.run_until_quiescent(10.0);
  for (VehicleId v = 1; v < pos.size(); ++v) {
    sim.request_join(v, sim.now());
    sim.run_until_quiescent(sim.now() + 10.0);
  }
  return sim;
}

}  // namespace

TEST_CASE("harness ordering and determinism") {
  HarnessConfig hc;
  hc.seed = 5;
  NetworkHarness a(hc), b(hc);
  ProtocolMessage m;
  for (int k = 0; k < 20; ++k) {
    a.send_once(1, m, 0.001 * k);
    b.send_once(1, m, 0.001 * k);
  }
  double last = 0;
  while (auto ea = a.pop_due(1.0)) {
    auto eb = b.pop_due(1.0);
    REQUIRE(eb);
    CHECK(ea->time == eb->time);
    CHECK(ea->seq == eb->seq);
    CHECK(ea->time >= last);
    last = ea->time;
  }
  CHECK(b.empty());
  // Equal times are delivered in submission order.
  HarnessConfig fixed;
  fixed.delay_min_s = fixed.delay_max_s = 0.0;
  NetworkHarness h(fixed);
  h.set_timer(3, 1, 1.0);
  h.set_timer(1, 2, 1.0);
  CHECK(std::get<NetworkHarness::Timer>(h.pop_due(2.0)->payload).vehicle == 3);
  CHECK(std::get<NetworkHarness::Timer>(h.pop_due(2.0)->payload).vehicle == 1);
}

TEST_CASE("reliable sends always arrive") {
  HarnessConfig hc;
  hc.drop_prob = 0.9;
  NetworkHarness h(hc);
  for (int k = 0; k < 200; ++k) CHECK(h.send_reliable(2, {}, 0.0) >= 1);
  hc.drop_prob = 1.0;
  CHECK(code_of([&] { NetworkHarness bad(hc); }) == ErrorCode::Config);
}

TEST_CASE("broadcast join counts leaders in range") {
  ProtocolConfig cfg = fixed_delay();
  ProtocolSim sim(cfg);
  const VehicleId joiner = sim.add_vehicle({0, 0, 0});
  std::vector<VehicleId> leaders;
  for (double b : {0.0, 120.0, 240.0})
    leaders.push_back(sim.add_vehicle({250 * std::cos(deg_to_rad(b)), 250 * std::sin(deg_to_rad(b)), 0}));
  const VehicleId far = sim.add_vehicle({1000, 0, 0});

  // No leaders yet: nothing goes on the air but the timer runs.
  CHECK(sim.broadcast_join(far) == 0);
  CHECK(sim.network().in_flight() == 1);
  CHECK(code_of([&] { sim.broadcast_join(far); }) == ErrorCode::Protocol);

  for (VehicleId l : leaders) sim.request_join(l, 0.0);
  sim.run_until_quiescent(5.0);
  for (VehicleId l : leaders) REQUIRE(sim.role(l) == Role::Leader);
  CHECK(sim.groups().size() == 4);  // the far vehicle founded its own group too

  const std::size_t before = sim.network().in_flight();
  CHECK(sim.broadcast_join(joiner) == 3);
  CHECK(sim.network().in_flight() == before + 4);
  CHECK(code_of([&] { sim.broadcast_join(leaders[0]); }) == ErrorCode::Protocol);
}

TEST_CASE("a free vehicle founds a group after its last timeout") {
  const ProtocolConfig cfg = fixed_delay();
  ProtocolSim sim(cfg);
  const VehicleId v = sim.add_vehicle({0, 0, 0});
  sim.broadcast_join(v);
  CHECK(code_of([&] { sim.init_group(v); }) == ErrorCode::Protocol);
  const auto trace = sim.run_until_quiescent(10.0);
  CHECK(sim.role(v) == Role::Leader);
  const double expect = (cfg.join_retries + 1) * cfg.join_timeout_s;
  REQUIRE(!trace.empty());
  CHECK(trace.back().kind == TraceKind::JoinTimeout);
  CHECK(trace.back().time == doctest::Approx(expect));
  CHECK(trace.back().version == 1);
  const auto g = sim.groups();
  REQUIRE(g.size() == 1);
  CHECK(g[0].members.size() == 1);
  CHECK(g[0].sectors.empty());
  CHECK(code_of([&] { sim.init_group(v); }) == ErrorCode::Protocol);
}

TEST_CASE("two silent free vehicles found two groups") {
  ProtocolSim sim(fixed_delay());
  sim.add_vehicle({0, 0, 0});
  sim.add_vehicle({10, 0, 0});
  sim.request_join(0, 0.0);
  sim.request_join(1, 0.0);
  sim.run_until_quiescent(10.0);
  const auto g = sim.groups();
  REQUIRE(g.size() == 2);
  CHECK(g[0].group_id != g[1].group_id);
  CHECK(sim.check_invariants().ok());
}

TEST_CASE("an admitted joiner never founds a group") {
  ProtocolSim sim = convoy_of({{0, 0, 0}});
  const VehicleId j = sim.add_vehicle({15, 2, 0});
  sim.broadcast_join(j);
  sim.run_until_quiescent(sim.now() + 10.0);
  CHECK(sim.role(j) == Role::Periphery);
  CHECK(sim.groups().size() == 1);
  CHECK(code_of([&] { sim.init_group(j); }) == ErrorCode::Protocol);
}

TEST_CASE("a join under zero loss completes within three hops") {
  const double d = 0.002;
  ProtocolSim sim = convoy_of({{0, 0, 0}, {12, 3, 0}}, fixed_delay(d));
  const VehicleId j = sim.add_vehicle({-9, -2, 0});
  const double t0 = sim.now();
  sim.request_join(j, t0);
  const auto trace = sim.run_until_quiescent(t0 + 10.0);
  REQUIRE(trace.size() == 4);
  CHECK(trace[0].kind == TraceKind::JoinRequest);
  CHECK(trace[1].vehicle == 0);
  CHECK(trace[1].kind == TraceKind::JoinAdmit);
  CHECK(trace[2].vehicle == j);
  CHECK(trace[2].after == Role::Periphery);
  CHECK(trace[3].vehicle == 1);
  CHECK(trace[3].kind == TraceKind::TopologyUpdate);
  for (const auto& e : trace) CHECK(e.time <= t0 + 2 * d + 1e-12);
  CHECK(sim.check_invariants().ok());
  CHECK(sim.local_version(j) == sim.local_version(0));
}

TEST_CASE("leaving") {
  ProtocolSim sim = convoy_of({{0, 0, 0}, {12, 0, 0}, {-8, 0, 0}, {0, 6, 0}});
  REQUIRE(sim.check_invariants().ok());
  sim.request_leave(1, sim.now());
  sim.run_until_quiescent(sim.now() + 10.0);
  CHECK(sim.role(1) == Role::Free);
  CHECK(sim.check_invariants().ok());
  // The leader goes: its nearest member (vehicle 3 at 6 m) takes over.
  sim.request_leave(0, sim.now());
  sim.run_until_quiescent(sim.now() + 10.0);
  CHECK(sim.role(0) == Role::Free);
  CHECK(sim.role(3) == Role::Leader);
  CHECK(sim.check_invariants().ok());
  // Leaving twice or leaving while free is rejected, not an error.
  const auto rejected = sim.rejected_commands();
  sim.request_leave(0, sim.now());
  sim.run_until_quiescent(sim.now() + 10.0);
  CHECK(sim.rejected_commands() == rejected + 1);
}

TEST_CASE("step rules") {
  ProtocolSim sim(fixed_delay());
  sim.add_vehicle({0, 0, 0});
  CHECK(sim.step(1.0).empty());
  CHECK(code_of([&] { sim.step(0.5); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { sim.request_join(0, 0.1); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { sim.role(9); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("same seed and inputs give the same trace") {
  auto run = [](std::uint64_t seed) {
    ProtocolConfig cfg;
    cfg.network.seed = seed;
    cfg.network.drop_prob = 0.3;
    ProtocolSim sim(cfg);
    for (int i = 0; i < 8; ++i) sim.add_vehicle({6.0 * i, 3.5 * (i % 3), 0});
    sim.request_join(0, 0.0);
    for (VehicleId i = 1; i < 8; ++i) sim.request_join(i, 1.0 + 0.01 * i);
    sim.request_leave(2, 3.0);
    sim.request_leave(0, 3.05);
    sim.run_until_quiescent(100.0);
    CHECK(sim.check_invariants().ok());
    return trace_csv(sim.trace());
  };
  CHECK(run(4) == run(4));
  CHECK(run(4) != run(5));
}

TEST_CASE("pure join and leave handlers") {
  GroupTopology t = init_group(0, {0, 0, 0}, 1);
  ProtocolMessage req;
  req.kind = MessageKind::JoinRequest;
  req.sender = 4;
  req.request_id = 17;
  req.position = {10, 0, 0};
  const auto step = handle_join(t, req);
  REQUIRE(step.messages.size() == 2);
  CHECK(step.messages[0].kind == MessageKind::JoinAdmit);
  CHECK(step.messages[0].receiver == VehicleId{4});
  CHECK(step.messages[0].request_id == 17);
  CHECK(step.messages[1].kind == MessageKind::TopologyUpdate);
  CHECK_FALSE(step.messages[1].receiver);
  CHECK(step.messages[1].topology->version == t.version + 1);
  CHECK(step.topology.sectors.at(4).width_deg == 360.0);

  // Re-admission re-sends the admit and changes nothing.
  const auto again = handle_join(step.topology, req);
  REQUIRE(again.messages.size() == 1);
  CHECK(again.messages[0].kind == MessageKind::JoinAdmit);
  CHECK(again.topology.version == step.topology.version);

  const auto left = handle_leave(step.topology, 4);
  CHECK(left.topology.version == step.topology.version + 1);
  REQUIRE(left.messages.size() == 1);
  CHECK(left.messages[0].kind == MessageKind::TopologyUpdate);
  CHECK(code_of([&] { handle_leave(step.topology, 99); }) == ErrorCode::Membership);
  ProtocolMessage wrong;
  wrong.kind = MessageKind::LeaveRequest;
  CHECK(code_of([&] { handle_join(t, wrong); }) == ErrorCode::Protocol);
}

TEST_CASE("data messages are counted") {
  ProtocolSim sim = convoy_of({{0, 0, 0}, {10, 0, 0}});
  const auto before = sim.network().delivered_bytes();
  sim.send_data(1, 0, MessageKind::SensingData, 1200);
  sim.run_until_quiescent(sim.now() + 1.0);
  CHECK(sim.network().delivered_bytes() == before + 1200);
  CHECK(code_of([&] { sim.send_data(1, 0, MessageKind::JoinRequest, 5); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("trace csv layout") {
  const std::vector<TraceEntry> t{{0.25, 3, Role::Free, Role::Leader, TraceKind::JoinTimeout, 1}};
  CHECK(trace_csv(t) ==
        "time_s,vehicle_id,role_before,role_after,msg_kind,topology_version\n0.25,3,Free,Leader,JoinTimeout,1\n");
}

TEST_CASE("fuzz under loss") {
  for (std::uint64_t seed : {1, 2, 3}) {
    FuzzConfig fc;
    fc.seed = seed;
    fc.events = 300;
    const auto rep = fuzz_topology(fc);
    INFO("seed " << seed << (rep.violations.empty() ? "" : " first: " + rep.violations.front()));
    CHECK(rep.ok());
    CHECK(rep.events_applied == 300);
    CHECK(rep.quiescent_points > 0);
    CHECK(rep.messages_dropped > 0);
  }
}
