#include <cmath>
#include <vector>

#include "convoy/error.hpp"
#include "convoy/random.hpp"
#include "convoy/topology.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace convoy;
using namespace convoy::topo;

namespace {

Vec3 at_bearing(double deg, double r = 10.0) {
  return {r * std::cos(deg_to_rad(deg)), r * std::sin(deg_to_rad(deg)), 1.5};
}

// Leader 0 at the origin plus periphery vehicles 1.. at the given bearings.
GroupTopology star(const std::vector<double>& bearings) {
  GroupTopology t = init_group(0, {0, 0, 1.5}, 1);
  VehicleId id = 1;
  for (double b : bearings) t = admit(t, id++, at_bearing(b)).topology;
  return t;
}

void check_partition(const GroupTopology& t) {
  std::vector<double> bearings;
  std::vector<VehicleId> ids;
  const Vec3 lp = t.members.at(t.leader_id).position;
  for (VehicleId p : t.with_role(Role::Periphery)) {
    ids.push_back(p);
    bearings.push_back(bearing_deg(lp, t.members.at(p).position));
  }
  if (ids.empty()) {
    CHECK(t.sectors.empty());
    return;
  }
  const auto expect = oracle::bisector_sectors(bearings);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const Sector s = t.sectors.at(ids[k]);
    CHECK(s.width_deg == doctest::Approx(expect[k].second).epsilon(1e-12));
    CHECK(std::abs(wrap_deg(s.start_deg - expect[k].first)) <= 1e-9);
  }
  CHECK(std::abs(t.sector_sum() - 360.0) <= kSectorSumTolerance);
}

}  // namespace

TEST_CASE("founding a group") {
  const auto t = init_group(7, {1, 2, 0}, 99);
  CHECK(t.leader_id == 7);
  CHECK(t.group_id == 99);
  CHECK(t.version == 1);
  CHECK(t.members.size() == 1);
  CHECK(t.role_of(7) == Role::Leader);
  CHECK(t.role_of(8) == Role::Free);
  CHECK(t.sectors.empty());
  CHECK(t.violations().empty());
}

TEST_CASE("sector examples") {
  const Vec3 o{0, 0, 0};
  const auto one = assign_sectors(o, {{5, at_bearing(30)}});
  CHECK(one.at(5).width_deg == 360.0);
  const auto four =
      assign_sectors(o, {{1, at_bearing(0)}, {2, at_bearing(90)}, {3, at_bearing(180)}, {4, at_bearing(270)}});
  for (const auto& [id, s] : four) CHECK(s.width_deg == doctest::Approx(90.0));
  CHECK(four.at(1).start_deg == doctest::Approx(315.0));
  const auto two = assign_sectors(o, {{1, at_bearing(0)}, {2, at_bearing(90)}});
  CHECK(two.at(1).width_deg == doctest::Approx(180.0));
  CHECK(two.at(2).width_deg == doctest::Approx(180.0));
  CHECK(two.at(2).start_deg == doctest::Approx(45.0));
  CHECK(two.at(1).start_deg == doctest::Approx(225.0));
  CHECK(assign_sectors(o, {}).empty());
}

TEST_CASE("random partitions match the bisector oracle") {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(uniform_int(rng, 0, 9));
    std::vector<std::pair<VehicleId, Vec3>> per;
    std::vector<double> bearings;
    for (std::size_t k = 0; k < n; ++k) {
      const double b = uniform(rng, 0, 360);
      per.emplace_back(static_cast<VehicleId>(k + 1), at_bearing(b, uniform(rng, 2, 50)));
      bearings.push_back(bearing_deg({0, 0, 1.5}, per.back().second));
    }
    const auto got = assign_sectors({0, 0, 1.5}, per);
    const auto expect = oracle::bisector_sectors(bearings);
    double sum = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const Sector s = got.at(static_cast<VehicleId>(k + 1));
      CHECK(s.width_deg == doctest::Approx(expect[k].second).epsilon(1e-12));
      CHECK(std::abs(wrap_deg(s.start_deg - expect[k].first)) <= 1e-9);
      sum += s.width_deg;
    }
    CHECK(std::abs(sum - 360.0) <= 1e-9);
  }
}

TEST_CASE("admission") {
  auto t = init_group(0, {0, 0, 1.5}, 1);
  const auto first = admit(t, 1, at_bearing(10));
  CHECK(first.admitted);
  CHECK(first.topology.version == 2);
  CHECK(first.topology.sectors.at(1).width_deg == 360.0);
  CHECK(first.topology.role_of(1) == Role::Periphery);

  const auto four = star({0, 90, 180, 270});
  const auto five = admit(four, 9, at_bearing(45));
  CHECK(five.admitted);
  CHECK(five.converted_to_idle.empty());
  CHECK(five.topology.sectors.size() == 5);
  CHECK(five.topology.version == four.version + 1);
  check_partition(five.topology);
  CHECK(five.topology.violations().empty());

  const auto again = admit(five.topology, 9, at_bearing(45));
  CHECK_FALSE(again.admitted);
  CHECK(again.topology.version == five.topology.version);
  CHECK(again.topology.sectors == five.topology.sectors);
}

TEST_CASE("a shadowed periphery becomes idle and forwards") {
  const auto t = star({0, 120});
  // Newcomer further out on almost the same bearing as vehicle 1.
  const auto out = admit(t, 5, at_bearing(2, 25));
  REQUIRE(out.converted_to_idle == std::vector<VehicleId>{1});
  const auto& g = out.topology;
  CHECK(g.role_of(1) == Role::Idle);
  CHECK(g.forward_links.at(1) == ForwardLink{5, 0});
  CHECK(g.sectors.count(1) == 0);
  CHECK(g.violations().empty());
  check_partition(g);
  // A bearing outside the tolerance leaves everyone in place.
  CHECK(admit(t, 6, at_bearing(10)).converted_to_idle.empty());
  TopologyConfig wide;
  wide.shadow_tolerance_deg = 15;
  CHECK(admit(t, 6, at_bearing(10), wide).converted_to_idle == std::vector<VehicleId>{1});
}

TEST_CASE("periphery with an attached idle leaves") {
  auto t = admit(star({0, 120, 240}), 5, at_bearing(1, 30)).topology;
  REQUIRE(t.role_of(1) == Role::Idle);
  const auto before = t.sectors.at(5);
  const auto out = remove_member(t, 5);
  REQUIRE(out.promoted_idle == VehicleId{1});
  CHECK(out.topology.role_of(1) == Role::Periphery);
  CHECK(out.topology.sectors.at(1) == before);
  CHECK(out.topology.sector_sum() == doctest::Approx(360.0));
  CHECK(out.topology.forward_links.empty());
  CHECK(out.topology.version == t.version + 1);
  CHECK(out.topology.violations().empty());
}

TEST_CASE("periphery without an idle leaves") {
  const auto t = star({0, 90, 180, 270});
  const auto out = remove_member(t, 2);
  CHECK_FALSE(out.promoted_idle);
  CHECK(out.topology.sectors.size() == 3);
  check_partition(out.topology);
  CHECK(out.topology.violations().empty());
}

TEST_CASE("leader leaves") {
  GroupTopology t = init_group(0, {0, 0, 1.5}, 1);
  t = admit(t, 1, {12, 0, 1.5}).topology;
  t = admit(t, 2, {-5, 0, 1.5}).topology;
  const auto out = remove_member(t, 0);
  CHECK(out.new_leader == VehicleId{2});
  CHECK(out.topology.leader_id == 2);
  CHECK(out.topology.with_role(Role::Leader).size() == 1);
  CHECK(out.topology.violations().empty());
  check_partition(out.topology);

  // Equidistant successors: smallest id wins.
  GroupTopology tie = init_group(0, {0, 0, 1.5}, 1);
  tie = admit(tie, 4, {10, 0, 1.5}).topology;
  tie = admit(tie, 3, {-10, 0, 1.5}).topology;
  CHECK(remove_member(tie, 0).new_leader == VehicleId{3});

  const auto alone = remove_member(init_group(0, {}, 1), 0);
  CHECK(alone.dissolved);
  CHECK(alone.topology.members.empty());
}

TEST_CASE("leader leaves and its successor had an idle behind it") {
  GroupTopology t = init_group(0, {0, 0, 1.5}, 1);
  t = admit(t, 1, {8, 0, 1.5}).topology;
  t = admit(t, 2, {20, 0.1, 1.5}).topology;  // shadows 1
  t = admit(t, 3, {-15, 0, 1.5}).topology;
  REQUIRE(t.role_of(1) == Role::Idle);
  const auto out = remove_member(t, 0);
  CHECK(out.new_leader == VehicleId{1});
  CHECK(out.topology.violations().empty());
  check_partition(out.topology);
}

TEST_CASE("idle leaves and unknown leaver") {
  auto t = admit(star({0, 180}), 5, at_bearing(0.5, 30)).topology;
  REQUIRE(t.role_of(1) == Role::Idle);
  const auto out = remove_member(t, 1);
  CHECK(out.topology.forward_links.empty());
  CHECK(out.topology.sectors == t.sectors);
  CHECK(out.topology.violations().empty());
  try {
    remove_member(t, 42);
    FAIL("expected a membership error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Membership);
  }
}

TEST_CASE("random admit and remove sequences keep every invariant") {
  Rng rng(77);
  for (int run = 0; run < 50; ++run) {
    GroupTopology t = init_group(0, {0, 0, 1.5}, 1);
    VehicleId next = 1;
    for (int step = 0; step < 60; ++step) {
      const std::uint64_t v0 = t.version;
      if (t.members.size() < 2 || uniform01(rng) < 0.6) {
        const Vec3 p{uniform(rng, -60, 60), uniform(rng, -8, 8), 1.5};
        if ((p - t.members.at(t.leader_id).position).norm() < 0.5) continue;
        t = admit(t, next++, p).topology;
      } else {
        auto it = t.members.begin();
        std::advance(it, uniform_int(rng, 0, static_cast<std::int64_t>(t.members.size()) - 1));
        const auto out = remove_member(t, it->first);
        if (out.dissolved) break;
        t = out.topology;
      }
      CHECK(t.version == v0 + 1);
      const auto v = t.violations();
      CHECK(v.empty());
      if (!v.empty()) break;
    }
  }
}

TEST_CASE("violations detect broken topologies") {
  auto t = star({0, 90});
  t.sectors.at(1).width_deg += 1e-6;
  CHECK_FALSE(t.violations().empty());
  auto two = star({0});
  two.members.at(1).role = Role::Leader;
  CHECK_FALSE(two.violations().empty());
  auto orphan = star({0});
  orphan.members[9] = Member{9, Role::Idle, {}};
  CHECK_FALSE(orphan.violations().empty());
}
