#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "convoy/geometry.hpp"

namespace convoy::topo {

using VehicleId = std::uint32_t;
using GroupId = std::uint64_t;

enum class Role { Free, Leader, Periphery, Idle };
const char* to_string(Role r);

struct Member {
  VehicleId id = 0;
  Role role = Role::Periphery;
  Vec3 position;  // as reported when the member was admitted
};

/// Sensing sector in degrees, measured counter-clockwise from +x around the leader.
struct Sector {
  double start_deg = 0.0;
  double width_deg = 0.0;
  friend bool operator==(const Sector&, const Sector&) = default;
};

/// Idle member relaying between a periphery vehicle and the leader.
struct ForwardLink {
  VehicleId periphery = 0;
  VehicleId leader = 0;
  friend bool operator==(const ForwardLink&, const ForwardLink&) = default;
};

inline constexpr double kSectorSumTolerance = 1e-9;

struct GroupTopology {
  GroupId group_id = 0;
  VehicleId leader_id = 0;
  std::uint64_t version = 0;
  std::map<VehicleId, Member> members;  // includes the leader
  std::map<VehicleId, Sector> sectors;  // periphery vehicles only
  std::map<VehicleId, ForwardLink> forward_links;

  bool contains(VehicleId id) const { return members.count(id) != 0; }
  Role role_of(VehicleId id) const;
  std::vector<VehicleId> with_role(Role r) const;
  double sector_sum() const;

  /// Empty when every structural invariant holds, otherwise one line per violation.
  std::vector<std::string> violations() const;
};

struct TopologyConfig {
  /// A periphery vehicle whose bearing from the leader lies within this angle
  /// of a newcomer's bearing is shadowed and becomes idle.
  double shadow_tolerance_deg = 5.0;
};

GroupTopology init_group(VehicleId founder, Vec3 position, GroupId group_id);

/// Bearing (degrees in [0, 360)) of `target` seen from `origin`.
double bearing_deg(Vec3 origin, Vec3 target);

/// Angular-bisector partition: each vehicle gets the contiguous sector between
/// the bisectors toward its two angular neighbours. Widths sum to 360.
std::map<VehicleId, Sector> assign_sectors(Vec3 leader_position,
                                           const std::vector<std::pair<VehicleId, Vec3>>& periphery);
std::map<VehicleId, Sector> assign_sectors(const GroupTopology& topology);

struct JoinOutcome {
  GroupTopology topology;
  bool admitted = false;  // false when the requester was already a member
  std::vector<VehicleId> converted_to_idle;
};

/// Leader-side admission of a new periphery vehicle. Version is bumped only
/// when membership changes.
JoinOutcome admit(const GroupTopology& topology, VehicleId requester, Vec3 position, const TopologyConfig& cfg = {});

struct LeaveOutcome {
  GroupTopology topology;
  std::optional<VehicleId> promoted_idle;
  std::optional<VehicleId> new_leader;
  bool dissolved = false;
};

/// Membership error when `leaver` is not in the group.
LeaveOutcome remove_member(const GroupTopology& topology, VehicleId leaver);

}  // namespace convoy::topo
