#include "convoy/topology.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "convoy/error.hpp"

namespace convoy::topo {

namespace {

double norm360(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  return r >= 360.0 ? 0.0 : r;
}

std::vector<std::pair<VehicleId, Vec3>> periphery_positions(const GroupTopology& t) {
  std::vector<std::pair<VehicleId, Vec3>> out;
  for (const auto& [id, m] : t.members) {
    if (m.role == Role::Periphery) out.emplace_back(id, m.position);
  }
  return out;
}

double distance(Vec3 a, Vec3 b) { return (a - b).norm(); }

/// Attached idle to promote: farthest from the leader, then smallest id.
std::optional<VehicleId> pick_attached_idle(const GroupTopology& t, VehicleId periphery, Vec3 leader_pos) {
  std::optional<VehicleId> best;
  double best_d = -1.0;
  for (const auto& [idle, link] : t.forward_links) {
    if (link.periphery != periphery) continue;
    const double d = distance(t.members.at(idle).position, leader_pos);
    if (d > best_d) {
      best_d = d;
      best = idle;
    }
  }
  return best;
}

/// Vacates `vid`'s periphery slot: an attached idle inherits the sector,
/// otherwise the remaining sectors are re-partitioned. Returns the promoted idle.
std::optional<VehicleId> vacate_periphery(GroupTopology& t, VehicleId vid, Vec3 leader_pos) {
  const auto promoted = pick_attached_idle(t, vid, leader_pos);
  const Sector inherited = t.sectors.at(vid);
  t.sectors.erase(vid);
  if (promoted) {
    t.members.at(*promoted).role = Role::Periphery;
    t.forward_links.erase(*promoted);
    t.sectors[*promoted] = inherited;
    for (auto& [idle, link] : t.forward_links) {
      if (link.periphery == vid) link.periphery = *promoted;
    }
  } else {
    t.sectors = assign_sectors(t);
  }
  return promoted;
}

}  // namespace

const char* to_string(Role r) {
  switch (r) {
    case Role::Free:
      return "Free";
    case Role::Leader:
      return "Leader";
    case Role::Periphery:
      return "Periphery";
    case Role::Idle:
      return "Idle";
  }
  return "?";
}

Role GroupTopology::role_of(VehicleId id) const {
  const auto it = members.find(id);
  return it == members.end() ? Role::Free : it->second.role;
}

std::vector<VehicleId> GroupTopology::with_role(Role r) const {
  std::vector<VehicleId> out;
  for (const auto& [id, m] : members) {
    if (m.role == r) out.push_back(id);
  }
  return out;
}

double GroupTopology::sector_sum() const {
  double s = 0.0;
  for (const auto& [id, sec] : sectors) s += sec.width_deg;
  return s;
}

std::vector<std::string> GroupTopology::violations() const {
  std::vector<std::string> out;
  auto report = [&](const std::string& s) {
    std::ostringstream os;
    os << "group " << group_id << " v" << version << ": " << s;
    out.push_back(os.str());
  };
  const auto leaders = with_role(Role::Leader);
  if (leaders.size() != 1) report("expected exactly one leader, found " + std::to_string(leaders.size()));
  if (!leaders.empty() && leaders.front() != leader_id) report("leader_id disagrees with member roles");
  for (const auto& [id, m] : members) {
    if (m.id != id) report("member record id mismatch");
    if (m.role == Role::Free) report("free vehicle listed as member " + std::to_string(id));
    if (m.role == Role::Periphery && sectors.count(id) == 0) report("periphery " + std::to_string(id) + " has no sector");
    if (m.role == Role::Idle && forward_links.count(id) == 0) report("orphan idle " + std::to_string(id));
  }
  for (const auto& [id, sec] : sectors) {
    if (role_of(id) != Role::Periphery) report("sector held by non-periphery " + std::to_string(id));
    if (!(sec.width_deg >= 0.0)) report("negative sector width");
  }
  if (!sectors.empty() && std::abs(sector_sum() - 360.0) > kSectorSumTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "sector widths sum to " << sector_sum();
    report(os.str());
  }
  for (const auto& [idle, link] : forward_links) {
    if (role_of(idle) != Role::Idle) report("forward link from non-idle " + std::to_string(idle));
    if (role_of(link.periphery) != Role::Periphery) report("forward link to non-periphery " + std::to_string(link.periphery));
    if (link.leader != leader_id) report("forward link names a stale leader");
  }
  return out;
}

GroupTopology init_group(VehicleId founder, Vec3 position, GroupId group_id) {
  GroupTopology t;
  t.group_id = group_id;
  t.leader_id = founder;
  t.version = 1;
  t.members[founder] = Member{founder, Role::Leader, position};
  return t;
}

double bearing_deg(Vec3 origin, Vec3 target) {
  const double dx = target.x - origin.x;
  const double dy = target.y - origin.y;
  if (dx == 0.0 && dy == 0.0) return 0.0;
  return norm360(rad_to_deg(std::atan2(dy, dx)));
}

std::map<VehicleId, Sector> assign_sectors(Vec3 leader_position,
                                           const std::vector<std::pair<VehicleId, Vec3>>& periphery) {
  std::map<VehicleId, Sector> out;
  if (periphery.empty()) return out;
  std::vector<std::pair<double, VehicleId>> bearings;
  for (const auto& [id, pos] : periphery) bearings.emplace_back(bearing_deg(leader_position, pos), id);
  std::sort(bearings.begin(), bearings.end());
  const std::size_t m = bearings.size();
  if (m == 1) {
    out[bearings[0].second] = {norm360(bearings[0].first - 180.0), 360.0};
    return out;
  }
  std::vector<double> gap_next(m);
  for (std::size_t k = 0; k < m; ++k) {
    gap_next[k] = k + 1 < m ? bearings[k + 1].first - bearings[k].first : bearings[0].first + 360.0 - bearings[k].first;
  }
  for (std::size_t k = 0; k < m; ++k) {
    const double gap_prev = gap_next[(k + m - 1) % m];
    out[bearings[k].second] = {norm360(bearings[k].first - gap_prev / 2.0), (gap_prev + gap_next[k]) / 2.0};
  }
  return out;
}

std::map<VehicleId, Sector> assign_sectors(const GroupTopology& topology) {
  return assign_sectors(topology.members.at(topology.leader_id).position, periphery_positions(topology));
}

JoinOutcome admit(const GroupTopology& topology, VehicleId requester, Vec3 position, const TopologyConfig& cfg) {
  JoinOutcome out{topology, false, {}};
  if (topology.contains(requester)) return out;
  GroupTopology& t = out.topology;
  const Vec3 leader_pos = t.members.at(t.leader_id).position;
  const double b_new = bearing_deg(leader_pos, position);

  t.members[requester] = Member{requester, Role::Periphery, position};
  for (VehicleId p : topology.with_role(Role::Periphery)) {
    const double b = bearing_deg(leader_pos, t.members.at(p).position);
    if (std::abs(wrap_deg(b - b_new)) >= cfg.shadow_tolerance_deg) continue;
    t.members.at(p).role = Role::Idle;
    t.sectors.erase(p);
    t.forward_links[p] = ForwardLink{requester, t.leader_id};
    for (auto& [idle, link] : t.forward_links) {
      if (link.periphery == p) link.periphery = requester;
    }
    out.converted_to_idle.push_back(p);
  }
  t.sectors = assign_sectors(t);
  ++t.version;
  out.admitted = true;
  return out;
}

LeaveOutcome remove_member(const GroupTopology& topology, VehicleId leaver) {
  if (!topology.contains(leaver)) {
    fail(ErrorCode::Membership, "vehicle " + std::to_string(leaver) + " is not a member of group " +
                                    std::to_string(topology.group_id));
  }
  LeaveOutcome out{topology, std::nullopt, std::nullopt, false};
  GroupTopology& t = out.topology;
  const Member gone = t.members.at(leaver);

  switch (gone.role) {
    case Role::Idle:
      t.forward_links.erase(leaver);
      t.members.erase(leaver);
      break;
    case Role::Periphery: {
      const Vec3 leader_pos = t.members.at(t.leader_id).position;
      t.members.at(leaver).role = Role::Idle;  // keeps it out of any re-partition
      out.promoted_idle = vacate_periphery(t, leaver, leader_pos);
      t.members.erase(leaver);
      break;
    }
    case Role::Leader: {
      t.members.erase(leaver);
      if (t.members.empty()) {
        out.dissolved = true;
        t.sectors.clear();
        t.forward_links.clear();
        break;
      }
      // Nearest member takes over; smallest id among equidistant ones.
      VehicleId next = t.members.begin()->first;
      double best = distance(t.members.begin()->second.position, gone.position);
      for (const auto& [id, m] : t.members) {
        const double d = distance(m.position, gone.position);
        if (d < best) {
          best = d;
          next = id;
        }
      }
      Member& successor = t.members.at(next);
      const Role was = successor.role;
      successor.role = Role::Leader;
      t.leader_id = next;
      if (was == Role::Periphery) {
        out.promoted_idle = pick_attached_idle(t, next, successor.position);
        t.sectors.erase(next);
        if (out.promoted_idle) {
          t.members.at(*out.promoted_idle).role = Role::Periphery;
          t.forward_links.erase(*out.promoted_idle);
          for (auto& [idle, link] : t.forward_links) {
            if (link.periphery == next) link.periphery = *out.promoted_idle;
          }
        }
      } else if (was == Role::Idle) {
        t.forward_links.erase(next);
      }
      for (auto& [idle, link] : t.forward_links) link.leader = next;
      // Bearings are taken around the leader, so a new centre needs a new partition.
      t.sectors = assign_sectors(t);
      out.new_leader = next;
      break;
    }
    case Role::Free:
      fail(ErrorCode::Membership, "free vehicle recorded as member");
  }
  ++t.version;
  return out;
}

}  // namespace convoy::topo
