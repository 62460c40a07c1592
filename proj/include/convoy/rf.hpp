#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "convoy/geometry.hpp"

namespace convoy::rf {

inline constexpr double kSpeedOfLight = 299792458.0;

/// Azimuth in [-pi, pi), elevation in [-pi/2, pi/2]. Azimuth is wrapped on
/// construction; an out-of-range elevation is rejected.
class Direction {
 public:
  Direction() = default;
  Direction(double azimuth_rad, double elevation_rad);

  static Direction from_degrees(double azimuth_deg, double elevation_deg = 0.0);
  /// Direction of the ray from `from` to `to`. Throws Geometry when they coincide.
  static Direction toward(Vec3 from, Vec3 to);

  double azimuth() const { return azimuth_; }
  double elevation() const { return elevation_; }
  double azimuth_deg() const { return rad_to_deg(azimuth_); }
  double elevation_deg() const { return rad_to_deg(elevation_); }
  Vec3 unit() const;

  friend bool operator==(const Direction&, const Direction&) = default;

 private:
  double azimuth_ = 0.0;
  double elevation_ = 0.0;
};

/// Great-circle angle between two directions, radians in [0, pi].
double angular_offset(const Direction& a, const Direction& b);

class BeamConfig {
 public:
  BeamConfig() = default;
  BeamConfig(Direction boresight, double beamwidth_deg);

  const Direction& boresight() const { return boresight_; }
  double beamwidth_deg() const { return beamwidth_deg_; }
  double half_width_rad() const { return deg_to_rad(beamwidth_deg_) / 2.0; }
  double mainlobe_gain() const;

  BeamConfig with_boresight(Direction d) const { return BeamConfig(d, beamwidth_deg_); }

  friend bool operator==(const BeamConfig&, const BeamConfig&) = default;

 private:
  Direction boresight_{};
  double beamwidth_deg_ = 360.0;
};

struct RfParams {
  double carrier_freq_hz = 60e9;
  double bandwidth_hz = 2.16e9;
  double tx_power_w = 0.1;
  // -174 dBm/Hz
  double noise_psd_w_per_hz = 3.9810717055349565e-21;

  void validate() const;
  double noise_power_w() const { return noise_psd_w_per_hz * bandwidth_hz; }
};

struct LinkGeometry {
  Vec3 tx_position;
  Vec3 rx_position;
  Vec3 tx_velocity;
  Vec3 rx_velocity;

  double distance() const { return (rx_position - tx_position).norm(); }
  void validate() const;
};

/// Per-link activation and integer beamwidth choice.
struct BeamDecision {
  std::vector<std::uint8_t> active;
  std::vector<int> beamwidth_deg;

  std::size_t size() const { return active.size(); }
  std::size_t active_count() const;
  friend bool operator==(const BeamDecision&, const BeamDecision&) = default;
};

struct LinkBeams {
  BeamConfig tx;
  BeamConfig rx;
};

/// Mainlobe gain of an ideal cone of full opening `beamwidth_rad`.
double cone_mainlobe_gain(double beamwidth_rad);
double cone_gain(const BeamConfig& beam, const Direction& toward);

double path_gain(double distance_m, double carrier_freq_hz);

/// Both ends of every link pointed exactly at each other with the decided widths.
std::vector<LinkBeams> aligned_beams(std::span<const LinkGeometry> links,
                                     std::span<const int> beamwidth_deg);

double sinr(std::size_t link, std::span<const LinkBeams> beams, std::span<const std::uint8_t> active,
            std::span<const LinkGeometry> links, const RfParams& params);
double sinr(std::size_t link, const BeamDecision& decision, std::span<const LinkGeometry> links,
            const RfParams& params);

double link_capacity(double sinr_value, double bandwidth_hz);

/// Precomputed pairwise geometry for repeated capacity evaluation under aligned
/// beams. Index convention: pair (j, i) is transmitter j toward receiver i.
class LinkBudget {
 public:
  LinkBudget(std::span<const LinkGeometry> links, const RfParams& params);

  std::size_t size() const { return n_; }
  const RfParams& params() const { return params_; }
  double path(std::size_t j, std::size_t i) const { return path_[j * n_ + i]; }
  /// Offset of receiver i from transmitter j's boresight.
  double tx_offset(std::size_t j, std::size_t i) const { return tx_off_[j * n_ + i]; }
  /// Offset of transmitter j from receiver i's boresight.
  double rx_offset(std::size_t j, std::size_t i) const { return rx_off_[j * n_ + i]; }

  /// Effective power gain j -> i with hard cones of the given widths.
  double pair_gain(std::size_t j, std::size_t i, double width_j_deg, double width_i_deg) const;

  std::vector<double> sinrs(const BeamDecision& decision) const;
  std::vector<double> capacities(const BeamDecision& decision) const;
  double sum_capacity(const BeamDecision& decision) const;

 private:
  std::size_t n_;
  RfParams params_;
  std::vector<double> path_;
  std::vector<double> tx_off_;
  std::vector<double> rx_off_;
};

/// Cone gain with a sigmoid edge, used only where a gradient with respect to
/// the beamwidth is needed. The edge is sharp in units of the half width so
/// that aligned links keep their mainlobe gain.
struct SoftConeGain {
  double value;
  double d_width;  // derivative w.r.t. the full width in radians
};
SoftConeGain soft_cone_gain(double beamwidth_rad, double offset_rad, double temperature);

}  // namespace convoy::rf
