#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "convoy/random.hpp"
#include "convoy/rf.hpp"

namespace convoy::align {

struct AngularGrid {
  double start_deg = -180.0;
  double step_deg = 1.0;
  std::size_t count = 360;

  double at(std::size_t k) const { return start_deg + static_cast<double>(k) * step_deg; }
  friend bool operator==(const AngularGrid&, const AngularGrid&) = default;

  static AngularGrid full_azimuth(double step_deg = 1.0);
  static AngularGrid single(double value_deg = 0.0) { return {value_deg, 1.0, 1}; }
};

/// Received power sampled on an azimuth x elevation grid, as measured from a
/// DSRC frame. Power is non-negative with at least one positive cell.
class AngularProfile {
 public:
  AngularProfile(AngularGrid azimuth, AngularGrid elevation, std::vector<double> power, double timestamp_s = 0.0);

  const AngularGrid& azimuth() const { return azimuth_; }
  const AngularGrid& elevation() const { return elevation_; }
  double timestamp() const { return timestamp_s_; }
  double power(std::size_t az, std::size_t el) const { return power_[el * azimuth_.count + az]; }
  const std::vector<double>& power() const { return power_; }

  rf::Direction cell_direction(std::size_t az, std::size_t el) const;
  /// Dominating-path cell; the first one in row-major order on ties.
  rf::Direction peak() const;
  /// Peak cell moved between cells by a log-parabolic fit through it and its
  /// two neighbours on each axis. Equals peak() when a neighbour is dark.
  rf::Direction refined_peak() const;
  bool same_grid(const AngularProfile& other) const;

 private:
  AngularGrid azimuth_;
  AngularGrid elevation_;
  std::vector<double> power_;
  double timestamp_s_;
};

/// Signed angular displacement of the dominating path.
struct AngularShift {
  double d_azimuth = 0.0;    // radians
  double d_elevation = 0.0;  // radians

  static AngularShift degrees(double d_az, double d_el = 0.0) { return {deg_to_rad(d_az), deg_to_rad(d_el)}; }
  friend AngularShift operator+(AngularShift a, AngularShift b) {
    return {a.d_azimuth + b.d_azimuth, a.d_elevation + b.d_elevation};
  }
  friend bool operator==(const AngularShift&, const AngularShift&) = default;
};

struct AlignmentTiming {
  double t_probe_s = 20e-6;
  double t_dsrc_frame_s = 400e-6;
  std::size_t n_dsrc_frames = 2;
  double t_slot_s = 0.01;
  double sector_span_deg = 360.0;
  std::size_t n_refine = 3;

  void validate() const;
};

/// Boresights tried by the correlation search.
struct CandidateGrid {
  double azimuth_step_deg = 1.0;
  bool elevation_search = false;
  double elevation_span_deg = 10.0;
  double elevation_step_deg = 1.0;
};

AngularShift estimate_shift(const AngularProfile& prev, const AngularProfile& cur);

struct AlignResult {
  rf::BeamConfig beam;
  double gain = 0.0;  // achieved correlation
};

/// Correlates the cone pattern against the profile displaced by `shift` and
/// returns the best boresight. Equal correlations are broken by the smallest
/// power-weighted squared offset to the displaced cells.
AlignResult align_step(const rf::BeamConfig& beam, const AngularProfile& profile, const AngularShift& shift,
                       const CandidateGrid& grid = {});

struct TwoStepResult {
  rf::BeamConfig beam_a;
  rf::BeamConfig beam_b;
  AngularShift total_shift;
  double gain_a = 0.0;
  double gain_b = 0.0;
};

/// First step re-points A using the shift caused by B's motion, second step
/// re-points B using the shift caused by A's motion.
TwoStepResult two_step_alignment(const rf::BeamConfig& beam_a, const rf::BeamConfig& beam_b,
                                 const AngularShift& shift_from_b_motion, const AngularShift& shift_from_a_motion,
                                 const AngularProfile& profile_a, const AngularProfile& profile_b,
                                 const CandidateGrid& grid = {});

std::size_t probe_count(double beamwidth_deg, double sector_span_deg);

struct ExhaustiveResult {
  rf::BeamConfig beam;
  std::size_t probes = 0;
  double gain = 0.0;
};

/// Beam-level codebook sweep over an azimuth sector centered on `sector_center_deg`.
ExhaustiveResult exhaustive_alignment(double beamwidth_deg, double sector_span_deg, const AngularProfile& profile,
                                      double sector_center_deg = 0.0);

enum class Scheme { Baseline802_15_3c, DsrcScheme1, DsrcScheme2 };

const char* to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

double alignment_overhead(Scheme scheme, double beamwidth_deg, const AlignmentTiming& timing);

struct OverheadRow {
  double beamwidth_deg;
  Scheme scheme;
  double overhead_s;
  double gap_vs_baseline_pct;
};

/// Overhead of every scheme at every width, sorted by width then scheme.
std::vector<OverheadRow> sweep_overhead(std::vector<double> widths_deg, const AlignmentTiming& timing);

struct ProfileModel {
  AngularGrid azimuth = AngularGrid::full_azimuth();
  AngularGrid elevation = AngularGrid::single();
  double noise_sigma_deg = 0.5;
  double lobe_sigma_deg = 1.0;
};

/// Profile of a single dominating path toward `truth`, its apparent direction
/// perturbed by zero-mean Gaussian angular noise.
AngularProfile synthesize_profile(const rf::Direction& truth, const ProfileModel& model, Rng& rng,
                                  double timestamp_s = 0.0);

}  // namespace convoy::align
