#include "convoy/align.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "convoy/error.hpp"

namespace convoy::align {

namespace {

double clamp_elevation(double rad) { return std::clamp(rad, -kPi / 2.0, kPi / 2.0); }

void check_grid(const AngularGrid& g, const char* what) {
  if (!(g.step_deg > 0.0) || g.count == 0 || !std::isfinite(g.start_deg)) {
    fail(ErrorCode::Config, std::string(what) + " grid needs a positive step and at least one cell");
  }
}

struct Cell {
  rf::Direction dir;
  double power;
};

std::vector<Cell> lit_cells(const AngularProfile& p, const AngularShift& shift) {
  std::vector<Cell> cells;
  for (std::size_t e = 0; e < p.elevation().count; ++e) {
    for (std::size_t a = 0; a < p.azimuth().count; ++a) {
      const double pw = p.power(a, e);
      if (pw <= 0.0) continue;
      const rf::Direction d = p.cell_direction(a, e);
      cells.push_back({rf::Direction(d.azimuth() + shift.d_azimuth, clamp_elevation(d.elevation() + shift.d_elevation)), pw});
    }
  }
  return cells;
}

// Vertex of the parabola through the logs of three neighbouring cells, in cells
// relative to the middle one.
double vertex_offset(double left, double mid, double right) {
  if (!(left > 0.0 && right > 0.0)) return 0.0;
  const double a = std::log(left), b = std::log(mid), c = std::log(right);
  const double curvature = a - 2.0 * b + c;
  if (!(curvature < 0.0)) return 0.0;
  return std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5);
}

}  // namespace

AngularGrid AngularGrid::full_azimuth(double step_deg) {
  if (!(step_deg > 0.0)) fail(ErrorCode::Config, "azimuth step must be positive");
  return {-180.0, step_deg, static_cast<std::size_t>(std::ceil(360.0 / step_deg - 1e-9))};
}

AngularProfile::AngularProfile(AngularGrid azimuth, AngularGrid elevation, std::vector<double> power,
                               double timestamp_s)
    : azimuth_(azimuth), elevation_(elevation), power_(std::move(power)), timestamp_s_(timestamp_s) {
  check_grid(azimuth_, "azimuth");
  check_grid(elevation_, "elevation");
  if (elevation_.start_deg < -90.0 || elevation_.at(elevation_.count - 1) > 90.0) {
    fail(ErrorCode::Config, "elevation grid leaves [-90, 90] degrees");
  }
  if (power_.size() != azimuth_.count * elevation_.count) fail(ErrorCode::Config, "profile size does not match its grid");
  bool any = false;
  for (double p : power_) {
    if (!(p >= 0.0) || !std::isfinite(p)) fail(ErrorCode::Domain, "profile power must be finite and non-negative");
    any = any || p > 0.0;
  }
  if (!any) fail(ErrorCode::Domain, "angular profile has no dominant path (all cells zero)");
}

rf::Direction AngularProfile::cell_direction(std::size_t az, std::size_t el) const {
  return rf::Direction::from_degrees(azimuth_.at(az), elevation_.at(el));
}

rf::Direction AngularProfile::peak() const {
  const auto it = std::max_element(power_.begin(), power_.end());
  const auto k = static_cast<std::size_t>(it - power_.begin());
  return cell_direction(k % azimuth_.count, k / azimuth_.count);
}

rf::Direction AngularProfile::refined_peak() const {
  const auto it = std::max_element(power_.begin(), power_.end());
  const auto k = static_cast<std::size_t>(it - power_.begin());
  const std::size_t a = k % azimuth_.count, e = k / azimuth_.count;
  const double mid = *it;
  const bool wraps = std::abs(static_cast<double>(azimuth_.count) * azimuth_.step_deg - 360.0) < 1e-9;
  double d_az = 0.0, d_el = 0.0;
  if (azimuth_.count >= 3 && (wraps || (a > 0 && a + 1 < azimuth_.count))) {
    const std::size_t left = (a + azimuth_.count - 1) % azimuth_.count, right = (a + 1) % azimuth_.count;
    d_az = vertex_offset(power(left, e), mid, power(right, e));
  }
  if (e > 0 && e + 1 < elevation_.count) d_el = vertex_offset(power(a, e - 1), mid, power(a, e + 1));
  return rf::Direction::from_degrees(azimuth_.at(a) + d_az * azimuth_.step_deg,
                                     elevation_.at(e) + d_el * elevation_.step_deg);
}

bool AngularProfile::same_grid(const AngularProfile& other) const {
  return azimuth_ == other.azimuth_ && elevation_ == other.elevation_;
}

void AlignmentTiming::validate() const {
  if (!(t_probe_s > 0.0) || !(t_dsrc_frame_s > 0.0) || n_dsrc_frames == 0 || !(t_slot_s > 0.0) ||
      !(sector_span_deg > 0.0) || sector_span_deg > 360.0 || n_refine == 0) {
    fail(ErrorCode::Config, "alignment timing values must all be positive (sector span at most 360 deg)");
  }
}

AngularShift estimate_shift(const AngularProfile& prev, const AngularProfile& cur) {
  if (!prev.same_grid(cur)) fail(ErrorCode::Config, "successive profiles are sampled on different grids");
  const rf::Direction a = prev.refined_peak();
  const rf::Direction b = cur.refined_peak();
  return {wrap_rad(b.azimuth() - a.azimuth()), b.elevation() - a.elevation()};
}

AlignResult align_step(const rf::BeamConfig& beam, const AngularProfile& profile, const AngularShift& shift,
                       const CandidateGrid& grid) {
  if (!(grid.azimuth_step_deg > 0.0) ||
      (grid.elevation_search && (!(grid.elevation_step_deg > 0.0) || !(grid.elevation_span_deg >= 0.0)))) {
    fail(ErrorCode::Config, "empty candidate boresight grid");
  }
  const AngularGrid az = AngularGrid::full_azimuth(grid.azimuth_step_deg);
  std::vector<double> elevations;
  if (grid.elevation_search) {
    const auto steps = static_cast<std::size_t>(std::floor(grid.elevation_span_deg / grid.elevation_step_deg + 1e-9));
    for (std::size_t k = 0; k <= steps; ++k) {
      const double e = -grid.elevation_span_deg / 2.0 + static_cast<double>(k) * grid.elevation_step_deg;
      if (e >= -90.0 && e <= 90.0) elevations.push_back(e);
    }
  } else {
    elevations.push_back(beam.boresight().elevation_deg());
  }
  if (elevations.empty() || az.count == 0) fail(ErrorCode::Config, "empty candidate boresight grid");

  const auto cells = lit_cells(profile, shift);
  AlignResult best{beam, -1.0};
  double best_spread = 0.0;
  for (double el : elevations) {
    for (std::size_t k = 0; k < az.count; ++k) {
      const rf::BeamConfig candidate(rf::Direction::from_degrees(az.at(k), el), beam.beamwidth_deg());
      double score = 0.0;
      double spread = 0.0;
      for (const Cell& c : cells) {
        const double g = rf::cone_gain(candidate, c.dir);
        if (g <= 0.0) continue;
        score += c.power * g;
        const double off = rf::angular_offset(candidate.boresight(), c.dir);
        spread += c.power * off * off;
      }
      const double tie = 1e-12 * std::max(std::abs(best.gain), 1e-300);
      if (score > best.gain + tie || (std::abs(score - best.gain) <= tie && spread < best_spread)) {
        best = {candidate, score};
        best_spread = spread;
      }
    }
  }
  return best;
}

TwoStepResult two_step_alignment(const rf::BeamConfig& beam_a, const rf::BeamConfig& beam_b,
                                 const AngularShift& shift_from_b_motion, const AngularShift& shift_from_a_motion,
                                 const AngularProfile& profile_a, const AngularProfile& profile_b,
                                 const CandidateGrid& grid) {
  const AlignResult a = align_step(beam_a, profile_a, shift_from_b_motion, grid);
  const AlignResult b = align_step(beam_b, profile_b, shift_from_a_motion, grid);
  return {a.beam, b.beam, shift_from_b_motion + shift_from_a_motion, a.gain, b.gain};
}

std::size_t probe_count(double beamwidth_deg, double sector_span_deg) {
  if (!(beamwidth_deg > 0.0) || beamwidth_deg > 360.0) fail(ErrorCode::Domain, "beamwidth outside (0, 360]");
  if (!(sector_span_deg > 0.0)) fail(ErrorCode::Domain, "sector span must be positive");
  return static_cast<std::size_t>(std::max(1.0, std::ceil(sector_span_deg / beamwidth_deg - 1e-9)));
}

ExhaustiveResult exhaustive_alignment(double beamwidth_deg, double sector_span_deg, const AngularProfile& profile,
                                      double sector_center_deg) {
  const std::size_t n = probe_count(beamwidth_deg, sector_span_deg);
  const auto cells = lit_cells(profile, {});
  ExhaustiveResult best;
  best.probes = n;
  best.gain = -1.0;
  const double first = sector_center_deg - sector_span_deg / 2.0 + beamwidth_deg / 2.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double az = n == 1 ? sector_center_deg : first + static_cast<double>(k) * beamwidth_deg;
    const rf::BeamConfig probe(rf::Direction::from_degrees(az, 0.0), beamwidth_deg);
    double g = 0.0;
    for (const Cell& c : cells) g += c.power * rf::cone_gain(probe, c.dir);
    if (g > best.gain) {
      best.gain = g;
      best.beam = probe;
    }
  }
  return best;
}

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::Baseline802_15_3c:
      return "baseline_802_15_3c";
    case Scheme::DsrcScheme1:
      return "dsrc_scheme1";
    case Scheme::DsrcScheme2:
      return "dsrc_scheme2";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  for (Scheme s : {Scheme::Baseline802_15_3c, Scheme::DsrcScheme1, Scheme::DsrcScheme2}) {
    if (name == to_string(s)) return s;
  }
  if (name == "baseline" || name == "exhaustive") return Scheme::Baseline802_15_3c;
  if (name == "scheme1") return Scheme::DsrcScheme1;
  if (name == "scheme2" || name == "dsrc") return Scheme::DsrcScheme2;
  fail(ErrorCode::Domain, "unknown alignment scheme '" + name + "'");
}

double alignment_overhead(Scheme scheme, double beamwidth_deg, const AlignmentTiming& timing) {
  timing.validate();
  const double refine = static_cast<double>(timing.n_refine) * timing.t_probe_s;
  switch (scheme) {
    case Scheme::Baseline802_15_3c:
      return static_cast<double>(probe_count(beamwidth_deg, timing.sector_span_deg)) * timing.t_probe_s;
    case Scheme::DsrcScheme2:
      return refine;
    case Scheme::DsrcScheme1:
      return refine + static_cast<double>(timing.n_dsrc_frames) * timing.t_dsrc_frame_s;
  }
  fail(ErrorCode::Domain, "unknown alignment scheme");
}

std::vector<OverheadRow> sweep_overhead(std::vector<double> widths_deg, const AlignmentTiming& timing) {
  std::sort(widths_deg.begin(), widths_deg.end());
  std::vector<OverheadRow> rows;
  for (double w : widths_deg) {
    const double base = alignment_overhead(Scheme::Baseline802_15_3c, w, timing);
    for (Scheme s : {Scheme::Baseline802_15_3c, Scheme::DsrcScheme1, Scheme::DsrcScheme2}) {
      const double o = alignment_overhead(s, w, timing);
      rows.push_back({w, s, o, 100.0 * (base - o) / base});
    }
  }
  return rows;
}

AngularProfile synthesize_profile(const rf::Direction& truth, const ProfileModel& model, Rng& rng,
                                  double timestamp_s) {
  if (!(model.lobe_sigma_deg > 0.0) || !(model.noise_sigma_deg >= 0.0)) {
    fail(ErrorCode::Config, "profile lobe width must be positive and noise non-negative");
  }
  double az = truth.azimuth();
  double el = truth.elevation();
  if (model.noise_sigma_deg > 0.0) {
    az += deg_to_rad(normal(rng, 0.0, model.noise_sigma_deg));
    if (model.elevation.count > 1) el = clamp_elevation(el + deg_to_rad(normal(rng, 0.0, model.noise_sigma_deg)));
  }
  const rf::Direction apparent(az, el);
  const double lobe = deg_to_rad(model.lobe_sigma_deg);
  std::vector<double> power(model.azimuth.count * model.elevation.count, 0.0);
  for (std::size_t e = 0; e < model.elevation.count; ++e) {
    for (std::size_t a = 0; a < model.azimuth.count; ++a) {
      const auto dir = rf::Direction::from_degrees(model.azimuth.at(a), model.elevation.at(e));
      const double off = rf::angular_offset(dir, apparent);
      const double p = std::exp(-off * off / (2.0 * lobe * lobe));
      power[e * model.azimuth.count + a] = p >= 1e-6 ? p : 0.0;
    }
  }
  // A lobe narrower than the grid can fall between cells; keep the nearest one lit.
  if (std::all_of(power.begin(), power.end(), [](double p) { return p == 0.0; })) {
    double best = 1e300;
    std::size_t idx = 0;
    for (std::size_t e = 0; e < model.elevation.count; ++e) {
      for (std::size_t a = 0; a < model.azimuth.count; ++a) {
        const double off = rf::angular_offset(rf::Direction::from_degrees(model.azimuth.at(a), model.elevation.at(e)), apparent);
        if (off < best) {
          best = off;
          idx = e * model.azimuth.count + a;
        }
      }
    }
    power[idx] = 1.0;
  }
  return AngularProfile(model.azimuth, model.elevation, std::move(power), timestamp_s);
}

}  // namespace convoy::align
