#include "convoy/rf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "convoy/error.hpp"

namespace convoy::rf {

Direction::Direction(double azimuth_rad, double elevation_rad) {
  if (!std::isfinite(azimuth_rad) || !std::isfinite(elevation_rad)) {
    fail(ErrorCode::Domain, "direction angles must be finite");
  }
  if (elevation_rad < -kPi / 2.0 || elevation_rad > kPi / 2.0) {
    std::ostringstream os;
    os << "elevation " << elevation_rad << " rad outside [-pi/2, pi/2]";
    fail(ErrorCode::Domain, os.str());
  }
  azimuth_ = wrap_rad(azimuth_rad);
  elevation_ = elevation_rad;
}

Direction Direction::from_degrees(double azimuth_deg, double elevation_deg) {
  return Direction(deg_to_rad(azimuth_deg), deg_to_rad(elevation_deg));
}

Direction Direction::toward(Vec3 from, Vec3 to) {
  const Vec3 d = to - from;
  const double horizontal = std::hypot(d.x, d.y);
  if (horizontal == 0.0 && d.z == 0.0) fail(ErrorCode::Geometry, "direction between coincident points");
  return Direction(std::atan2(d.y, d.x), std::atan2(d.z, horizontal));
}

Vec3 Direction::unit() const {
  const double ce = std::cos(elevation_);
  return {ce * std::cos(azimuth_), ce * std::sin(azimuth_), std::sin(elevation_)};
}

double angular_offset(const Direction& a, const Direction& b) {
  // Azimuth-only fast path keeps in-plane offsets exact.
  if (a.elevation() == 0.0 && b.elevation() == 0.0) {
    return std::abs(wrap_rad(a.azimuth() - b.azimuth()));
  }
  const Vec3 u = a.unit();
  const Vec3 v = b.unit();
  const Vec3 c{u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z, u.x * v.y - u.y * v.x};
  return std::atan2(c.norm(), dot(u, v));
}

BeamConfig::BeamConfig(Direction boresight, double beamwidth_deg) : boresight_(boresight) {
  if (!(beamwidth_deg > 0.0) || beamwidth_deg > 360.0) {
    std::ostringstream os;
    os << "beamwidth " << beamwidth_deg << " deg outside (0, 360]";
    fail(ErrorCode::Domain, os.str());
  }
  beamwidth_deg_ = beamwidth_deg;
}

double BeamConfig::mainlobe_gain() const { return cone_mainlobe_gain(deg_to_rad(beamwidth_deg_)); }

void RfParams::validate() const {
  if (!(carrier_freq_hz > 0.0) || !(bandwidth_hz > 0.0) || !(tx_power_w > 0.0) ||
      !(noise_psd_w_per_hz > 0.0)) {
    fail(ErrorCode::Config, "rf parameters must all be strictly positive");
  }
}

void LinkGeometry::validate() const {
  if (!(distance() > 0.0)) fail(ErrorCode::Geometry, "link transmitter and receiver coincide");
}

std::size_t BeamDecision::active_count() const {
  return static_cast<std::size_t>(std::count_if(active.begin(), active.end(), [](auto p) { return p != 0; }));
}

double cone_mainlobe_gain(double beamwidth_rad) {
  const double c = std::cos(beamwidth_rad / 2.0);
  return 2.0 / (1.0 - c);
}

double cone_gain(const BeamConfig& beam, const Direction& toward) {
  if (beam.beamwidth_deg() >= 360.0) return 1.0;
  return angular_offset(beam.boresight(), toward) <= beam.half_width_rad() ? beam.mainlobe_gain() : 0.0;
}

double path_gain(double distance_m, double carrier_freq_hz) {
  if (!(distance_m > 0.0)) fail(ErrorCode::Domain, "path gain needs a positive distance");
  if (!(carrier_freq_hz > 0.0)) fail(ErrorCode::Domain, "path gain needs a positive carrier frequency");
  const double a = kSpeedOfLight / (4.0 * kPi * carrier_freq_hz * distance_m);
  return a * a;
}

std::vector<LinkBeams> aligned_beams(std::span<const LinkGeometry> links, std::span<const int> beamwidth_deg) {
  if (links.size() != beamwidth_deg.size()) fail(ErrorCode::Shape, "one beamwidth per link required");
  std::vector<LinkBeams> out;
  out.reserve(links.size());
  for (std::size_t i = 0; i < links.size(); ++i) {
    links[i].validate();
    const double w = beamwidth_deg[i];
    out.push_back({BeamConfig(Direction::toward(links[i].tx_position, links[i].rx_position), w),
                   BeamConfig(Direction::toward(links[i].rx_position, links[i].tx_position), w)});
  }
  return out;
}

double sinr(std::size_t link, std::span<const LinkBeams> beams, std::span<const std::uint8_t> active,
            std::span<const LinkGeometry> links, const RfParams& params) {
  const std::size_t n = links.size();
  if (beams.size() != n || active.size() != n) fail(ErrorCode::Shape, "beams/activation/geometry size mismatch");
  if (link >= n) fail(ErrorCode::Domain, "link index out of range");
  if (!active[link]) fail(ErrorCode::Domain, "sinr requested for an inactive link");
  params.validate();

  const LinkGeometry& own = links[link];
  own.validate();
  const double f = params.carrier_freq_hz;
  const double signal = params.tx_power_w *
                        cone_gain(beams[link].tx, Direction::toward(own.tx_position, own.rx_position)) *
                        cone_gain(beams[link].rx, Direction::toward(own.rx_position, own.tx_position)) *
                        path_gain(own.distance(), f);
  double interference = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == link || !active[j]) continue;
    const Vec3 tx = links[j].tx_position;
    const double d = (own.rx_position - tx).norm();
    if (d == 0.0) continue;  // the receiver's own transmit chain
    interference += params.tx_power_w * cone_gain(beams[j].tx, Direction::toward(tx, own.rx_position)) *
                    cone_gain(beams[link].rx, Direction::toward(own.rx_position, tx)) * path_gain(d, f);
  }
  return signal / (params.noise_power_w() + interference);
}

double sinr(std::size_t link, const BeamDecision& decision, std::span<const LinkGeometry> links,
            const RfParams& params) {
  const auto beams = aligned_beams(links, decision.beamwidth_deg);
  return sinr(link, beams, decision.active, links, params);
}

double link_capacity(double sinr_value, double bandwidth_hz) {
  if (!(sinr_value >= 0.0)) fail(ErrorCode::Domain, "capacity of a negative SINR");
  return bandwidth_hz * std::log2(1.0 + sinr_value);
}

LinkBudget::LinkBudget(std::span<const LinkGeometry> links, const RfParams& params)
    : n_(links.size()), params_(params), path_(n_ * n_), tx_off_(n_ * n_), rx_off_(n_ * n_) {
  // Zero bandwidth is tolerated here so a degenerate capacity objective can be evaluated.
  if (!(params.carrier_freq_hz > 0.0) || !(params.bandwidth_hz >= 0.0) || !(params.tx_power_w > 0.0) ||
      !(params.noise_psd_w_per_hz > 0.0)) {
    fail(ErrorCode::Config, "rf parameters out of range for a link budget");
  }
  for (const auto& l : links) l.validate();
  for (std::size_t j = 0; j < n_; ++j) {
    const Direction tx_bore = Direction::toward(links[j].tx_position, links[j].rx_position);
    for (std::size_t i = 0; i < n_; ++i) {
      const Vec3 tx = links[j].tx_position;
      const Vec3 rx = links[i].rx_position;
      const double d = (rx - tx).norm();
      if (d == 0.0) {
        // A relay receives on one link and transmits on another: no coupling with itself.
        if (i == j) fail(ErrorCode::Geometry, "transmitter co-located with its receiver");
        path_[j * n_ + i] = 0.0;
        tx_off_[j * n_ + i] = kPi;
        rx_off_[j * n_ + i] = kPi;
        continue;
      }
      const Direction rx_bore = Direction::toward(links[i].rx_position, links[i].tx_position);
      path_[j * n_ + i] = path_gain(d, params.carrier_freq_hz);
      tx_off_[j * n_ + i] = angular_offset(tx_bore, Direction::toward(tx, rx));
      rx_off_[j * n_ + i] = angular_offset(rx_bore, Direction::toward(rx, tx));
    }
  }
}

double LinkBudget::pair_gain(std::size_t j, std::size_t i, double width_j_deg, double width_i_deg) const {
  const double wj = deg_to_rad(width_j_deg);
  const double wi = deg_to_rad(width_i_deg);
  const double gt = width_j_deg >= 360.0 ? 1.0 : (tx_offset(j, i) <= wj / 2.0 ? cone_mainlobe_gain(wj) : 0.0);
  if (gt == 0.0) return 0.0;
  const double gr = width_i_deg >= 360.0 ? 1.0 : (rx_offset(j, i) <= wi / 2.0 ? cone_mainlobe_gain(wi) : 0.0);
  return gt * gr * path(j, i);
}

std::vector<double> LinkBudget::sinrs(const BeamDecision& decision) const {
  if (decision.active.size() != n_ || decision.beamwidth_deg.size() != n_) {
    fail(ErrorCode::Shape, "decision size does not match link count");
  }
  std::vector<double> out(n_, 0.0);
  const double p = params_.tx_power_w;
  const double noise = params_.noise_power_w();
  for (std::size_t i = 0; i < n_; ++i) {
    if (!decision.active[i]) continue;
    const double wi = decision.beamwidth_deg[i];
    double interference = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      if (j == i || !decision.active[j]) continue;
      interference += p * pair_gain(j, i, decision.beamwidth_deg[j], wi);
    }
    out[i] = p * pair_gain(i, i, wi, wi) / (noise + interference);
  }
  return out;
}

std::vector<double> LinkBudget::capacities(const BeamDecision& decision) const {
  auto s = sinrs(decision);
  for (auto& v : s) v = link_capacity(v, params_.bandwidth_hz);
  return s;
}

double LinkBudget::sum_capacity(const BeamDecision& decision) const {
  double total = 0.0;
  for (double c : capacities(decision)) total += c;
  return total;
}

SoftConeGain soft_cone_gain(double beamwidth_rad, double offset_rad, double temperature) {
  const double q = std::sin(beamwidth_rad / 4.0);
  const double g = 1.0 / (q * q);
  const double dg = -std::cos(beamwidth_rad / 4.0) / (2.0 * q * q * q);
  const double s = (1.0 - 2.0 * offset_rad / beamwidth_rad) / temperature;
  const double sig = 1.0 / (1.0 + std::exp(-s));
  const double ds = 2.0 * offset_rad / (beamwidth_rad * beamwidth_rad * temperature);
  return {g * sig, dg * sig + g * sig * (1.0 - sig) * ds};
}

}  // namespace convoy::rf
