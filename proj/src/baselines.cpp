#include "convoy/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "convoy/error.hpp"
#include "convoy/random.hpp"

namespace convoy::baseline {

void ChannelMatrix::validate() const {
  if (gains.size() != n * n) fail(ErrorCode::Shape, "channel matrix must be n x n");
  if (!(noise_w > 0.0)) fail(ErrorCode::Domain, "noise power must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(gain(i, i) > 0.0)) fail(ErrorCode::Domain, "direct channel gains must be strictly positive");
    for (std::size_t j = 0; j < n; ++j) {
      if (!(gain(j, i) >= 0.0) || !std::isfinite(gain(j, i))) fail(ErrorCode::Domain, "channel gains must be finite and >= 0");
    }
  }
}

ChannelMatrix channel_matrix(const rf::LinkBudget& budget, double beamwidth_deg) {
  ChannelMatrix ch;
  ch.n = budget.size();
  ch.gains.resize(ch.n * ch.n);
  ch.noise_w = budget.params().noise_power_w();
  for (std::size_t j = 0; j < ch.n; ++j) {
    for (std::size_t i = 0; i < ch.n; ++i) ch.gains[j * ch.n + i] = budget.pair_gain(j, i, beamwidth_deg, beamwidth_deg);
  }
  return ch;
}

double sum_rate(const ChannelMatrix& channel, std::span<const double> powers) {
  const std::size_t n = channel.n;
  if (powers.size() != n) fail(ErrorCode::Shape, "one power per link required");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double interference = channel.noise_w;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) interference += channel.gain(j, i) * powers[j];
    }
    total += std::log2(1.0 + channel.gain(i, i) * powers[i] / interference);
  }
  return total;
}

void WmmseConfig::validate() const {
  if (max_iterations < 1) fail(ErrorCode::Config, "wmmse needs at least one iteration");
  if (!(tolerance > 0.0)) fail(ErrorCode::Config, "wmmse tolerance must be positive");
  if (!(pmax_w > 0.0)) fail(ErrorCode::Config, "wmmse Pmax must be positive");
}

WmmseResult wmmse(const ChannelMatrix& channel, const WmmseConfig& cfg,
                  std::optional<std::span<const double>> initial_powers) {
  channel.validate();
  cfg.validate();
  const std::size_t n = channel.n;
  const double vmax = std::sqrt(cfg.pmax_w);

  std::vector<double> v(n, vmax / 2.0);
  if (initial_powers) {
    if (initial_powers->size() != n) fail(ErrorCode::Shape, "initial powers size mismatch");
    for (std::size_t i = 0; i < n; ++i) v[i] = std::sqrt(std::clamp((*initial_powers)[i], 0.0, cfg.pmax_w));
  }
  std::vector<double> amp(n * n);  // sqrt of power gains
  for (std::size_t k = 0; k < n * n; ++k) amp[k] = std::sqrt(channel.gains[k]);
  auto h = [&](std::size_t j, std::size_t i) { return amp[j * n + i]; };

  WmmseResult result;
  std::vector<double> powers(n);
  auto refresh_powers = [&] {
    for (std::size_t i = 0; i < n; ++i) powers[i] = v[i] * v[i];
  };
  refresh_powers();
  result.trace.push_back(sum_rate(channel, powers));

  std::vector<double> u(n), w(n);
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double denom = channel.noise_w;
      for (std::size_t j = 0; j < n; ++j) denom += channel.gain(j, i) * v[j] * v[j];
      u[i] = h(i, i) * v[i] / denom;
      w[i] = 1.0 / (1.0 - u[i] * h(i, i) * v[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double denom = 0.0;
      for (std::size_t j = 0; j < n; ++j) denom += w[j] * u[j] * u[j] * channel.gain(i, j);
      const double target = denom > 0.0 ? w[i] * u[i] * h(i, i) / denom : vmax;
      v[i] = std::clamp(target, 0.0, vmax);
      if (!std::isfinite(v[i])) {
        std::ostringstream os;
        os << "wmmse: non-finite transmit amplitude at iteration " << it + 1;
        fail(ErrorCode::Numerical, os.str());
      }
    }
    refresh_powers();
    const double rate = sum_rate(channel, powers);
    const double prev = result.trace.back();
    result.trace.push_back(rate);
    result.iterations = it + 1;
    if (std::abs(rate - prev) <= cfg.tolerance * std::max(std::abs(prev), 1e-300)) break;
  }
  result.powers = powers;
  return result;
}

BruteForceResult brute_force(const rf::LinkBudget& budget, int max_width_deg) {
  const std::size_t n = budget.size();
  if (n == 0) fail(ErrorCode::Domain, "brute force needs at least one link");
  if (n > kBruteForceMaxLinks) {
    std::ostringstream os;
    os << "brute force refused: " << n << " links exceeds the enumeration limit of " << kBruteForceMaxLinks;
    fail(ErrorCode::Refused, os.str());
  }
  if (max_width_deg < 1) fail(ErrorCode::Domain, "beamwidth set must be non-empty");

  BruteForceResult best;
  best.capacity_bps = -1.0;
  rf::BeamDecision d;
  d.active.assign(n, 0);
  d.beamwidth_deg.assign(n, 1);
  const std::size_t widths = static_cast<std::size_t>(max_width_deg);
  std::size_t width_combos = 1;
  for (std::size_t i = 0; i < n; ++i) width_combos *= widths;

  // Activation vectors in lexicographic order: link 0 is the most significant digit.
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    for (std::size_t i = 0; i < n; ++i) d.active[i] = (mask >> (n - 1 - i)) & 1u;
    for (std::size_t combo = 0; combo < width_combos; ++combo) {
      std::size_t rest = combo;
      for (std::size_t i = n; i-- > 0;) {
        d.beamwidth_deg[i] = static_cast<int>(rest % widths) + 1;
        rest /= widths;
      }
      const double c = budget.sum_capacity(d);
      ++best.evaluated;
      if (c > best.capacity_bps) {
        best.capacity_bps = c;
        best.decision = d;
      }
    }
  }
  return best;
}

rf::BeamDecision random_decision(std::size_t links, std::uint64_t seed, int max_width_deg) {
  Rng rng(seed);
  rf::BeamDecision d;
  d.active.assign(links, 1);
  d.beamwidth_deg.resize(links);
  for (auto& w : d.beamwidth_deg) w = static_cast<int>(uniform_int(rng, 1, max_width_deg));
  return d;
}

}  // namespace convoy::baseline
