#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "convoy/rf.hpp"

namespace convoy::baseline {

/// Effective power gains with antenna gains and path loss folded in.
/// gain(j, i) is transmitter j toward receiver i.
struct ChannelMatrix {
  std::size_t n = 0;
  std::vector<double> gains;
  double noise_w = 0.0;

  double gain(std::size_t j, std::size_t i) const { return gains[j * n + i]; }
  void validate() const;
};

/// Channel seen when every link uses the same aligned beamwidth.
ChannelMatrix channel_matrix(const rf::LinkBudget& budget, double beamwidth_deg);

/// Sum of log2(1 + SINR) over links, in bit/s/Hz.
double sum_rate(const ChannelMatrix& channel, std::span<const double> powers);

struct WmmseConfig {
  std::size_t max_iterations = 500;
  double tolerance = 1e-9;
  double pmax_w = 0.1;

  void validate() const;
};

struct WmmseResult {
  std::vector<double> powers;
  /// Sum rate (bit/s/Hz) before the first iteration and after every one.
  std::vector<double> trace;
  std::size_t iterations = 0;
};

/// Scalar (single-antenna) weighted-MMSE power control. `initial_powers`
/// defaults to Pmax/4 on every link (amplitude sqrt(Pmax)/2).
WmmseResult wmmse(const ChannelMatrix& channel, const WmmseConfig& cfg,
                  std::optional<std::span<const double>> initial_powers = std::nullopt);

inline constexpr std::size_t kBruteForceMaxLinks = 4;

struct BruteForceResult {
  rf::BeamDecision decision;
  double capacity_bps = 0.0;
  std::size_t evaluated = 0;
};

/// Exhaustive search over activation subsets and beamwidths 1..max_width.
/// Ties go to the lexicographically smallest (P, A).
BruteForceResult brute_force(const rf::LinkBudget& budget, int max_width_deg = 15);

/// Every link active, widths uniform over 1..max_width.
rf::BeamDecision random_decision(std::size_t links, std::uint64_t seed, int max_width_deg = 15);

}  // namespace convoy::baseline
