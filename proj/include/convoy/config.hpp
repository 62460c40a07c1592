#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convoy/align.hpp"
#include "convoy/baselines.hpp"
#include "convoy/gnn.hpp"
#include "convoy/protocol.hpp"
#include "convoy/rf.hpp"

namespace convoy::sim {

enum class BeamMethod { Fixed, Gnn, Wmmse, Random, Oracle };
const char* to_string(BeamMethod m);
BeamMethod parse_method(const std::string& name);

struct ScenarioConfig {
  std::optional<std::uint64_t> seed;

  std::size_t vehicles = 12;
  std::size_t slots = 100;
  double slot_s = 0.01;

  double road_length_m = 200.0;
  double lane_width_m = 3.5;
  std::size_t lanes = 3;
  double speed_min_mps = 20.0;
  double speed_max_mps = 30.0;
  double antenna_height_m = 1.5;

  rf::RfParams rf;

  align::Scheme align_scheme = align::Scheme::DsrcScheme1;
  align::AlignmentTiming timing;  // t_slot_s mirrors slot_s
  double profile_noise_deg = 0.5;
  std::vector<double> sweep_widths_deg{5, 10, 15, 20, 25, 30, 35, 40, 45};

  topo::ProtocolConfig protocol;
  double warmup_spacing_s = 0.05;
  std::size_t sensing_bytes = 1200;
  std::size_t decision_bytes = 200;
  std::size_t control_bytes = 64;

  BeamMethod method = BeamMethod::Gnn;
  int fixed_width_deg = 8;
  baseline::WmmseConfig wmmse;  // pmax_w mirrors rf.tx_power_w
  double wmmse_width_deg = 8.0;

  gnn::TrainConfig train;
  std::size_t train_links = 3;
  std::string model_path;

  std::size_t eval_instances = 20;
  std::size_t eval_links = 12;
  std::size_t eval_timing_repeats = 3;
  std::size_t oracle_instances = 20;
  std::size_t oracle_links = 3;

  std::size_t fuzz_events = 1000;
  double fuzz_drop_prob = 0.3;
  std::size_t fuzz_vehicles = 24;

  /// Applies one `key = value` assignment; Config error on an unknown key or
  /// a malformed or out-of-range value.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static std::vector<std::string> keys();

  /// Range checks across fields; also requires the seed.
  void validate() const;
  std::uint64_t require_seed() const;

  /// Canonical text, one assignment per key in declaration order.
  std::string to_text() const;

  gnn::LinkLayout link_layout() const;
};

/// Parses config text. Errors carry the 1-based line number and key.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::string& path);

}  // namespace convoy::sim
