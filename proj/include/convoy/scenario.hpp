#pragma once

#include <optional>
#include <string>
#include <vector>

#include "convoy/config.hpp"
#include "convoy/gnn.hpp"
#include "convoy/text.hpp"

namespace convoy::sim {

struct Vehicle {
  topo::VehicleId id = 0;
  Vec3 position;
  Vec3 velocity;
};

/// Constant-velocity advance along the lanes. Domain error when dt <= 0.
void mobility_step(std::vector<Vehicle>& vehicles, double dt_s);

/// Vehicles spread over the road, one lane each in turn, all heading +x.
std::vector<Vehicle> place_vehicles(const ScenarioConfig& cfg, Rng& rng);

struct ScenarioResult {
  CsvTable metrics;   // one row per slot
  CsvTable links;     // one row per slot and link
  CsvTable trace;     // formation trace from the warm-up
};

/// Formation warm-up, then per slot: mobility, data exchange, beamforming,
/// beam alignment and capacity over the data part of the slot. `model` is
/// required only for the gnn method; when absent one is trained from cfg.
ScenarioResult run_scenario(const ScenarioConfig& cfg, const gnn::GnnModel* model = nullptr);

/// (beamwidth_deg, scheme, overhead_s, gap_vs_baseline_pct) sorted by width.
CsvTable sweep_align(const ScenarioConfig& cfg, const std::vector<double>& widths_deg);

struct TrainOutput {
  gnn::GnnModel model;
  CsvTable loss;  // (epoch, mean_loss)
  bool diverged = false;
  std::string message;
};
TrainOutput train_gnn(const ScenarioConfig& cfg);

/// (instance_id, method, sum_capacity_bps, wall_time_s)
CsvTable eval_beamforming(const ScenarioConfig& cfg, const gnn::GnnModel& model);

/// Brute-force optimum per instance: (instance_id, links, sum_capacity_bps, active, beamwidth_deg, evaluated)
CsvTable oracle_table(const ScenarioConfig& cfg);

struct FuzzOutput {
  CsvTable summary;
  CsvTable trace;
  bool ok = false;
};
FuzzOutput fuzz(const ScenarioConfig& cfg);

/// Writes `table` to `csv_path` and a gnuplot script beside it that renders it.
/// Refuses an empty table.
void emit_plot_script(const CsvTable& table, const std::string& csv_path, const std::string& script_path);
std::string plot_script_text(const CsvTable& table, const std::string& csv_name);

}  // namespace convoy::sim
