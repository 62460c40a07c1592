#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "convoy/baselines.hpp"
#include "convoy/nn.hpp"
#include "convoy/rf.hpp"

namespace convoy::gnn {

inline constexpr std::size_t kLayers = 3;
inline constexpr std::size_t kRawWidth = 2;
inline constexpr std::size_t kEdgeWidth = 1;
inline constexpr std::size_t kEmbedWidth = 32;
inline constexpr std::size_t kReadoutHidden = 16;
inline constexpr int kMinBeamwidthDeg = 1;
inline constexpr int kMaxBeamwidthDeg = 15;
/// Cross gains (relative to transmit power) below this produce no edge.
inline constexpr double kEdgeFloorDb = -120.0;

/// Shift/scale constants for the log-domain features.
struct FeatureNorm {
  double gain_mean = -8.0;  // log10 of direct path gain
  double gain_std = 1.0;
  double dist_mean = 20.0;  // meters
  double dist_std = 10.0;
  double edge_scale = 4.0;  // log10 decades above the floor
  double snr_scale = 10.0;  // log10 of widest-beam SNR is divided by this

  /// Fits the constants on a sample of link sets.
  static FeatureNorm fit(std::span<const std::vector<rf::LinkGeometry>> sample, const rf::RfParams& params);
  friend bool operator==(const FeatureNorm&, const FeatureNorm&) = default;
};

struct Edge {
  std::size_t from;  // transmitter j
  std::size_t to;    // receiver i
  double feature;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// One vertex per transmitter-receiver pair; directed edge j -> i whenever the
/// widest codebook beams would let transmitter j reach receiver i above the floor.
struct InterferenceGraph {
  std::size_t n = 0;
  std::vector<std::array<double, kRawWidth>> x;
  std::vector<double> direct_gain;  // readout scalar per vertex
  std::vector<Edge> edges;
  std::vector<std::vector<std::size_t>> incoming;  // edge indices by receiving vertex

  void validate() const;
  friend bool operator==(const InterferenceGraph&, const InterferenceGraph&) = default;
};

InterferenceGraph build_graph(std::span<const rf::LinkGeometry> links, const rf::RfParams& params,
                              const FeatureNorm& norm = {});
InterferenceGraph build_graph(const rf::LinkBudget& budget, std::span<const rf::LinkGeometry> links,
                              const FeatureNorm& norm);

/// Reorders vertices: vertex k of the result is vertex perm[k] of `g`.
InterferenceGraph permute(const InterferenceGraph& g, std::span<const std::size_t> perm);

class GnnModel {
 public:
  GnnModel();
  static GnnModel create(Rng& rng);

  std::array<nn::DenseNet, kLayers> message;
  std::array<nn::DenseNet, kLayers> update;
  nn::DenseNet readout;
  FeatureNorm norm;

  std::size_t parameter_count() const;
  void validate() const;

  void save(std::ostream& out) const;
  static GnnModel load(std::istream& in);
  void save(const std::string& path) const;
  static GnnModel load(const std::string& path);

  friend bool operator==(const GnnModel&, const GnnModel&) = default;
};

/// Gradient buffers laid out like the model's nets.
struct GnnGradients {
  std::array<std::vector<double>, kLayers> message;
  std::array<std::vector<double>, kLayers> update;
  std::vector<double> readout;

  explicit GnnGradients(const GnnModel& model);
  void zero();
  void scale(double s);
  void add(const GnnGradients& other);
};

/// Everything the backward pass needs from a forward evaluation.
struct ForwardCache {
  std::vector<std::vector<std::vector<double>>> embeddings;  // [k][vertex] for k = 0..K
  std::vector<std::vector<nn::DenseNet::Tape>> message_tapes;
  std::vector<std::vector<nn::DenseNet::Tape>> update_tapes;
  std::vector<std::vector<std::vector<std::ptrdiff_t>>> argmax;  // [k][vertex][channel] winning edge or -1
  std::vector<nn::DenseNet::Tape> readout_tapes;
  std::vector<double> outputs;

  std::uint64_t signature() const;
};

std::vector<double> gnn_forward(const GnnModel& model, const InterferenceGraph& graph);
void gnn_forward(const GnnModel& model, const InterferenceGraph& graph, ForwardCache& cache);
/// Accumulates parameter gradients for upstream dL/d(outputs).
void gnn_backward(const GnnModel& model, const InterferenceGraph& graph, const ForwardCache& cache,
                  std::span<const double> d_outputs, GnnGradients& grads);

double sigmoid(double z);
/// Relaxed beamwidth in degrees, 1 + 14 * sigmoid(o).
double relaxed_beamwidth(double output);

/// Beamwidths from the readout, then greedy link deactivation while it helps.
rf::BeamDecision decode_decision(std::span<const double> outputs, const rf::LinkBudget& budget);

struct LossValue {
  double value = 0.0;
  std::vector<double> d_outputs;
  std::vector<double> sinr;
};

inline constexpr double kSoftConeTemperature = 0.05;

/// Negative relaxed sum capacity with every link active.
LossValue loss(std::span<const double> outputs, const rf::LinkBudget& budget,
               double temperature = kSoftConeTemperature);

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t epochs = 200;
  std::size_t instances_per_epoch = 8;
  std::uint64_t seed = 1;
  double temperature = kSoftConeTemperature;

  void validate() const;
};

using InstanceGenerator = std::function<std::vector<rf::LinkGeometry>(Rng&)>;

struct TrainResult {
  std::vector<double> epoch_loss;  // mean loss per epoch, evaluated before that epoch's update
  bool diverged = false;
  std::string message;
};

TrainResult train(GnnModel& model, const InstanceGenerator& generator, const rf::RfParams& params,
                  const TrainConfig& cfg);

/// Random V2V pairs on a straight multi-lane road.
struct LinkLayout {
  std::size_t lanes = 3;
  double lane_width_m = 3.5;
  double road_per_link_m = 20.0;
  double min_link_m = 5.0;
  double max_link_m = 40.0;
  double antenna_height_m = 1.5;
};
std::vector<rf::LinkGeometry> random_links(std::size_t n, Rng& rng, const LinkLayout& layout = {});

struct InferenceTiming {
  rf::BeamDecision decision;
  double wall_time_s = 0.0;
};
/// Graph construction, forward pass and decoding, timed together.
InferenceTiming infer(const GnnModel& model, std::span<const rf::LinkGeometry> links, const rf::RfParams& params);

struct EvaluationRow {
  std::size_t instance_id;
  std::string method;
  double sum_capacity_bps;
  double wall_time_s;
};

struct EvaluationOptions {
  baseline::WmmseConfig wmmse;
  double wmmse_beamwidth_deg = 8.0;
  std::uint64_t random_seed = 1;
  std::size_t timing_repeats = 1;
};

/// Capacity and inference time of gnn, wmmse, random and (n <= 4) oracle on
/// every instance.
std::vector<EvaluationRow> evaluate(const GnnModel& model, std::span<const std::vector<rf::LinkGeometry>> instances,
                                    const rf::RfParams& params, const EvaluationOptions& opts);

}  // namespace convoy::gnn
