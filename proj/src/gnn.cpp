#include "convoy/gnn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "convoy/error.hpp"

namespace convoy::gnn {

namespace {

constexpr char kModelMagic[4] = {'C', 'V', 'G', 'N'};
constexpr std::uint32_t kModelFormat = 1;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

double widest_direct_gain(const rf::LinkBudget& budget, std::size_t i) {
  return budget.pair_gain(i, i, kMaxBeamwidthDeg, kMaxBeamwidthDeg);
}

struct MeanStd {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++count;
  }
  double mean(double fallback) const { return count ? sum / static_cast<double>(count) : fallback; }
  double stddev(double fallback) const {
    if (count < 2) return fallback;
    const double m = sum / static_cast<double>(count);
    const double var = sum_sq / static_cast<double>(count) - m * m;
    return var > 1e-18 ? std::sqrt(var) : fallback;
  }
};

}  // namespace

FeatureNorm FeatureNorm::fit(std::span<const std::vector<rf::LinkGeometry>> sample, const rf::RfParams& params) {
  FeatureNorm norm;
  MeanStd gain, dist, edge;
  const double floor_log = kEdgeFloorDb / 10.0;
  for (const auto& links : sample) {
    const rf::LinkBudget budget(links, params);
    for (std::size_t i = 0; i < budget.size(); ++i) {
      gain.add(std::log10(budget.path(i, i)));
      dist.add(links[i].distance());
      for (std::size_t j = 0; j < budget.size(); ++j) {
        if (j == i) continue;
        const double g = budget.pair_gain(j, i, kMaxBeamwidthDeg, kMaxBeamwidthDeg);
        if (g > 0.0 && std::log10(g) >= floor_log) edge.add(std::log10(g) - floor_log);
      }
    }
  }
  norm.gain_mean = gain.mean(norm.gain_mean);
  norm.gain_std = gain.stddev(1.0);
  norm.dist_mean = dist.mean(norm.dist_mean);
  norm.dist_std = dist.stddev(1.0);
  const double e = edge.mean(norm.edge_scale);
  norm.edge_scale = e > 1e-9 ? e : 1.0;
  return norm;
}

void InterferenceGraph::validate() const {
  if (x.size() != n || direct_gain.size() != n || incoming.size() != n) fail(ErrorCode::Shape, "graph vertex arrays disagree");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    if (e.from >= n || e.to >= n) fail(ErrorCode::Shape, "edge endpoint out of range");
    if (e.from == e.to) fail(ErrorCode::Shape, "self edges are not allowed");
    if (!(e.feature >= 0.0)) fail(ErrorCode::Shape, "edge features must be non-negative");
  }
}

InterferenceGraph build_graph(std::span<const rf::LinkGeometry> links, const rf::RfParams& params,
                              const FeatureNorm& norm) {
  if (links.empty()) fail(ErrorCode::Domain, "an interference graph needs at least one link");
  const rf::LinkBudget budget(links, params);
  return build_graph(budget, links, norm);
}

InterferenceGraph build_graph(const rf::LinkBudget& budget, std::span<const rf::LinkGeometry> links,
                              const FeatureNorm& norm) {
  const std::size_t n = budget.size();
  if (n == 0 || links.size() != n) fail(ErrorCode::Domain, "an interference graph needs at least one link");
  const rf::RfParams& params = budget.params();
  const double floor_log = kEdgeFloorDb / 10.0;

  InterferenceGraph g;
  g.n = n;
  g.x.resize(n);
  g.direct_gain.resize(n);
  g.incoming.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.x[i] = {(std::log10(budget.path(i, i)) - norm.gain_mean) / norm.gain_std,
              (links[i].distance() - norm.dist_mean) / norm.dist_std};
    const double snr = params.tx_power_w * widest_direct_gain(budget, i) / params.noise_power_w();
    g.direct_gain[i] = std::log10(snr) / norm.snr_scale;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double cross = budget.pair_gain(j, i, kMaxBeamwidthDeg, kMaxBeamwidthDeg);
      if (!(cross > 0.0) || std::log10(cross) < floor_log) continue;
      g.incoming[i].push_back(g.edges.size());
      g.edges.push_back({j, i, (std::log10(cross) - floor_log) / norm.edge_scale});
    }
  }
  return g;
}

InterferenceGraph permute(const InterferenceGraph& g, std::span<const std::size_t> perm) {
  if (perm.size() != g.n) fail(ErrorCode::Shape, "permutation size mismatch");
  std::vector<std::size_t> inv(g.n, g.n);
  for (std::size_t k = 0; k < g.n; ++k) {
    if (perm[k] >= g.n || inv[perm[k]] != g.n) fail(ErrorCode::Shape, "not a permutation");
    inv[perm[k]] = k;
  }
  InterferenceGraph out;
  out.n = g.n;
  out.x.resize(g.n);
  out.direct_gain.resize(g.n);
  out.incoming.resize(g.n);
  for (std::size_t k = 0; k < g.n; ++k) {
    out.x[k] = g.x[perm[k]];
    out.direct_gain[k] = g.direct_gain[perm[k]];
  }
  for (const Edge& e : g.edges) {
    out.incoming[inv[e.to]].push_back(out.edges.size());
    out.edges.push_back({inv[e.from], inv[e.to], e.feature});
  }
  return out;
}

GnnModel::GnnModel()
    : message{nn::DenseNet({2 * kRawWidth + kEdgeWidth, kEmbedWidth, kEmbedWidth}),
              nn::DenseNet({2 * kEmbedWidth + kEdgeWidth, kEmbedWidth, kEmbedWidth}),
              nn::DenseNet({2 * kEmbedWidth + kEdgeWidth, kEmbedWidth, kEmbedWidth})},
      update{nn::DenseNet({kRawWidth + kEmbedWidth, kEmbedWidth, kEmbedWidth}),
             nn::DenseNet({2 * kEmbedWidth, kEmbedWidth, kEmbedWidth}),
             nn::DenseNet({2 * kEmbedWidth, kEmbedWidth, kEmbedWidth})},
      readout({kEmbedWidth + kRawWidth + 1, kReadoutHidden, 1}) {}

GnnModel GnnModel::create(Rng& rng) {
  GnnModel m;
  for (std::size_t k = 0; k < kLayers; ++k) {
    m.message[k] = nn::DenseNet::glorot(m.message[k].widths(), rng);
    m.update[k] = nn::DenseNet::glorot(m.update[k].widths(), rng);
  }
  m.readout = nn::DenseNet::glorot(m.readout.widths(), rng);
  return m;
}

std::size_t GnnModel::parameter_count() const {
  std::size_t total = readout.parameter_count();
  for (std::size_t k = 0; k < kLayers; ++k) total += message[k].parameter_count() + update[k].parameter_count();
  return total;
}

void GnnModel::validate() const {
  std::size_t width = kRawWidth;
  for (std::size_t k = 0; k < kLayers; ++k) {
    if (message[k].input_width() != 2 * width + kEdgeWidth) fail(ErrorCode::Shape, "message net input width inconsistent");
    const std::size_t agg = message[k].output_width();
    if (update[k].input_width() != width + agg) fail(ErrorCode::Shape, "update net input width inconsistent");
    width = update[k].output_width();
  }
  if (readout.input_width() != width + kRawWidth + 1 || readout.output_width() != 1) {
    fail(ErrorCode::Shape, "readout widths inconsistent");
  }
}

void GnnModel::save(std::ostream& out) const {
  out.write(kModelMagic, 4);
  nn::io::write_u32(out, kModelFormat);
  nn::io::write_u32(out, static_cast<std::uint32_t>(kLayers));
  for (double v : {norm.gain_mean, norm.gain_std, norm.dist_mean, norm.dist_std, norm.edge_scale, norm.snr_scale}) {
    nn::io::write_f64(out, v);
  }
  for (std::size_t k = 0; k < kLayers; ++k) {
    message[k].write(out);
    update[k].write(out);
  }
  readout.write(out);
  if (!out) fail(ErrorCode::Io, "failed writing model checkpoint");
}

GnnModel GnnModel::load(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kModelMagic, 4) != 0) fail(ErrorCode::Io, "not a model checkpoint");
  if (nn::io::read_u32(in) != kModelFormat) fail(ErrorCode::Io, "unsupported checkpoint version");
  if (nn::io::read_u32(in) != kLayers) fail(ErrorCode::Io, "checkpoint layer count mismatch");
  GnnModel m;
  for (double* v : {&m.norm.gain_mean, &m.norm.gain_std, &m.norm.dist_mean, &m.norm.dist_std, &m.norm.edge_scale,
                    &m.norm.snr_scale}) {
    *v = nn::io::read_f64(in);
  }
  for (std::size_t k = 0; k < kLayers; ++k) {
    m.message[k] = nn::DenseNet::read(in);
    m.update[k] = nn::DenseNet::read(in);
  }
  m.readout = nn::DenseNet::read(in);
  m.validate();
  return m;
}

void GnnModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open checkpoint for writing: " + path);
  save(out);
}

GnnModel GnnModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open checkpoint: " + path);
  return load(in);
}

GnnGradients::GnnGradients(const GnnModel& model) : readout(model.readout.parameter_count(), 0.0) {
  for (std::size_t k = 0; k < kLayers; ++k) {
    message[k].assign(model.message[k].parameter_count(), 0.0);
    update[k].assign(model.update[k].parameter_count(), 0.0);
  }
}

void GnnGradients::zero() {
  for (std::size_t k = 0; k < kLayers; ++k) {
    std::fill(message[k].begin(), message[k].end(), 0.0);
    std::fill(update[k].begin(), update[k].end(), 0.0);
  }
  std::fill(readout.begin(), readout.end(), 0.0);
}

void GnnGradients::scale(double s) {
  auto apply = [s](std::vector<double>& v) {
    for (double& x : v) x *= s;
  };
  for (std::size_t k = 0; k < kLayers; ++k) {
    apply(message[k]);
    apply(update[k]);
  }
  apply(readout);
}

void GnnGradients::add(const GnnGradients& other) {
  auto apply = [](std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  for (std::size_t k = 0; k < kLayers; ++k) {
    apply(message[k], other.message[k]);
    apply(update[k], other.update[k]);
  }
  apply(readout, other.readout);
}

std::uint64_t ForwardCache::signature() const {
  std::uint64_t h = 0x1234;
  for (const auto& layer : message_tapes) {
    for (const auto& t : layer) h = nn::DenseNet::activation_signature(t, h);
  }
  for (const auto& layer : update_tapes) {
    for (const auto& t : layer) h = nn::DenseNet::activation_signature(t, h);
  }
  for (const auto& t : readout_tapes) h = nn::DenseNet::activation_signature(t, h);
  for (const auto& layer : argmax) {
    for (const auto& v : layer) {
      for (auto e : v) h = mix(h, static_cast<std::uint64_t>(e + 1));
    }
  }
  return h;
}

void gnn_forward(const GnnModel& model, const InterferenceGraph& graph, ForwardCache& cache) {
  graph.validate();
  model.validate();
  const std::size_t n = graph.n;
  cache.embeddings.assign(kLayers + 1, {});
  cache.message_tapes.assign(kLayers, {});
  cache.update_tapes.assign(kLayers, {});
  cache.argmax.assign(kLayers, {});
  cache.embeddings[0].resize(n);
  for (std::size_t i = 0; i < n; ++i) cache.embeddings[0][i].assign(graph.x[i].begin(), graph.x[i].end());

  std::vector<double> input;
  for (std::size_t k = 0; k < kLayers; ++k) {
    const auto& h = cache.embeddings[k];
    const nn::DenseNet& phi = model.message[k];
    const nn::DenseNet& gamma = model.update[k];
    const std::size_t agg_width = phi.output_width();

    auto& mtapes = cache.message_tapes[k];
    mtapes.resize(graph.edges.size());
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      const Edge& edge = graph.edges[e];
      input.clear();
      input.insert(input.end(), h[edge.to].begin(), h[edge.to].end());
      input.insert(input.end(), h[edge.from].begin(), h[edge.from].end());
      input.push_back(edge.feature);
      phi.forward(input, mtapes[e]);
    }

    auto& utapes = cache.update_tapes[k];
    utapes.resize(n);
    auto& arg = cache.argmax[k];
    arg.assign(n, std::vector<std::ptrdiff_t>(agg_width, -1));
    auto& next = cache.embeddings[k + 1];
    next.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> agg(agg_width, 0.0);
      for (std::size_t c = 0; c < agg_width; ++c) {
        for (std::size_t e : graph.incoming[i]) {
          const double m = mtapes[e].act.back()[c];
          if (arg[i][c] < 0 || m > agg[c]) {
            agg[c] = m;
            arg[i][c] = static_cast<std::ptrdiff_t>(e);
          }
        }
      }
      input.assign(h[i].begin(), h[i].end());
      input.insert(input.end(), agg.begin(), agg.end());
      gamma.forward(input, utapes[i]);
      next[i] = utapes[i].act.back();
    }
  }

  cache.readout_tapes.resize(n);
  cache.outputs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    input.assign(cache.embeddings[kLayers][i].begin(), cache.embeddings[kLayers][i].end());
    input.insert(input.end(), graph.x[i].begin(), graph.x[i].end());
    input.push_back(graph.direct_gain[i]);
    model.readout.forward(input, cache.readout_tapes[i]);
    cache.outputs[i] = cache.readout_tapes[i].act.back()[0];
  }
}

std::vector<double> gnn_forward(const GnnModel& model, const InterferenceGraph& graph) {
  ForwardCache cache;
  gnn_forward(model, graph, cache);
  return std::move(cache.outputs);
}

void gnn_backward(const GnnModel& model, const InterferenceGraph& graph, const ForwardCache& cache,
                  std::span<const double> d_outputs, GnnGradients& grads) {
  const std::size_t n = graph.n;
  if (d_outputs.size() != n || cache.outputs.size() != n) fail(ErrorCode::Shape, "output gradient size mismatch");

  // dL/d embedding at the current depth.
  std::vector<std::vector<double>> dh(n);
  std::vector<double> in_grad(model.readout.input_width());
  for (std::size_t i = 0; i < n; ++i) {
    const double up = d_outputs[i];
    model.readout.backward(cache.readout_tapes[i], std::span<const double>(&up, 1), grads.readout, in_grad);
    dh[i].assign(in_grad.begin(), in_grad.begin() + static_cast<std::ptrdiff_t>(cache.embeddings[kLayers][i].size()));
  }

  for (std::size_t k = kLayers; k-- > 0;) {
    const nn::DenseNet& phi = model.message[k];
    const nn::DenseNet& gamma = model.update[k];
    const std::size_t width = cache.embeddings[k].empty() ? 0 : cache.embeddings[k][0].size();
    const std::size_t agg_width = phi.output_width();

    std::vector<std::vector<double>> dprev(n, std::vector<double>(width, 0.0));
    std::vector<std::vector<double>> dmsg(graph.edges.size(), std::vector<double>(agg_width, 0.0));
    std::vector<double> ugrad(gamma.input_width());
    for (std::size_t i = 0; i < n; ++i) {
      gamma.backward(cache.update_tapes[k][i], dh[i], grads.update[k], ugrad);
      for (std::size_t c = 0; c < width; ++c) dprev[i][c] += ugrad[c];
      for (std::size_t c = 0; c < agg_width; ++c) {
        const auto e = cache.argmax[k][i][c];
        if (e >= 0) dmsg[static_cast<std::size_t>(e)][c] += ugrad[width + c];
      }
    }
    std::vector<double> mgrad(phi.input_width());
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      const auto& d = dmsg[e];
      if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) continue;
      phi.backward(cache.message_tapes[k][e], d, grads.message[k], mgrad);
      const Edge& edge = graph.edges[e];
      for (std::size_t c = 0; c < width; ++c) {
        dprev[edge.to][c] += mgrad[c];
        dprev[edge.from][c] += mgrad[width + c];
      }
    }
    dh.swap(dprev);
  }
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double relaxed_beamwidth(double output) {
  return kMinBeamwidthDeg + (kMaxBeamwidthDeg - kMinBeamwidthDeg) * sigmoid(output);
}

rf::BeamDecision decode_decision(std::span<const double> outputs, const rf::LinkBudget& budget) {
  const std::size_t n = budget.size();
  if (outputs.size() != n) fail(ErrorCode::Shape, "one readout per link required");
  rf::BeamDecision d;
  d.active.assign(n, 1);
  d.beamwidth_deg.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double o = std::isfinite(outputs[i]) ? outputs[i] : (outputs[i] > 0 ? 1e300 : -1e300);
    const long w = std::lround(relaxed_beamwidth(o));
    d.beamwidth_deg[i] = static_cast<int>(std::clamp<long>(w, kMinBeamwidthDeg, kMaxBeamwidthDeg));
  }
  double current = budget.sum_capacity(d);
  while (d.active_count() > 1) {
    std::size_t best_link = n;
    double best = current;
    for (std::size_t k = 0; k < n; ++k) {
      if (!d.active[k]) continue;
      d.active[k] = 0;
      const double c = budget.sum_capacity(d);
      d.active[k] = 1;
      if (c > best) {
        best = c;
        best_link = k;
      }
    }
    if (best_link == n) break;
    d.active[best_link] = 0;
    current = best;
  }
  return d;
}

LossValue loss(std::span<const double> outputs, const rf::LinkBudget& budget, double temperature) {
  const std::size_t n = budget.size();
  if (outputs.size() != n) fail(ErrorCode::Shape, "one readout per link required");
  LossValue out;
  out.d_outputs.assign(n, 0.0);
  out.sinr.assign(n, 0.0);
  const rf::RfParams& p = budget.params();
  if (p.bandwidth_hz == 0.0) return out;

  std::vector<double> width(n), dwidth_do(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = sigmoid(outputs[i]);
    width[i] = deg_to_rad(kMinBeamwidthDeg + (kMaxBeamwidthDeg - kMinBeamwidthDeg) * s);
    dwidth_do[i] = deg_to_rad((kMaxBeamwidthDeg - kMinBeamwidthDeg) * s * (1.0 - s));
  }

  const double power = p.tx_power_w;
  const double noise = p.noise_power_w();
  std::vector<double> dloss_dwidth(n, 0.0);
  const double inv_ln2 = 1.0 / std::log(2.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto st = rf::soft_cone_gain(width[i], budget.tx_offset(i, i), temperature);
    const auto sr = rf::soft_cone_gain(width[i], budget.rx_offset(i, i), temperature);
    const double signal = power * budget.path(i, i) * st.value * sr.value;
    const double d_signal_dwi = power * budget.path(i, i) * (st.d_width * sr.value + st.value * sr.d_width);

    double interference = 0.0;
    // Cached per-interferer partials of I_i w.r.t. w_j (tx side) and w_i (rx side).
    std::vector<double> d_int_dwj(n, 0.0);
    double d_int_dwi = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto gt = rf::soft_cone_gain(width[j], budget.tx_offset(j, i), temperature);
      const auto gr = rf::soft_cone_gain(width[i], budget.rx_offset(j, i), temperature);
      const double base = power * budget.path(j, i);
      interference += base * gt.value * gr.value;
      d_int_dwj[j] = base * gt.d_width * gr.value;
      d_int_dwi += base * gt.value * gr.d_width;
    }
    const double denom = noise + interference;
    const double sinr = signal / denom;
    if (!std::isfinite(sinr)) fail(ErrorCode::Numerical, "non-finite SINR in training loss");
    out.sinr[i] = sinr;
    out.value -= p.bandwidth_hz * std::log2(1.0 + sinr);

    const double dl_dsinr = -p.bandwidth_hz * inv_ln2 / (1.0 + sinr);
    const double dl_dsignal = dl_dsinr / denom;
    const double dl_dint = -dl_dsinr * signal / (denom * denom);
    dloss_dwidth[i] += dl_dsignal * d_signal_dwi + dl_dint * d_int_dwi;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dloss_dwidth[j] += dl_dint * d_int_dwj[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) out.d_outputs[i] = dloss_dwidth[i] * dwidth_do[i];
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail(ErrorCode::Config, "learning rate must be >= 0");
  if (epochs < 1) fail(ErrorCode::Config, "training needs at least one epoch");
  if (instances_per_epoch < 1) fail(ErrorCode::Config, "training needs at least one instance per epoch");
  if (!(temperature > 0.0)) fail(ErrorCode::Config, "soft cone temperature must be positive");
}

TrainResult train(GnnModel& model, const InstanceGenerator& generator, const rf::RfParams& params,
                  const TrainConfig& cfg) {
  cfg.validate();
  params.validate();
  model.validate();

  {
    Rng norm_rng = derive_rng(cfg.seed, 0);
    std::vector<std::vector<rf::LinkGeometry>> sample;
    for (int k = 0; k < 100; ++k) sample.push_back(generator(norm_rng));
    model.norm = FeatureNorm::fit(sample, params);
  }

  std::array<nn::AdamState, kLayers> adam_message, adam_update;
  for (std::size_t k = 0; k < kLayers; ++k) {
    adam_message[k] = nn::AdamState(model.message[k].parameter_count(), cfg.learning_rate);
    adam_update[k] = nn::AdamState(model.update[k].parameter_count(), cfg.learning_rate);
  }
  nn::AdamState adam_readout(model.readout.parameter_count(), cfg.learning_rate);

  TrainResult result;
  Rng rng = derive_rng(cfg.seed, 1);
  GnnGradients grads(model);
  ForwardCache cache;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    grads.zero();
    double total = 0.0;
    for (std::size_t s = 0; s < cfg.instances_per_epoch; ++s) {
      const auto links = generator(rng);
      const rf::LinkBudget budget(links, params);
      const auto graph = build_graph(budget, links, model.norm);
      gnn_forward(model, graph, cache);
      LossValue lv;
      try {
        lv = loss(cache.outputs, budget, cfg.temperature);
      } catch (const Error& e) {
        result.diverged = true;
        result.message = e.what();
        return result;
      }
      if (!std::isfinite(lv.value)) {
        result.diverged = true;
        result.message = "non-finite loss at epoch " + std::to_string(epoch);
        return result;
      }
      total += lv.value;
      gnn_backward(model, graph, cache, lv.d_outputs, grads);
    }
    const double mean = total / static_cast<double>(cfg.instances_per_epoch);
    result.epoch_loss.push_back(mean);
    grads.scale(1.0 / static_cast<double>(cfg.instances_per_epoch));
    try {
      for (std::size_t k = 0; k < kLayers; ++k) {
        nn::adam_step(model.message[k].params(), grads.message[k], adam_message[k]);
        nn::adam_step(model.update[k].params(), grads.update[k], adam_update[k]);
      }
      nn::adam_step(model.readout.params(), grads.readout, adam_readout);
    } catch (const Error& e) {
      result.diverged = true;
      result.message = e.what();
      return result;
    }
  }
  return result;
}

std::vector<rf::LinkGeometry> random_links(std::size_t n, Rng& rng, const LinkLayout& layout) {
  std::vector<rf::LinkGeometry> links;
  links.reserve(n);
  const double road = layout.road_per_link_m * static_cast<double>(std::max<std::size_t>(n, 1));
  const auto lanes = static_cast<std::int64_t>(std::max<std::size_t>(layout.lanes, 1));
  for (std::size_t k = 0; k < n; ++k) {
    const double x = uniform(rng, 0.0, road);
    const auto lane = uniform_int(rng, 0, lanes - 1);
    const auto rx_lane = std::clamp<std::int64_t>(lane + uniform_int(rng, -1, 1), 0, lanes - 1);
    const double dir = bernoulli(rng, 0.5) ? 1.0 : -1.0;
    const double dy = static_cast<double>(rx_lane - lane) * layout.lane_width_m;
    const double length = uniform(rng, layout.min_link_m, layout.max_link_m);
    const double dx = std::sqrt(std::max(length * length - dy * dy, 1.0));
    const double speed = uniform(rng, 20.0, 30.0);
    rf::LinkGeometry g;
    g.tx_position = {x, static_cast<double>(lane) * layout.lane_width_m, layout.antenna_height_m};
    g.rx_position = {x + dir * dx, static_cast<double>(rx_lane) * layout.lane_width_m, layout.antenna_height_m};
    g.tx_velocity = {speed, 0.0, 0.0};
    g.rx_velocity = {speed, 0.0, 0.0};
    links.push_back(g);
  }
  return links;
}

InferenceTiming infer(const GnnModel& model, std::span<const rf::LinkGeometry> links, const rf::RfParams& params) {
  const auto start = std::chrono::steady_clock::now();
  const rf::LinkBudget budget(links, params);
  const auto graph = build_graph(budget, links, model.norm);
  const auto outputs = gnn_forward(model, graph);
  InferenceTiming t;
  t.decision = decode_decision(outputs, budget);
  t.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return t;
}

std::vector<EvaluationRow> evaluate(const GnnModel& model, std::span<const std::vector<rf::LinkGeometry>> instances,
                                    const rf::RfParams& params, const EvaluationOptions& opts) {
  using clock = std::chrono::steady_clock;
  std::vector<EvaluationRow> rows;
  const std::size_t repeats = std::max<std::size_t>(opts.timing_repeats, 1);
  baseline::WmmseConfig wcfg = opts.wmmse;
  wcfg.pmax_w = params.tx_power_w;
  for (std::size_t id = 0; id < instances.size(); ++id) {
    const auto& links = instances[id];
    const rf::LinkBudget budget(links, params);

    std::vector<double> times;
    InferenceTiming gnn_run;
    for (std::size_t r = 0; r < repeats; ++r) {
      gnn_run = infer(model, links, params);
      times.push_back(gnn_run.wall_time_s);
    }
    std::sort(times.begin(), times.end());
    rows.push_back({id, "gnn", budget.sum_capacity(gnn_run.decision), times[times.size() / 2]});

    times.clear();
    baseline::WmmseResult w;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto start = clock::now();
      const rf::LinkBudget b(links, params);
      const auto channel = baseline::channel_matrix(b, opts.wmmse_beamwidth_deg);
      w = baseline::wmmse(channel, wcfg);
      times.push_back(std::chrono::duration<double>(clock::now() - start).count());
    }
    std::sort(times.begin(), times.end());
    const auto channel = baseline::channel_matrix(budget, opts.wmmse_beamwidth_deg);
    rows.push_back({id, "wmmse", params.bandwidth_hz * baseline::sum_rate(channel, w.powers), times[times.size() / 2]});

    {
      const auto start = clock::now();
      const auto d = baseline::random_decision(links.size(), opts.random_seed + id);
      const double c = budget.sum_capacity(d);
      rows.push_back({id, "random", c, std::chrono::duration<double>(clock::now() - start).count()});
    }
    if (links.size() <= baseline::kBruteForceMaxLinks) {
      const auto start = clock::now();
      const auto best = baseline::brute_force(budget);
      rows.push_back({id, "oracle", best.capacity_bps, std::chrono::duration<double>(clock::now() - start).count()});
    }
  }
  return rows;
}

}  // namespace convoy::gnn
