// Finite-difference check of the full GNN training loss, net by net.
#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "convoy/gnn.hpp"
#include "convoy/nn.hpp"
#include "oracles.hpp"

namespace check {

struct GnnGradcheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

/// Samples `per_net` coordinates of every message, update and readout net.
inline GnnGradcheck gnn_loss_gradcheck(convoy::gnn::GnnModel& model, std::span<const convoy::rf::LinkGeometry> links,
                                       const convoy::rf::RfParams& params, std::size_t per_net, std::uint64_t seed,
                                       double tolerance = 1e-4, double step = 1e-5) {
  using namespace convoy;
  const rf::LinkBudget budget(links, params);
  const auto graph = gnn::build_graph(budget, links, model.norm);
  gnn::ForwardCache cache;
  gnn::gnn_forward(model, graph, cache);
  const auto lv = gnn::loss(cache.outputs, budget);
  gnn::GnnGradients grads(model);
  gnn::gnn_backward(model, graph, cache, lv.d_outputs, grads);

  // The loss is ~1e11 while single coordinates move it by ~1e-2, beyond what a
  // double forward resolves. Differences are taken in extended precision,
  // relative to the starting value; kinks are still detected on the library pass.
  const long double origin = oracle::relaxed_loss(oracle::gnn_unrolled_as<long double>(model, graph), budget);
  auto evaluate = [&] {
    gnn::ForwardCache c;
    gnn::gnn_forward(model, graph, c);
    const long double l = oracle::relaxed_loss(oracle::gnn_unrolled_as<long double>(model, graph), budget);
    return nn::GradcheckProbe{static_cast<double>(l - origin), c.signature()};
  };
  std::vector<std::pair<std::span<double>, std::span<const double>>> parts;
  for (std::size_t k = 0; k < gnn::kLayers; ++k) {
    parts.emplace_back(model.message[k].params(), grads.message[k]);
    parts.emplace_back(model.update[k].params(), grads.update[k]);
  }
  parts.emplace_back(model.readout.params(), grads.readout);

  GnnGradcheck out;
  std::uint64_t s = seed;
  for (auto& [p, g] : parts) {
    const auto rep = nn::gradcheck(p, g, evaluate, tolerance, per_net, s++, step);
    out.max_rel_error = std::max(out.max_rel_error, rep.max_rel_error);
    out.checked += rep.checked;
    out.skipped += rep.skipped;
  }
  return out;
}

}  // namespace check
