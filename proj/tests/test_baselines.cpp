#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "convoy/baselines.hpp"
#include "convoy/error.hpp"
#include "convoy/gnn.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace convoy;
using namespace convoy::baseline;

namespace {

ChannelMatrix matrix(const std::vector<std::vector<double>>& g, double noise) {
  ChannelMatrix c;
  c.n = g.size();
  c.noise_w = noise;
  for (std::size_t j = 0; j < c.n; ++j)
    for (std::size_t i = 0; i < c.n; ++i) c.gains.push_back(g[j][i]);
  return c;
}

std::vector<std::vector<double>> rows(const ChannelMatrix& c) {
  std::vector<std::vector<double>> g(c.n, std::vector<double>(c.n));
  for (std::size_t j = 0; j < c.n; ++j)
    for (std::size_t i = 0; i < c.n; ++i) g[j][i] = c.gain(j, i);
  return g;
}

std::vector<std::vector<double>> random_gains(std::size_t n, Rng& rng) {
  std::vector<std::vector<double>> g(n, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) g[j][i] = j == i ? uniform(rng, 0.5, 2.0) : uniform(rng, 0.0, 1.0);
  return g;
}

}  // namespace

TEST_CASE("sum rate matches the oracle") {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto g = random_gains(4, rng);
    const std::vector<double> p{uniform01(rng), uniform01(rng), uniform01(rng), uniform01(rng)};
    CHECK(sum_rate(matrix(g, 0.1), p) == doctest::Approx(oracle::rate(g, 0.1, p)).epsilon(1e-12));
  }
}

TEST_CASE("wmmse single link uses full power") {
  WmmseConfig cfg;
  cfg.pmax_w = 0.1;
  const auto r = wmmse(matrix({{2.0}}, 1e-3), cfg);
  CHECK(r.powers[0] == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("wmmse under crushing interference") {
  // Each transmitter drowns the other receiver: one link should switch off.
  const std::vector<std::vector<double>> g{{1.0, 50.0}, {50.0, 1.0}};
  WmmseConfig cfg;
  cfg.pmax_w = 1.0;
  cfg.max_iterations = 2000;
  const auto r = wmmse(matrix(g, 0.01), cfg, std::vector<double>{1.0, 0.5});
  const double got = oracle::rate(g, 0.01, r.powers);
  CHECK(got >= 0.98 * oracle::grid_optimum(g, 0.01, 1.0, 101));
}

TEST_CASE("wmmse reaches the grid optimum on weakly coupled channels") {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    auto g = random_gains(3, rng);
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t i = 0; i < 3; ++i)
        if (i != j) g[j][i] *= 0.05;
    WmmseConfig cfg;
    cfg.pmax_w = 1.0;
    const auto r = wmmse(matrix(g, 0.05), cfg);
    const double best = oracle::grid_optimum(g, 0.05, 1.0, 51);
    CHECK(oracle::rate(g, 0.05, r.powers) >= 0.98 * best);
  }
}

TEST_CASE("wmmse under strong coupling is a local method") {
  // Never above the grid optimum by more than the grid's own resolution loss,
  // and still far better than silence.
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto g = random_gains(3, rng);
    WmmseConfig cfg;
    cfg.pmax_w = 1.0;
    const auto r = wmmse(matrix(g, 0.05), cfg);
    const double got = oracle::rate(g, 0.05, r.powers);
    const double best = oracle::grid_optimum(g, 0.05, 1.0, 51);
    CHECK(got <= best * 1.02);
    CHECK(got >= 0.5 * best);
  }
}

TEST_CASE("wmmse trace is monotone and feasible") {
  Rng rng(9);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(uniform_int(rng, 0, 6));
    const auto g = random_gains(n, rng);
    WmmseConfig cfg;
    cfg.pmax_w = uniform(rng, 0.1, 2.0);
    const auto r = wmmse(matrix(g, 0.02), cfg);
    REQUIRE(r.trace.size() == r.iterations + 1);
    for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k] >= r.trace[k - 1] * (1 - 1e-9));
    for (double p : r.powers) CHECK((p >= 0.0 && p <= cfg.pmax_w * (1 + 1e-12)));
    CHECK(r.trace.back() == doctest::Approx(oracle::rate(g, 0.02, r.powers)).epsilon(1e-9));
  }
}

TEST_CASE("wmmse converged powers are a fixed point") {
  Rng rng(3);
  const auto g = random_gains(4, rng);
  WmmseConfig cfg;
  cfg.pmax_w = 1.0;
  cfg.tolerance = 1e-13;
  cfg.max_iterations = 5000;
  const auto r = wmmse(matrix(g, 0.05), cfg);
  const auto again = wmmse(matrix(g, 0.05), cfg, r.powers);
  for (std::size_t k = 0; k < 4; ++k) CHECK(again.powers[k] == doctest::Approx(r.powers[k]).epsilon(1e-6).scale(1e-6));
}

TEST_CASE("wmmse argument errors") {
  WmmseConfig bad;
  bad.pmax_w = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  ChannelMatrix neg = matrix({{-1.0}}, 0.1);
  CHECK_THROWS_AS(wmmse(neg, WmmseConfig{}), Error);
  CHECK_THROWS_AS(wmmse(matrix({{1.0}}, 0.1), WmmseConfig{}, std::vector<double>{1.0, 1.0}), Error);
}

TEST_CASE("channel matrix from a link budget") {
  const rf::RfParams p;
  Rng rng(1);
  const auto links = gnn::random_links(3, rng);
  const rf::LinkBudget budget(links, p);
  const auto c = channel_matrix(budget, 8.0);
  CHECK(c.noise_w == p.noise_power_w());
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 3; ++i) CHECK(c.gain(j, i) == budget.pair_gain(j, i, 8.0, 8.0));
  CHECK(rows(c)[0][0] > 0.0);
}

TEST_CASE("brute force") {
  const rf::RfParams p;
  const std::vector<rf::LinkGeometry> one{{{0, 0, 1.5}, {20, 0, 1.5}, {}, {}}};
  const auto r1 = brute_force(rf::LinkBudget(one, p));
  CHECK(r1.decision.beamwidth_deg[0] == 1);
  CHECK(r1.decision.active[0] == 1);
  CHECK(r1.evaluated == 15);

  // Two links far apart cannot interfere, so the optimum is each alone.
  const std::vector<rf::LinkGeometry> apart{{{0, 0, 1.5}, {20, 0, 1.5}, {}, {}},
                                            {{5000, 900, 1.5}, {5030, 900, 1.5}, {}, {}}};
  const rf::LinkBudget ab(apart, p);
  const auto r2 = brute_force(ab);
  CHECK(r2.decision.active == std::vector<std::uint8_t>{1, 1});
  CHECK(r2.decision.beamwidth_deg == std::vector<int>{1, 1});
  const double each = rf::LinkBudget(std::span(apart).subspan(0, 1), p).sum_capacity(r1.decision) +
                      rf::LinkBudget(std::span(apart).subspan(1, 1), p).sum_capacity(r1.decision);
  CHECK(r2.capacity_bps == doctest::Approx(each).epsilon(1e-12));

  Rng rng(4);
  const auto five = gnn::random_links(5, rng);
  CHECK_THROWS_AS(brute_force(rf::LinkBudget(five, p)), Error);
}

TEST_CASE("brute force dominates every other decision") {
  const rf::RfParams p;
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const auto links = gnn::random_links(3, rng, gnn::LinkLayout{1, 3.5, 3, 5, 40});
    const rf::LinkBudget budget(links, p);
    const auto best = brute_force(budget);
    CHECK(best.capacity_bps == doctest::Approx(budget.sum_capacity(best.decision)).epsilon(1e-12));
    for (int s = 0; s < 20; ++s) {
      rf::BeamDecision d = random_decision(3, static_cast<std::uint64_t>(t * 100 + s));
      for (auto& a : d.active) a = bernoulli(rng, 0.7);
      if (d.active_count() == 0) d.active[0] = 1;
      CHECK(budget.sum_capacity(d) <= best.capacity_bps * (1 + 1e-12));
    }
  }
}

TEST_CASE("random decision") {
  CHECK(random_decision(6, 11) == random_decision(6, 11));
  std::set<std::vector<int>> seen;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto d = random_decision(6, s);
    CHECK(d.active_count() == 6);
    for (int w : d.beamwidth_deg) CHECK((w >= 1 && w <= 15));
    seen.insert(d.beamwidth_deg);
  }
  CHECK(seen.size() > 90);
}
