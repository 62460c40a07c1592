#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "convoy/error.hpp"
#include "convoy/scenario.hpp"
#include "doctest.h"

using namespace convoy;
using namespace convoy::sim;

namespace {

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
    return e.what();
  }
  FAIL("config accepted");
  return {};
}

ScenarioConfig small(std::uint64_t seed) {
  ScenarioConfig c;
  c.seed = seed;
  c.vehicles = 5;
  c.slots = 10;
  c.method = BeamMethod::Fixed;
  return c;
}

std::size_t column(const CsvTable& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return i;
  FAIL("missing column " << name);
  return 0;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config("# comment\nseed = 7\n\nscenario.vehicles = 4  # trailing\nbeam.method = wmmse\n");
  CHECK(c.seed == std::uint64_t{7});
  CHECK(c.vehicles == 4);
  CHECK(c.method == BeamMethod::Wmmse);
  CHECK_NOTHROW(c.validate());

  const auto unknown = message_of("seed = 1\nno.such_key = 3\n");
  CHECK(unknown.find("line 2") != std::string::npos);
  CHECK(unknown.find("no.such_key") != std::string::npos);
  const auto bad = message_of("scenario.slots = many\n");
  CHECK(bad.find("line 1") != std::string::npos);
  CHECK(bad.find("scenario.slots") != std::string::npos);
  message_of("seed 5\n");
  message_of("scenario.vehicles = 0\n");
  message_of("beam.fixed_width_deg = 16\n");
  message_of("align.scheme = carrier_pigeon\n");

  ScenarioConfig no_seed;
  CHECK_THROWS_AS(no_seed.validate(), Error);
  ScenarioConfig drop = small(1);
  drop.protocol.network.drop_prob = 1.0;
  CHECK_THROWS_AS(drop.validate(), Error);
}

TEST_CASE("config text round trip") {
  ScenarioConfig c = small(42);
  c.sweep_widths_deg = {2.5, 7};
  c.set("rf.tx_power_w", "0.25");
  const auto back = parse_config(c.to_text());
  CHECK(back.to_text() == c.to_text());
  for (const auto& k : ScenarioConfig::keys()) CHECK(back.get(k) == c.get(k));
  CHECK(c.get("rf.tx_power_w") == "0.25");
  CHECK_THROWS_AS(c.get("nope"), Error);
}

TEST_CASE("mobility") {
  std::vector<Vehicle> v{{0, {0, 0, 1.5}, {25, 0, 0}}, {1, {10, 3.5, 1.5}, {20, 0, 0}}};
  mobility_step(v, 0.1);
  CHECK(v[0].position.x == doctest::Approx(2.5));
  CHECK(v[1].position.x == doctest::Approx(12.0));
  CHECK(v[1].position.y == 3.5);
  CHECK_THROWS_AS(mobility_step(v, 0.0), Error);

  ScenarioConfig c = small(3);
  Rng rng(3);
  const auto placed = place_vehicles(c, rng);
  REQUIRE(placed.size() == 5);
  for (const auto& p : placed) {
    CHECK((p.position.x >= 0 && p.position.x <= c.road_length_m));
    CHECK((p.velocity.x >= c.speed_min_mps && p.velocity.x <= c.speed_max_mps));
  }
}

TEST_CASE("a single vehicle has nothing to send") {
  ScenarioConfig c = small(1);
  c.vehicles = 1;
  const auto r = run_scenario(c);
  REQUIRE(r.metrics.rows.size() == 10);
  for (const auto& row : r.metrics.rows) CHECK(row[column(r.metrics, "sum_capacity_bps")] == "0");
  CHECK(r.links.rows.empty());
}

TEST_CASE("scenario runs are deterministic and account for every slot") {
  const auto a = run_scenario(small(11));
  const auto b = run_scenario(small(11));
  CHECK(a.metrics.str() == b.metrics.str());
  CHECK(a.links.str() == b.links.str());
  CHECK(a.trace.str() == b.trace.str());
  CHECK(a.metrics.str() != run_scenario(small(12)).metrics.str());

  const auto o = column(a.metrics, "overhead_s"), d = column(a.metrics, "data_time_s");
  for (const auto& row : a.metrics.rows) {
    const double sum = std::stod(row[o]) + std::stod(row[d]);
    CHECK(sum == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(std::stod(row[column(a.metrics, "overhead_scheme1_s")]) >=
          std::stod(row[column(a.metrics, "overhead_scheme2_s")]));
  }
  CHECK_FALSE(a.trace.rows.empty());
}

TEST_CASE("every method runs") {
  for (auto m : {BeamMethod::Fixed, BeamMethod::Wmmse, BeamMethod::Random, BeamMethod::Oracle}) {
    ScenarioConfig c = small(5);
    c.slots = 3;
    c.vehicles = 4;
    c.method = m;
    CHECK_NOTHROW(run_scenario(c));
  }
  ScenarioConfig g = small(5);
  g.slots = 2;
  g.method = BeamMethod::Gnn;
  g.train.epochs = 3;
  g.train.instances_per_epoch = 2;
  CHECK_NOTHROW(run_scenario(g));
}

TEST_CASE("alignment sweep") {
  const auto t = sweep_align(small(1), {20, 5, 10});
  REQUIRE(t.rows.size() == 9);
  CHECK(t.rows.front()[0] == "5");
  CHECK(t.rows.back()[0] == "20");
  for (const auto& r : t.rows)
    if (r[1] == "baseline_802_15_3c") CHECK(r[3] == "0");
  CHECK_THROWS_AS(sweep_align(small(1), {0}), Error);
}

TEST_CASE("plot scripts") {
  const auto t = sweep_align(small(1), {5, 10});
  const auto s = plot_script_text(t, "sweep.csv");
  CHECK(s.find("set datafile separator ','") != std::string::npos);
  CHECK(s.find("'sweep.csv'") != std::string::npos);
  CHECK(s.find("dsrc_scheme1") != std::string::npos);
  CHECK(s.find("sweep.png") != std::string::npos);

  CsvTable empty;
  empty.header = {"a", "b"};
  CHECK_THROWS_AS(plot_script_text(empty, "x.csv"), Error);

  const auto dir = std::filesystem::temp_directory_path() / "convoy_plot_test";
  std::filesystem::create_directories(dir);
  const std::string csv = (dir / "sweep.csv").string(), gp = (dir / "sweep.gp").string();
  emit_plot_script(t, csv, gp);
  const auto first_csv = slurp(csv), first_gp = slurp(gp);
  emit_plot_script(t, csv, gp);
  CHECK(slurp(csv) == first_csv);
  CHECK(slurp(gp) == first_gp);
  CHECK(first_csv == t.str());
  std::filesystem::remove_all(dir);
}

TEST_CASE("training, evaluation and oracle tables") {
  ScenarioConfig c = small(2);
  c.train.epochs = 4;
  c.train.instances_per_epoch = 2;
  const auto tr = train_gnn(c);
  CHECK(tr.loss.rows.size() == 4);
  CHECK_FALSE(tr.diverged);
  c.eval_instances = 2;
  c.eval_links = 3;
  c.eval_timing_repeats = 1;
  const auto ev = eval_beamforming(c, tr.model);
  CHECK(ev.rows.size() == 8);
  c.oracle_instances = 2;
  const auto orc = oracle_table(c);
  CHECK(orc.rows.size() == 2);
}

TEST_CASE("fuzz output") {
  ScenarioConfig c = small(4);
  c.fuzz_events = 120;
  c.fuzz_vehicles = 8;
  const auto f = fuzz(c);
  CHECK(f.ok);
  CHECK(f.summary.rows.size() == 1);
  CHECK_FALSE(f.trace.rows.empty());
}
