#include "convoy/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "convoy/error.hpp"
#include "convoy/text.hpp"

namespace convoy::sim {

const char* to_string(BeamMethod m) {
  switch (m) {
    case BeamMethod::Fixed: return "fixed";
    case BeamMethod::Gnn: return "gnn";
    case BeamMethod::Wmmse: return "wmmse";
    case BeamMethod::Random: return "random";
    case BeamMethod::Oracle: return "oracle";
  }
  return "?";
}

BeamMethod parse_method(const std::string& name) {
  for (BeamMethod m : {BeamMethod::Fixed, BeamMethod::Gnn, BeamMethod::Wmmse, BeamMethod::Random, BeamMethod::Oracle})
    if (name == to_string(m)) return m;
  fail(ErrorCode::Config, "unknown beamforming method '" + name + "'");
}

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const std::string& why) {
  fail(ErrorCode::Config, "key '" + std::string(key) + "': value '" + std::string(value) + "' " + why);
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out))
    bad_value(key, v, "is not a finite number");
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) bad_value(key, v, "is not a non-negative integer");
  return out;
}

double positive(std::string_view key, std::string_view v) {
  const double d = to_double(key, v);
  if (!(d > 0.0)) bad_value(key, v, "must be positive");
  return d;
}

double non_negative(std::string_view key, std::string_view v) {
  const double d = to_double(key, v);
  if (!(d >= 0.0)) bad_value(key, v, "must be non-negative");
  return d;
}

std::size_t count(std::string_view key, std::string_view v) {
  const auto n = to_u64(key, v);
  if (n < 1) bad_value(key, v, "must be at least 1");
  return static_cast<std::size_t>(n);
}

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }

struct Key {
  const char* name;
  std::function<void(ScenarioConfig&, std::string_view, std::string_view)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

#define CONVOY_KEY(NAME, FIELD, PARSE) \
  Key { NAME, [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.FIELD = PARSE(k, v); }, \
        [](const ScenarioConfig& c) { return fmt(c.FIELD); } }

const std::vector<Key>& key_table() {
  static const std::vector<Key> table = {
      Key{"seed", [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.seed = to_u64(k, v); },
          [](const ScenarioConfig& c) { return c.seed ? std::to_string(*c.seed) : std::string(); }},
      CONVOY_KEY("scenario.vehicles", vehicles, count),
      CONVOY_KEY("scenario.slots", slots, count),
      CONVOY_KEY("scenario.slot_s", slot_s, positive),
      CONVOY_KEY("road.length_m", road_length_m, positive),
      CONVOY_KEY("road.lane_width_m", lane_width_m, positive),
      CONVOY_KEY("road.lanes", lanes, count),
      CONVOY_KEY("mobility.speed_min_mps", speed_min_mps, non_negative),
      CONVOY_KEY("mobility.speed_max_mps", speed_max_mps, non_negative),
      CONVOY_KEY("rf.antenna_height_m", antenna_height_m, non_negative),
      CONVOY_KEY("rf.carrier_freq_hz", rf.carrier_freq_hz, positive),
      CONVOY_KEY("rf.bandwidth_hz", rf.bandwidth_hz, positive),
      CONVOY_KEY("rf.tx_power_w", rf.tx_power_w, positive),
      CONVOY_KEY("rf.noise_psd_w_per_hz", rf.noise_psd_w_per_hz, positive),
      Key{"align.scheme",
          [](ScenarioConfig& c, std::string_view k, std::string_view v) {
            try {
              c.align_scheme = align::parse_scheme(std::string(v));
            } catch (const Error&) {
              bad_value(k, v, "is not an alignment scheme (baseline_802_15_3c, dsrc_scheme1, dsrc_scheme2)");
            }
          },
          [](const ScenarioConfig& c) { return std::string(align::to_string(c.align_scheme)); }},
      CONVOY_KEY("align.t_probe_s", timing.t_probe_s, positive),
      CONVOY_KEY("align.t_dsrc_frame_s", timing.t_dsrc_frame_s, positive),
      CONVOY_KEY("align.n_dsrc_frames", timing.n_dsrc_frames, count),
      CONVOY_KEY("align.n_refine", timing.n_refine, count),
      CONVOY_KEY("align.sector_span_deg", timing.sector_span_deg, positive),
      CONVOY_KEY("align.profile_noise_deg", profile_noise_deg, non_negative),
      Key{"align.sweep_widths_deg",
          [](ScenarioConfig& c, std::string_view k, std::string_view v) {
            std::vector<double> out;
            std::size_t pos = 0;
            while (pos <= v.size()) {
              const auto comma = v.find(',', pos);
              const auto end = comma == std::string_view::npos ? v.size() : comma;
              const std::string item = trim(v.substr(pos, end - pos));
              const double w = to_double(k, item);
              if (!(w > 0.0 && w <= 360.0)) bad_value(k, item, "must lie in (0, 360]");
              out.push_back(w);
              if (comma == std::string_view::npos) break;
              pos = comma + 1;
            }
            c.sweep_widths_deg = std::move(out);
          },
          [](const ScenarioConfig& c) {
            std::string s;
            for (std::size_t i = 0; i < c.sweep_widths_deg.size(); ++i) s += (i ? "," : "") + fmt(c.sweep_widths_deg[i]);
            return s;
          }},
      CONVOY_KEY("protocol.join_timeout_s", protocol.join_timeout_s, positive),
      Key{"protocol.join_retries",
          [](ScenarioConfig& c, std::string_view k, std::string_view v) {
            const auto n = to_u64(k, v);
            if (n > 100) bad_value(k, v, "must be at most 100");
            c.protocol.join_retries = static_cast<int>(n);
          },
          [](const ScenarioConfig& c) { return std::to_string(c.protocol.join_retries); }},
      CONVOY_KEY("protocol.radio_range_m", protocol.radio_range_m, positive),
      CONVOY_KEY("protocol.shadow_tolerance_deg", protocol.topology.shadow_tolerance_deg, non_negative),
      CONVOY_KEY("protocol.delay_min_s", protocol.network.delay_min_s, non_negative),
      CONVOY_KEY("protocol.delay_max_s", protocol.network.delay_max_s, non_negative),
      CONVOY_KEY("protocol.drop_prob", protocol.network.drop_prob, non_negative),
      CONVOY_KEY("protocol.arq_timeout_s", protocol.network.arq_timeout_s, positive),
      CONVOY_KEY("protocol.warmup_spacing_s", warmup_spacing_s, positive),
      Key{"data.sensing_bytes",
          [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.sensing_bytes = to_u64(k, v); },
          [](const ScenarioConfig& c) { return fmt(c.sensing_bytes); }},
      Key{"data.decision_bytes",
          [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.decision_bytes = to_u64(k, v); },
          [](const ScenarioConfig& c) { return fmt(c.decision_bytes); }},
      Key{"data.control_bytes",
          [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.control_bytes = to_u64(k, v); },
          [](const ScenarioConfig& c) { return fmt(c.control_bytes); }},
      Key{"beam.method",
          [](ScenarioConfig& c, std::string_view k, std::string_view v) {
            try {
              c.method = parse_method(std::string(v));
            } catch (const Error&) {
              bad_value(k, v, "is not a method (fixed, gnn, wmmse, random, oracle)");
            }
          },
          [](const ScenarioConfig& c) { return std::string(to_string(c.method)); }},
      Key{"beam.fixed_width_deg",
          [](ScenarioConfig& c, std::string_view k, std::string_view v) {
            const auto w = to_u64(k, v);
            if (w < 1 || w > 15) bad_value(k, v, "must lie in 1..15");
            c.fixed_width_deg = static_cast<int>(w);
          },
          [](const ScenarioConfig& c) { return std::to_string(c.fixed_width_deg); }},
      CONVOY_KEY("beam.wmmse_width_deg", wmmse_width_deg, positive),
      CONVOY_KEY("beam.wmmse_max_iterations", wmmse.max_iterations, count),
      CONVOY_KEY("beam.wmmse_tolerance", wmmse.tolerance, positive),
      CONVOY_KEY("gnn.learning_rate", train.learning_rate, non_negative),
      CONVOY_KEY("gnn.epochs", train.epochs, count),
      CONVOY_KEY("gnn.instances_per_epoch", train.instances_per_epoch, count),
      CONVOY_KEY("gnn.temperature", train.temperature, positive),
      CONVOY_KEY("gnn.train_links", train_links, count),
      Key{"gnn.model_path",
          [](ScenarioConfig& c, std::string_view, std::string_view v) { c.model_path = std::string(v); },
          [](const ScenarioConfig& c) { return c.model_path; }},
      CONVOY_KEY("eval.instances", eval_instances, count),
      CONVOY_KEY("eval.links", eval_links, count),
      CONVOY_KEY("eval.timing_repeats", eval_timing_repeats, count),
      CONVOY_KEY("oracle.instances", oracle_instances, count),
      CONVOY_KEY("oracle.links", oracle_links, count),
      CONVOY_KEY("fuzz.events", fuzz_events, count),
      CONVOY_KEY("fuzz.drop_prob", fuzz_drop_prob, non_negative),
      CONVOY_KEY("fuzz.vehicles", fuzz_vehicles, count),
  };
  return table;
}

#undef CONVOY_KEY

const Key& find_key(std::string_view key) {
  for (const auto& k : key_table())
    if (key == k.name) return k;
  fail(ErrorCode::Config, "unknown key '" + std::string(key) + "'");
}

}  // namespace

void ScenarioConfig::set(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  if (v.empty() && key != "gnn.model_path") fail(ErrorCode::Config, "key '" + std::string(key) + "' has an empty value");
  find_key(key).set(*this, key, v);
}

std::string ScenarioConfig::get(std::string_view key) const { return find_key(key).get(*this); }

std::vector<std::string> ScenarioConfig::keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.emplace_back(k.name);
  return out;
}

std::uint64_t ScenarioConfig::require_seed() const {
  if (!seed) fail(ErrorCode::Config, "key 'seed' is mandatory");
  return *seed;
}

void ScenarioConfig::validate() const {
  require_seed();
  if (speed_max_mps < speed_min_mps)
    fail(ErrorCode::Config, "key 'mobility.speed_max_mps' must be >= mobility.speed_min_mps");
  if (protocol.network.delay_max_s < protocol.network.delay_min_s)
    fail(ErrorCode::Config, "key 'protocol.delay_max_s' must be >= protocol.delay_min_s");
  if (!(protocol.network.drop_prob < 1.0)) fail(ErrorCode::Config, "key 'protocol.drop_prob' must be below 1");
  if (!(fuzz_drop_prob < 1.0)) fail(ErrorCode::Config, "key 'fuzz.drop_prob' must be below 1");
  if (!(protocol.topology.shadow_tolerance_deg < 180.0))
    fail(ErrorCode::Config, "key 'protocol.shadow_tolerance_deg' must be below 180");
  if (!(wmmse_width_deg <= 360.0)) fail(ErrorCode::Config, "key 'beam.wmmse_width_deg' must lie in (0, 360]");
  if (sweep_widths_deg.empty()) fail(ErrorCode::Config, "key 'align.sweep_widths_deg' needs at least one width");
  if (oracle_links > baseline::kBruteForceMaxLinks)
    fail(ErrorCode::Config, "key 'oracle.links' must be at most " + std::to_string(baseline::kBruteForceMaxLinks));
  if (method == BeamMethod::Oracle && vehicles > baseline::kBruteForceMaxLinks + 1)
    fail(ErrorCode::Config, "beam.method = oracle supports at most " + std::to_string(baseline::kBruteForceMaxLinks + 1) +
                                " vehicles");
  rf.validate();
  align::AlignmentTiming t = timing;
  t.t_slot_s = slot_s;
  t.validate();
  protocol.validate();
  train.validate();
}

std::string ScenarioConfig::to_text() const {
  std::string out;
  for (const auto& k : key_table()) out += std::string(k.name) + " = " + k.get(*this) + "\n";
  return out;
}

gnn::LinkLayout ScenarioConfig::link_layout() const {
  gnn::LinkLayout l;
  l.lanes = lanes;
  l.lane_width_m = lane_width_m;
  l.antenna_height_m = antenna_height_m;
  return l;
}

ScenarioConfig parse_config(std::string_view text) {
  ScenarioConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    try {
      cfg.set(key, value);
    } catch (const Error& e) {
      fail(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot read config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace convoy::sim
