#include "convoy/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "convoy/error.hpp"

namespace convoy::sim {

namespace {

// Stream indices for derive_rng; one per independent consumer.
constexpr std::uint64_t kStreamPlacement = 1;
constexpr std::uint64_t kStreamEval = 3;
constexpr std::uint64_t kStreamOracle = 4;
constexpr std::uint64_t kStreamTrain = 5;
constexpr std::uint64_t kStreamSlot = 1000;

std::string fd(double v) { return format_double(v); }

char role_letter(topo::Role r) {
  switch (r) {
    case topo::Role::Leader: return 'L';
    case topo::Role::Periphery: return 'P';
    case topo::Role::Idle: return 'I';
    case topo::Role::Free: return 'F';
  }
  return '?';
}

struct TreeLink {
  topo::VehicleId tx;
  topo::VehicleId rx;
};

/// Child-to-parent links of every group's forwarding tree.
std::vector<TreeLink> tree_links(const std::vector<topo::GroupTopology>& groups) {
  std::vector<TreeLink> out;
  for (const auto& g : groups) {
    for (const auto& [id, m] : g.members) {
      if (id == g.leader_id) continue;
      const topo::VehicleId parent = m.role == topo::Role::Idle ? g.forward_links.at(id).periphery : g.leader_id;
      out.push_back({id, parent});
    }
  }
  return out;
}

std::string membership(const std::vector<topo::GroupTopology>& groups) {
  std::string s;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (k) s += '|';
    s += 'v' + std::to_string(groups[k].version);
    for (const auto& [id, m] : groups[k].members) {
      s += ' ';
      s += std::to_string(id);
      s += role_letter(groups[k].role_of(id));
    }
  }
  return s;
}

struct SlotDecision {
  std::vector<std::uint8_t> active;
  std::vector<double> width_deg;
  std::vector<double> power_w;
};

/// Capacity of each link under the actual (possibly misaligned) beams. Pairs
/// sharing a vehicle do not couple.
std::vector<double> slot_sinr(const std::vector<rf::LinkGeometry>& geo, const std::vector<TreeLink>& ids,
                              const std::vector<rf::LinkBeams>& beams, const SlotDecision& d, const rf::RfParams& rf) {
  const std::size_t n = geo.size();
  std::vector<double> out(n, 0.0);
  const double noise = rf.noise_power_w();
  for (std::size_t i = 0; i < n; ++i) {
    if (!d.active[i]) continue;
    const auto& own = geo[i];
    const double signal = d.power_w[i] *
                          rf::cone_gain(beams[i].tx, rf::Direction::toward(own.tx_position, own.rx_position)) *
                          rf::cone_gain(beams[i].rx, rf::Direction::toward(own.rx_position, own.tx_position)) *
                          rf::path_gain(own.distance(), rf.carrier_freq_hz);
    double interference = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !d.active[j] || ids[j].tx == ids[i].rx) continue;
      const Vec3 tx = geo[j].tx_position;
      const double dist = (own.rx_position - tx).norm();
      if (dist == 0.0) continue;
      interference += d.power_w[j] * rf::cone_gain(beams[j].tx, rf::Direction::toward(tx, own.rx_position)) *
                      rf::cone_gain(beams[i].rx, rf::Direction::toward(own.rx_position, tx)) *
                      rf::path_gain(dist, rf.carrier_freq_hz);
    }
    out[i] = signal / (noise + interference);
  }
  return out;
}

SlotDecision decide(const ScenarioConfig& cfg, const gnn::GnnModel* model, const std::vector<rf::LinkGeometry>& geo,
                    std::size_t slot) {
  const std::size_t n = geo.size();
  SlotDecision d;
  d.active.assign(n, 1);
  d.width_deg.assign(n, static_cast<double>(cfg.fixed_width_deg));
  d.power_w.assign(n, cfg.rf.tx_power_w);
  auto take = [&](const rf::BeamDecision& bd) {
    for (std::size_t i = 0; i < n; ++i) {
      d.active[i] = bd.active[i];
      d.width_deg[i] = bd.beamwidth_deg[i];
    }
  };
  switch (cfg.method) {
    case BeamMethod::Fixed:
      break;
    case BeamMethod::Gnn:
      take(gnn::infer(*model, geo, cfg.rf).decision);
      break;
    case BeamMethod::Random:
      take(baseline::random_decision(n, cfg.require_seed() * 1000003ULL + slot));
      break;
    case BeamMethod::Oracle: {
      const rf::LinkBudget budget(geo, cfg.rf);
      take(baseline::brute_force(budget).decision);
      break;
    }
    case BeamMethod::Wmmse: {
      const rf::LinkBudget budget(geo, cfg.rf);
      baseline::WmmseConfig wc = cfg.wmmse;
      wc.pmax_w = cfg.rf.tx_power_w;
      const auto res = baseline::wmmse(baseline::channel_matrix(budget, cfg.wmmse_width_deg), wc);
      for (std::size_t i = 0; i < n; ++i) {
        d.width_deg[i] = cfg.wmmse_width_deg;
        d.power_w[i] = res.powers[i];
        d.active[i] = res.powers[i] > 0.0 ? 1 : 0;
      }
      break;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!d.active[i]) d.power_w[i] = 0.0;
  return d;
}

/// Per-link alignment memory: the beams and DSRC profiles of the previous slot.
struct AlignState {
  rf::BeamConfig tx;
  rf::BeamConfig rx;
  std::optional<align::AngularProfile> tx_profile;
  std::optional<align::AngularProfile> rx_profile;
};

}  // namespace

void mobility_step(std::vector<Vehicle>& vehicles, double dt_s) {
  if (!(dt_s > 0.0) || !std::isfinite(dt_s)) fail(ErrorCode::Domain, "mobility step needs dt > 0");
  for (auto& v : vehicles) v.position = v.position + dt_s * v.velocity;
}

std::vector<Vehicle> place_vehicles(const ScenarioConfig& cfg, Rng& rng) {
  std::vector<Vehicle> out;
  for (std::size_t i = 0; i < cfg.vehicles; ++i) {
    const auto lane = static_cast<double>(i % cfg.lanes);
    Vehicle v;
    v.id = static_cast<topo::VehicleId>(i);
    v.position = {uniform(rng, 0.0, cfg.road_length_m), (lane + 0.5) * cfg.lane_width_m, cfg.antenna_height_m};
    v.velocity = {uniform(rng, cfg.speed_min_mps, cfg.speed_max_mps), 0.0, 0.0};
    out.push_back(v);
  }
  return out;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const gnn::GnnModel* model) {
  cfg.validate();
  const std::uint64_t seed = cfg.require_seed();
  std::optional<gnn::GnnModel> trained;
  if (cfg.method == BeamMethod::Gnn && !model) {
    if (!cfg.model_path.empty()) {
      trained = gnn::GnnModel::load(cfg.model_path);
    } else {
      auto out = train_gnn(cfg);
      if (out.diverged) fail(ErrorCode::Numerical, "gnn training diverged: " + out.message);
      trained = std::move(out.model);
    }
    model = &*trained;
  }

  Rng rng = derive_rng(seed, kStreamPlacement);
  auto vehicles = place_vehicles(cfg, rng);

  topo::ProtocolConfig pc = cfg.protocol;
  pc.network.seed = seed;
  topo::ProtocolSim proto(pc);
  for (const auto& v : vehicles) proto.add_vehicle(v.position);
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    // The first vehicle founds a group; the rest ask once it exists.
    const double founder_ready = (pc.join_retries + 1) * pc.join_timeout_s;
    proto.request_join(vehicles[i].id, i == 0 ? 0.0 : founder_ready + static_cast<double>(i) * cfg.warmup_spacing_s);
  }
  proto.run_until_quiescent(1e6);
  if (!proto.quiescent()) fail(ErrorCode::Protocol, "formation warm-up did not settle");
  if (auto rep = proto.check_invariants(); !rep.ok())
    fail(ErrorCode::Protocol, "formation warm-up broke an invariant: " + rep.violations.front());

  ScenarioResult res;
  res.trace.header = {"time_s", "vehicle_id", "role_before", "role_after", "msg_kind", "topology_version"};
  for (const auto& e : proto.trace())
    res.trace.add_row({fd(e.time), std::to_string(e.vehicle), topo::to_string(e.before), topo::to_string(e.after),
                       topo::to_string(e.kind), std::to_string(e.version)});

  res.metrics.header = {"slot",           "time_s",           "links",           "active_links",
                        "sum_capacity_bps", "overhead_s",     "data_time_s",     "overhead_baseline_s",
                        "overhead_scheme1_s", "overhead_scheme2_s", "groups",    "topology_version",
                        "delivered_bytes",  "members"};
  res.links.header = {"slot",     "link",           "tx",       "rx",          "distance_m", "active",
                      "beamwidth_deg", "power_w",   "tx_error_deg", "rx_error_deg", "sinr",  "capacity_bps"};

  const auto groups = proto.groups();
  const auto links = tree_links(groups);
  const std::size_t n = links.size();
  std::uint64_t version = 0;
  for (const auto& g : groups) version = std::max(version, g.version);
  const std::string members = membership(groups);

  align::AlignmentTiming timing = cfg.timing;
  timing.t_slot_s = cfg.slot_s;
  align::ProfileModel pm;
  pm.noise_sigma_deg = cfg.profile_noise_deg;

  auto geometry = [&](const TreeLink& l) {
    const auto& a = vehicles[l.tx];
    const auto& b = vehicles[l.rx];
    return rf::LinkGeometry{a.position, b.position, a.velocity, b.velocity};
  };

  // Previous-slot state: beams pointed exactly at the initial geometry.
  std::vector<AlignState> state(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto g = geometry(links[k]);
    state[k].tx = rf::BeamConfig(rf::Direction::toward(g.tx_position, g.rx_position), 360.0);
    state[k].rx = rf::BeamConfig(rf::Direction::toward(g.rx_position, g.tx_position), 360.0);
  }

  const double t0 = proto.now();
  for (std::size_t s = 0; s < cfg.slots; ++s) {
    mobility_step(vehicles, cfg.slot_s);
    for (const auto& v : vehicles) proto.set_position(v.id, v.position);
    for (const auto& l : links) proto.send_data(l.tx, l.rx, topo::MessageKind::SensingData, cfg.sensing_bytes);
    for (const auto& g : groups)
      for (const auto& [id, m] : g.members)
        if (id != g.leader_id) {
          proto.send_data(g.leader_id, id, topo::MessageKind::DecisionData, cfg.decision_bytes);
          proto.send_data(g.leader_id, id, topo::MessageKind::ControlData, cfg.control_bytes);
        }
    proto.step(t0 + static_cast<double>(s + 1) * cfg.slot_s);

    std::vector<rf::LinkGeometry> geo;
    for (const auto& l : links) geo.push_back(geometry(l));

    double sum_capacity = 0.0;
    double overhead = 0.0;
    double over_base = 0.0, over_s1 = 0.0, over_s2 = 0.0;
    std::size_t active_links = 0;
    std::vector<std::vector<std::string>> link_rows;
    if (n > 0) {
      const SlotDecision d = decide(cfg, model, geo, s);
      Rng slot_rng = derive_rng(seed, kStreamSlot + s);
      std::vector<rf::LinkBeams> beams(n);
      for (std::size_t k = 0; k < n; ++k) {
        const auto& g = geo[k];
        const rf::Direction true_tx = rf::Direction::toward(g.tx_position, g.rx_position);
        const rf::Direction true_rx = rf::Direction::toward(g.rx_position, g.tx_position);
        auto profile_tx = align::synthesize_profile(true_tx, pm, slot_rng, cfg.slot_s * static_cast<double>(s));
        auto profile_rx = align::synthesize_profile(true_rx, pm, slot_rng, cfg.slot_s * static_cast<double>(s));
        const double w = d.width_deg[k];
        AlignState& st = state[k];
        if (!d.active[k]) {
          beams[k] = {st.tx, st.rx};
        } else if (cfg.align_scheme == align::Scheme::Baseline802_15_3c) {
          const auto a = align::exhaustive_alignment(w, timing.sector_span_deg, profile_tx, st.tx.boresight().azimuth_deg());
          const auto b = align::exhaustive_alignment(w, timing.sector_span_deg, profile_rx, st.rx.boresight().azimuth_deg());
          beams[k] = {a.beam, b.beam};
        } else {
          const auto prev_tx = st.tx_profile ? *st.tx_profile : profile_tx;
          const auto prev_rx = st.rx_profile ? *st.rx_profile : profile_rx;
          const auto shift_tx = align::estimate_shift(prev_tx, profile_tx);
          const auto shift_rx = align::estimate_shift(prev_rx, profile_rx);
          const auto r = align::two_step_alignment(rf::BeamConfig(st.tx.boresight(), w), rf::BeamConfig(st.rx.boresight(), w),
                                                   shift_tx, shift_rx, prev_tx, prev_rx);
          beams[k] = {r.beam_a, r.beam_b};
        }
        st.tx = beams[k].tx;
        st.rx = beams[k].rx;
        st.tx_profile = std::move(profile_tx);
        st.rx_profile = std::move(profile_rx);
        if (d.active[k]) {
          ++active_links;
          over_base = std::max(over_base, align::alignment_overhead(align::Scheme::Baseline802_15_3c, w, timing));
          over_s1 = std::max(over_s1, align::alignment_overhead(align::Scheme::DsrcScheme1, w, timing));
          over_s2 = std::max(over_s2, align::alignment_overhead(align::Scheme::DsrcScheme2, w, timing));
        }
      }
      overhead = cfg.align_scheme == align::Scheme::Baseline802_15_3c ? over_base
                 : cfg.align_scheme == align::Scheme::DsrcScheme1     ? over_s1
                                                                       : over_s2;
      overhead = std::min(overhead, cfg.slot_s);
      const double data_fraction = (cfg.slot_s - overhead) / cfg.slot_s;
      const auto sinrs = slot_sinr(geo, links, beams, d, cfg.rf);
      for (std::size_t k = 0; k < n; ++k) {
        const double cap = d.active[k] ? data_fraction * rf::link_capacity(sinrs[k], cfg.rf.bandwidth_hz) : 0.0;
        sum_capacity += cap;
        const double tx_err = rad_to_deg(rf::angular_offset(beams[k].tx.boresight(),
                                                            rf::Direction::toward(geo[k].tx_position, geo[k].rx_position)));
        const double rx_err = rad_to_deg(rf::angular_offset(beams[k].rx.boresight(),
                                                            rf::Direction::toward(geo[k].rx_position, geo[k].tx_position)));
        link_rows.push_back({std::to_string(s), std::to_string(k), std::to_string(links[k].tx), std::to_string(links[k].rx),
                             fd(geo[k].distance()), std::to_string(int(d.active[k])), fd(d.width_deg[k]), fd(d.power_w[k]),
                             fd(tx_err), fd(rx_err), fd(sinrs[k]), fd(cap)});
      }
    }
    res.metrics.add_row({std::to_string(s), fd(cfg.slot_s * static_cast<double>(s + 1)), std::to_string(n),
                         std::to_string(active_links), fd(sum_capacity), fd(overhead), fd(cfg.slot_s - overhead),
                         fd(over_base), fd(over_s1), fd(over_s2), std::to_string(groups.size()), std::to_string(version),
                         std::to_string(proto.network().delivered_bytes()), members});
    for (auto& r : link_rows) res.links.add_row(std::move(r));
  }
  return res;
}

CsvTable sweep_align(const ScenarioConfig& cfg, const std::vector<double>& widths_deg) {
  align::AlignmentTiming timing = cfg.timing;
  timing.t_slot_s = cfg.slot_s;
  for (double w : widths_deg)
    if (!(w > 0.0 && w <= 360.0)) fail(ErrorCode::Domain, "beamwidth " + fd(w) + " outside (0, 360]");
  CsvTable t;
  t.header = {"beamwidth_deg", "scheme", "overhead_s", "gap_vs_baseline_pct"};
  for (const auto& r : align::sweep_overhead(widths_deg, timing))
    t.add_row({fd(r.beamwidth_deg), align::to_string(r.scheme), fd(r.overhead_s), fd(r.gap_vs_baseline_pct)});
  return t;
}

TrainOutput train_gnn(const ScenarioConfig& cfg) {
  const std::uint64_t seed = cfg.require_seed();
  gnn::TrainConfig tc = cfg.train;
  tc.seed = seed;
  Rng init = derive_rng(seed, kStreamTrain);
  TrainOutput out{gnn::GnnModel::create(init), {}, false, {}};
  const auto layout = cfg.link_layout();
  const std::size_t links = cfg.train_links;
  const auto res = gnn::train(
      out.model, [&](Rng& r) { return gnn::random_links(links, r, layout); }, cfg.rf, tc);
  out.loss.header = {"epoch", "mean_loss"};
  for (std::size_t e = 0; e < res.epoch_loss.size(); ++e) out.loss.add_row({std::to_string(e), fd(res.epoch_loss[e])});
  out.diverged = res.diverged;
  out.message = res.message;
  return out;
}

CsvTable eval_beamforming(const ScenarioConfig& cfg, const gnn::GnnModel& model) {
  const std::uint64_t seed = cfg.require_seed();
  Rng rng = derive_rng(seed, kStreamEval);
  std::vector<std::vector<rf::LinkGeometry>> instances;
  for (std::size_t k = 0; k < cfg.eval_instances; ++k)
    instances.push_back(gnn::random_links(cfg.eval_links, rng, cfg.link_layout()));
  gnn::EvaluationOptions opts;
  opts.wmmse = cfg.wmmse;
  opts.wmmse_beamwidth_deg = cfg.wmmse_width_deg;
  opts.random_seed = seed;
  opts.timing_repeats = cfg.eval_timing_repeats;
  CsvTable t;
  t.header = {"instance_id", "method", "sum_capacity_bps", "wall_time_s"};
  for (const auto& r : gnn::evaluate(model, instances, cfg.rf, opts))
    t.add_row({std::to_string(r.instance_id), r.method, fd(r.sum_capacity_bps), fd(r.wall_time_s)});
  return t;
}

CsvTable oracle_table(const ScenarioConfig& cfg) {
  const std::uint64_t seed = cfg.require_seed();
  if (cfg.oracle_links > baseline::kBruteForceMaxLinks)
    fail(ErrorCode::Refused, "oracle enumeration is limited to " + std::to_string(baseline::kBruteForceMaxLinks) + " links");
  Rng rng = derive_rng(seed, kStreamOracle);
  CsvTable t;
  t.header = {"instance_id", "links", "sum_capacity_bps", "active", "beamwidth_deg", "evaluated"};
  for (std::size_t k = 0; k < cfg.oracle_instances; ++k) {
    const auto geo = gnn::random_links(cfg.oracle_links, rng, cfg.link_layout());
    const rf::LinkBudget budget(geo, cfg.rf);
    const auto r = baseline::brute_force(budget);
    std::string act, wid;
    for (std::size_t i = 0; i < r.decision.size(); ++i) {
      act += (i ? " " : "") + std::to_string(int(r.decision.active[i]));
      wid += (i ? " " : "") + std::to_string(r.decision.beamwidth_deg[i]);
    }
    t.add_row({std::to_string(k), std::to_string(cfg.oracle_links), fd(r.capacity_bps), act, wid,
               std::to_string(r.evaluated)});
  }
  return t;
}

FuzzOutput fuzz(const ScenarioConfig& cfg) {
  topo::FuzzConfig fc;
  fc.seed = cfg.require_seed();
  fc.events = cfg.fuzz_events;
  fc.drop_prob = cfg.fuzz_drop_prob;
  fc.vehicles = cfg.fuzz_vehicles;
  const auto rep = topo::fuzz_topology(fc);
  FuzzOutput out;
  out.ok = rep.ok();
  out.summary.header = {"seed",           "events",          "quiescent_points", "quiescence_failures",
                        "violations",     "messages_sent",   "messages_dropped", "ok"};
  out.summary.add_row({std::to_string(fc.seed), std::to_string(rep.events_applied), std::to_string(rep.quiescent_points),
                       std::to_string(rep.quiescence_failures), std::to_string(rep.violations.size()),
                       std::to_string(rep.messages_sent), std::to_string(rep.messages_dropped), out.ok ? "1" : "0"});
  out.trace.header = {"time_s", "vehicle_id", "role_before", "role_after", "msg_kind", "topology_version"};
  for (const auto& e : rep.trace)
    out.trace.add_row({fd(e.time), std::to_string(e.vehicle), topo::to_string(e.before), topo::to_string(e.after),
                       topo::to_string(e.kind), std::to_string(e.version)});
  return out;
}

std::string plot_script_text(const CsvTable& table, const std::string& csv_name) {
  if (table.rows.empty()) fail(ErrorCode::Refused, "nothing to plot: the table is empty");
  const auto& h = table.header;
  auto col = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < h.size(); ++i)
      if (h[i] == name) return i + 1;
    return 0;
  };
  std::string s;
  s += "# gnuplot script for " + csv_name + "\n";
  s += "set datafile separator ','\n";
  s += "set key outside\n";
  s += "set grid\n";
  const std::string png = csv_name.substr(0, csv_name.rfind('.')) + ".png";
  s += "set terminal pngcairo size 900,540\n";
  s += "set output '" + png + "'\n";
  if (col("beamwidth_deg") && col("scheme") && col("overhead_s")) {
    const auto w = std::to_string(col("beamwidth_deg"));
    const auto sc = std::to_string(col("scheme"));
    const auto o = std::to_string(col("overhead_s"));
    std::set<std::string> schemes;
    for (const auto& r : table.rows) schemes.insert(r[col("scheme") - 1]);
    s += "set xlabel 'beamwidth (deg)'\n";
    s += "set ylabel 'alignment overhead (s)'\n";
    s += "plot ";
    bool first = true;
    for (const auto& name : schemes) {
      if (!first) s += ", \\\n     ";
      first = false;
      s += "'" + csv_name + "' every ::1 using " + w + ":(strcol(" + sc + ") eq '" + name + "' ? $" + o +
           " : 1/0) with linespoints title '" + name + "'";
    }
    s += "\n";
  } else if (col("method") && col("sum_capacity_bps")) {
    const auto id = std::to_string(col("instance_id") ? col("instance_id") : 1);
    const auto m = std::to_string(col("method"));
    const auto c = std::to_string(col("sum_capacity_bps"));
    std::set<std::string> methods;
    for (const auto& r : table.rows) methods.insert(r[col("method") - 1]);
    s += "set xlabel 'instance'\n";
    s += "set ylabel 'sum capacity (bit/s)'\n";
    s += "plot ";
    bool first = true;
    for (const auto& name : methods) {
      if (!first) s += ", \\\n     ";
      first = false;
      s += "'" + csv_name + "' every ::1 using " + id + ":(strcol(" + m + ") eq '" + name + "' ? $" + c +
           " : 1/0) with points title '" + name + "'";
    }
    s += "\n";
  } else if (col("slot") && col("sum_capacity_bps")) {
    s += "set xlabel 'slot'\n";
    s += "set ylabel 'sum capacity (bit/s)'\n";
    s += "plot '" + csv_name + "' every ::1 using " + std::to_string(col("slot")) + ":" +
         std::to_string(col("sum_capacity_bps")) + " with lines title 'sum capacity'\n";
  } else if (col("epoch") && col("mean_loss")) {
    s += "set xlabel 'epoch'\n";
    s += "set ylabel 'mean loss'\n";
    s += "plot '" + csv_name + "' every ::1 using " + std::to_string(col("epoch")) + ":" +
         std::to_string(col("mean_loss")) + " with lines title 'loss'\n";
  } else {
    s += "plot '" + csv_name + "' every ::1 using 0:2 with lines title '" + h.at(std::min<std::size_t>(1, h.size() - 1)) +
         "'\n";
  }
  return s;
}

void emit_plot_script(const CsvTable& table, const std::string& csv_path, const std::string& script_path) {
  const auto slash = csv_path.find_last_of('/');
  const std::string csv_name = slash == std::string::npos ? csv_path : csv_path.substr(slash + 1);
  const std::string script = plot_script_text(table, csv_name);
  table.write(csv_path);
  std::ofstream f(script_path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::Io, "cannot open " + script_path + " for writing");
  f << script;
  if (!f) fail(ErrorCode::Io, "write failed: " + script_path);
}

}  // namespace convoy::sim
