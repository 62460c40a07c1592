#include "convoy/convoy.h"

#include <cstring>
#include <new>
#include <string>

#include "convoy/align.hpp"
#include "convoy/config.hpp"
#include "convoy/error.hpp"
#include "convoy/rf.hpp"
#include "convoy/scenario.hpp"

struct convoy_config {
  convoy::sim::ScenarioConfig cfg;
};
struct convoy_model {
  convoy::gnn::GnnModel model;
};
struct convoy_table {
  convoy::CsvTable table;
};

namespace {

thread_local std::string g_last_error;

convoy_status status_of(convoy::ErrorCode c) {
  using convoy::ErrorCode;
  switch (c) {
    case ErrorCode::InvalidArgument: return CONVOY_E_INVALID_ARGUMENT;
    case ErrorCode::Domain: return CONVOY_E_DOMAIN;
    case ErrorCode::Config: return CONVOY_E_CONFIG;
    case ErrorCode::Shape: return CONVOY_E_SHAPE;
    case ErrorCode::Protocol: return CONVOY_E_PROTOCOL;
    case ErrorCode::Membership: return CONVOY_E_MEMBERSHIP;
    case ErrorCode::Geometry: return CONVOY_E_GEOMETRY;
    case ErrorCode::Numerical: return CONVOY_E_NUMERICAL;
    case ErrorCode::Io: return CONVOY_E_IO;
    case ErrorCode::Refused: return CONVOY_E_REFUSED;
  }
  return CONVOY_E_INTERNAL;
}

template <class F>
convoy_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return CONVOY_OK;
  } catch (const convoy::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CONVOY_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CONVOY_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return CONVOY_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) convoy::fail(convoy::ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

convoy_table* wrap(convoy::CsvTable t) { return new convoy_table{std::move(t)}; }

}  // namespace

extern "C" {

const char* convoy_last_error(void) { return g_last_error.c_str(); }

const char* convoy_status_name(convoy_status s) {
  switch (s) {
    case CONVOY_OK: return "ok";
    case CONVOY_E_INVALID_ARGUMENT: return "invalid argument";
    case CONVOY_E_DOMAIN: return "domain error";
    case CONVOY_E_CONFIG: return "configuration error";
    case CONVOY_E_SHAPE: return "shape error";
    case CONVOY_E_PROTOCOL: return "protocol-state error";
    case CONVOY_E_MEMBERSHIP: return "membership error";
    case CONVOY_E_GEOMETRY: return "geometry error";
    case CONVOY_E_NUMERICAL: return "numerical error";
    case CONVOY_E_IO: return "i/o error";
    case CONVOY_E_REFUSED: return "refused";
    case CONVOY_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

int convoy_status_is_validation(convoy_status s) {
  return s == CONVOY_E_CONFIG || s == CONVOY_E_INVALID_ARGUMENT || s == CONVOY_E_DOMAIN;
}

convoy_status convoy_config_default(convoy_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new convoy_config{};
  });
}

convoy_status convoy_config_parse(const char* text, convoy_config** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = new convoy_config{convoy::sim::parse_config(text)};
  });
}

convoy_status convoy_config_load(const char* path, convoy_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new convoy_config{convoy::sim::load_config(path)};
  });
}

convoy_status convoy_config_set(convoy_config* cfg, const char* key, const char* value) {
  return guard([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    cfg->cfg.set(key, value);
  });
}

convoy_status convoy_config_get(const convoy_config* cfg, const char* key, char* buf, size_t cap, size_t* len) {
  return guard([&] {
    need(cfg, "cfg");
    need(key, "key");
    const std::string v = cfg->cfg.get(key);
    if (len) *len = v.size();
    if (buf && cap > 0) {
      const std::size_t n = std::min(cap - 1, v.size());
      std::memcpy(buf, v.data(), n);
      buf[n] = '\0';
    }
  });
}

convoy_status convoy_config_validate(const convoy_config* cfg) {
  return guard([&] {
    need(cfg, "cfg");
    cfg->cfg.validate();
  });
}

void convoy_config_free(convoy_config* cfg) { delete cfg; }

convoy_status convoy_model_load(const char* path, convoy_model** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new convoy_model{convoy::gnn::GnnModel::load(std::string(path))};
  });
}

convoy_status convoy_model_save(const convoy_model* model, const char* path) {
  return guard([&] {
    need(model, "model");
    need(path, "path");
    model->model.save(std::string(path));
  });
}

void convoy_model_free(convoy_model* model) { delete model; }

convoy_status convoy_run_scenario(const convoy_config* cfg, const convoy_model* model, convoy_table** metrics,
                                  convoy_table** links, convoy_table** trace) {
  return guard([&] {
    need(cfg, "cfg");
    need(metrics, "metrics");
    auto res = convoy::sim::run_scenario(cfg->cfg, model ? &model->model : nullptr);
    *metrics = wrap(std::move(res.metrics));
    if (links) *links = wrap(std::move(res.links));
    if (trace) *trace = wrap(std::move(res.trace));
  });
}

convoy_status convoy_sweep_align(const convoy_config* cfg, const double* widths_deg, size_t count, convoy_table** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(out, "out");
    std::vector<double> widths = cfg->cfg.sweep_widths_deg;
    if (widths_deg) widths.assign(widths_deg, widths_deg + count);
    *out = wrap(convoy::sim::sweep_align(cfg->cfg, widths));
  });
}

convoy_status convoy_train_gnn(const convoy_config* cfg, convoy_model** model, convoy_table** loss) {
  return guard([&] {
    need(cfg, "cfg");
    need(model, "model");
    cfg->cfg.validate();
    auto res = convoy::sim::train_gnn(cfg->cfg);
    if (res.diverged) convoy::fail(convoy::ErrorCode::Numerical, "training diverged: " + res.message);
    *model = new convoy_model{std::move(res.model)};
    if (loss) *loss = wrap(std::move(res.loss));
  });
}

convoy_status convoy_eval_beamforming(const convoy_config* cfg, const convoy_model* model, convoy_table** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(model, "model");
    need(out, "out");
    cfg->cfg.validate();
    *out = wrap(convoy::sim::eval_beamforming(cfg->cfg, model->model));
  });
}

convoy_status convoy_oracle(const convoy_config* cfg, convoy_table** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(out, "out");
    cfg->cfg.validate();
    *out = wrap(convoy::sim::oracle_table(cfg->cfg));
  });
}

convoy_status convoy_fuzz_topology(const convoy_config* cfg, convoy_table** summary, convoy_table** trace,
                                   int* invariants_ok) {
  return guard([&] {
    need(cfg, "cfg");
    need(summary, "summary");
    cfg->cfg.validate();
    auto res = convoy::sim::fuzz(cfg->cfg);
    *summary = wrap(std::move(res.summary));
    if (trace) *trace = wrap(std::move(res.trace));
    if (invariants_ok) *invariants_ok = res.ok ? 1 : 0;
  });
}

size_t convoy_table_rows(const convoy_table* t) { return t ? t->table.rows.size() : 0; }
size_t convoy_table_cols(const convoy_table* t) { return t ? t->table.header.size() : 0; }

const char* convoy_table_header(const convoy_table* t, size_t col) {
  if (!t || col >= t->table.header.size()) return nullptr;
  return t->table.header[col].c_str();
}

const char* convoy_table_cell(const convoy_table* t, size_t row, size_t col) {
  if (!t || row >= t->table.rows.size() || col >= t->table.header.size()) return nullptr;
  return t->table.rows[row][col].c_str();
}

convoy_status convoy_table_write_csv(const convoy_table* t, const char* path) {
  return guard([&] {
    need(t, "table");
    need(path, "path");
    t->table.write(path);
  });
}

convoy_status convoy_table_write_plot(const convoy_table* t, const char* csv_path, const char* script_path) {
  return guard([&] {
    need(t, "table");
    need(csv_path, "csv_path");
    need(script_path, "script_path");
    convoy::sim::emit_plot_script(t->table, csv_path, script_path);
  });
}

void convoy_table_free(convoy_table* t) { delete t; }

convoy_status convoy_cone_gain(double beamwidth_deg, double offset_deg, double* out) {
  return guard([&] {
    need(out, "out");
    const convoy::rf::BeamConfig beam(convoy::rf::Direction(0.0, 0.0), beamwidth_deg);
    *out = convoy::rf::cone_gain(beam, convoy::rf::Direction::from_degrees(offset_deg));
  });
}

convoy_status convoy_path_gain(double distance_m, double carrier_freq_hz, double* out) {
  return guard([&] {
    need(out, "out");
    *out = convoy::rf::path_gain(distance_m, carrier_freq_hz);
  });
}

convoy_status convoy_link_capacity(double sinr, double bandwidth_hz, double* out) {
  return guard([&] {
    need(out, "out");
    *out = convoy::rf::link_capacity(sinr, bandwidth_hz);
  });
}

convoy_status convoy_alignment_overhead(const convoy_config* cfg, const char* scheme, double beamwidth_deg,
                                        double* out) {
  return guard([&] {
    need(scheme, "scheme");
    need(out, "out");
    convoy::align::AlignmentTiming timing;
    if (cfg) {
      timing = cfg->cfg.timing;
      timing.t_slot_s = cfg->cfg.slot_s;
    }
    *out = convoy::align::alignment_overhead(convoy::align::parse_scheme(scheme), beamwidth_deg, timing);
  });
}

}  // extern "C"
