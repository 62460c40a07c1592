// Command-line front end. Talks to the simulator only through the C API.
#include <cstdio>
#include <filesystem>
#include <deque>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "convoy/convoy.h"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<unsigned long long> seed;
  std::string out_dir = ".";
  std::string model;
};

// Exit codes: 0 success, 1 validation error, 2 runtime error.
int report(convoy_status s, const char* what) {
  if (s == CONVOY_OK) return 0;
  std::fprintf(stderr, "%s: %s: %s\n", what, convoy_status_name(s), convoy_last_error());
  return convoy_status_is_validation(s) ? 1 : 2;
}

struct Handles {
  convoy_config* cfg = nullptr;
  convoy_model* model = nullptr;
  std::deque<convoy_table*> tables;
  ~Handles() {
    for (auto* t : tables) convoy_table_free(t);
    convoy_model_free(model);
    convoy_config_free(cfg);
  }
  convoy_table** table() {
    tables.push_back(nullptr);
    return &tables.back();
  }
};

int load_config(const Common& c, Handles& h) {
  convoy_status s = c.config.empty() ? convoy_config_default(&h.cfg) : convoy_config_load(c.config.c_str(), &h.cfg);
  if (s == CONVOY_E_IO) {
    std::fprintf(stderr, "config: %s\n", convoy_last_error());
    return 1;
  }
  if (int rc = report(s, "config")) return rc;
  if (c.seed) {
    if (int rc = report(convoy_config_set(h.cfg, "seed", std::to_string(*c.seed).c_str()), "--seed")) return rc;
  }
  if (!c.model.empty()) {
    if (int rc = report(convoy_config_set(h.cfg, "gnn.model_path", c.model.c_str()), "--model")) return rc;
  }
  if (int rc = report(convoy_config_validate(h.cfg), "config")) return rc;
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) {
    std::fprintf(stderr, "cannot create output directory %s: %s\n", c.out_dir.c_str(), ec.message().c_str());
    return 2;
  }
  return 0;
}

std::string out_path(const Common& c, const char* name) { return (fs::path(c.out_dir) / name).string(); }

int write(const Common& c, const convoy_table* t, const char* name) {
  return report(convoy_table_write_csv(t, out_path(c, name).c_str()), name);
}

int load_model(const Common& c, Handles& h, bool required) {
  if (c.model.empty()) {
    if (!required) return 0;
    std::fprintf(stderr, "--model is required for this command\n");
    return 1;
  }
  convoy_status s = convoy_model_load(c.model.c_str(), &h.model);
  if (s == CONVOY_E_IO) {
    std::fprintf(stderr, "model: %s\n", convoy_last_error());
    return 1;
  }
  return report(s, "model");
}

int cmd_run(const Common& c) {
  Handles h;
  if (int rc = load_config(c, h)) return rc;
  if (int rc = load_model(c, h, false)) return rc;
  auto** m = h.table();
  auto** l = h.table();
  auto** t = h.table();
  if (int rc = report(convoy_run_scenario(h.cfg, h.model, m, l, t), "run")) return rc;
  if (int rc = write(c, *m, "metrics.csv")) return rc;
  if (int rc = write(c, *l, "links.csv")) return rc;
  if (int rc = write(c, *t, "formation_trace.csv")) return rc;
  if (convoy_table_rows(*m) > 0) {
    if (int rc = report(convoy_table_write_plot(*m, out_path(c, "metrics.csv").c_str(), out_path(c, "metrics.gp").c_str()),
                        "plot"))
      return rc;
  }
  std::printf("%zu slots written to %s\n", convoy_table_rows(*m), c.out_dir.c_str());
  return 0;
}

int cmd_sweep(const Common& c) {
  Handles h;
  if (int rc = load_config(c, h)) return rc;
  auto** t = h.table();
  if (int rc = report(convoy_sweep_align(h.cfg, nullptr, 0, t), "sweep-align")) return rc;
  if (int rc = report(convoy_table_write_plot(*t, out_path(c, "overhead.csv").c_str(), out_path(c, "overhead.gp").c_str()),
                      "plot"))
    return rc;
  for (std::size_t r = 0; r < convoy_table_rows(*t); ++r)
    std::printf("%6s deg  %-20s %s s  gap %s%%\n", convoy_table_cell(*t, r, 0), convoy_table_cell(*t, r, 1),
                convoy_table_cell(*t, r, 2), convoy_table_cell(*t, r, 3));
  return 0;
}

int cmd_train(const Common& c, const std::string& model_out) {
  Handles h;
  if (int rc = load_config(c, h)) return rc;
  auto** loss = h.table();
  if (int rc = report(convoy_train_gnn(h.cfg, &h.model, loss), "train-gnn")) return rc;
  const std::string path = model_out.empty() ? out_path(c, "model.cvgn") : model_out;
  if (int rc = report(convoy_model_save(h.model, path.c_str()), "model")) return rc;
  if (int rc = report(convoy_table_write_plot(*loss, out_path(c, "loss.csv").c_str(), out_path(c, "loss.gp").c_str()),
                      "plot"))
    return rc;
  const std::size_t n = convoy_table_rows(*loss);
  std::printf("epoch 0 loss %s, epoch %zu loss %s; model saved to %s\n", convoy_table_cell(*loss, 0, 1), n - 1,
              convoy_table_cell(*loss, n - 1, 1), path.c_str());
  return 0;
}

int cmd_eval(const Common& c) {
  Handles h;
  if (int rc = load_config(c, h)) return rc;
  if (c.model.empty()) {
    auto** loss = h.table();
    if (int rc = report(convoy_train_gnn(h.cfg, &h.model, loss), "train-gnn")) return rc;
  } else if (int rc = load_model(c, h, true)) {
    return rc;
  }
  auto** t = h.table();
  if (int rc = report(convoy_eval_beamforming(h.cfg, h.model, t), "eval-beamforming")) return rc;
  return report(convoy_table_write_plot(*t, out_path(c, "evaluation.csv").c_str(), out_path(c, "evaluation.gp").c_str()),
                "plot");
}

int cmd_oracle(const Common& c) {
  Handles h;
  if (int rc = load_config(c, h)) return rc;
  auto** t = h.table();
  if (int rc = report(convoy_oracle(h.cfg, t), "oracle")) return rc;
  return write(c, *t, "oracle.csv");
}

int cmd_fuzz(const Common& c, std::optional<std::size_t> events) {
  Handles h;
  if (int rc = load_config(c, h)) return rc;
  if (events) {
    if (int rc = report(convoy_config_set(h.cfg, "fuzz.events", std::to_string(*events).c_str()), "--events")) return rc;
  }
  auto** summary = h.table();
  auto** trace = h.table();
  int ok = 0;
  if (int rc = report(convoy_fuzz_topology(h.cfg, summary, trace, &ok), "fuzz-topology")) return rc;
  if (int rc = write(c, *summary, "fuzz_summary.csv")) return rc;
  if (int rc = write(c, *trace, "fuzz_trace.csv")) return rc;
  std::printf("%s quiescent points, %s violations\n", convoy_table_cell(*summary, 0, 2), convoy_table_cell(*summary, 0, 4));
  if (!ok) {
    std::fprintf(stderr, "fuzz-topology: invariants violated\n");
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative-driving mmWave simulator"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Configuration file (key = value lines)");
    sub->add_option("--seed", common.seed, "Seed, overrides the config");
    sub->add_option("--out-dir", common.out_dir, "Directory for outputs")->capture_default_str();
  };

  auto* run = app.add_subcommand("run", "Run a scenario and write metrics.csv and links.csv");
  add_common(run);
  run->add_option("--model", common.model, "GNN checkpoint for beam.method = gnn");

  auto* sweep = app.add_subcommand("sweep-align", "Alignment overhead versus beamwidth");
  add_common(sweep);

  std::string model_out;
  auto* train = app.add_subcommand("train-gnn", "Train the GNN beamformer");
  add_common(train);
  train->add_option("--model", model_out, "Where to save the checkpoint (default <out-dir>/model.cvgn)");

  auto* eval = app.add_subcommand("eval-beamforming", "Compare GNN, WMMSE, random and oracle");
  add_common(eval);
  eval->add_option("--model", common.model, "GNN checkpoint; trained from the config when omitted");

  auto* oracle = app.add_subcommand("oracle", "Brute-force optimum on small instances");
  add_common(oracle);

  std::optional<std::size_t> events;
  auto* fuzz = app.add_subcommand("fuzz-topology", "Random join/leave fuzzing of the formation protocol");
  add_common(fuzz);
  fuzz->add_option("--events", events, "Number of join/leave events");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*run) return cmd_run(common);
  if (*sweep) return cmd_sweep(common);
  if (*train) return cmd_train(common, model_out);
  if (*eval) return cmd_eval(common);
  if (*oracle) return cmd_oracle(common);
  if (*fuzz) return cmd_fuzz(common, events);
  return 1;
}
