#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "acceptance.hpp"
#include "qlink/errors.hpp"
#include "qlink/io.hpp"
#include "qlink/presets.hpp"
#include "qlink/runner.hpp"

namespace {

using namespace qlink;

struct SharedOpts {
  std::string config_path;
  std::string preset;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  double duration_s = 0.0;
  double tau_s = 0.0;
  std::int64_t mcmc_steps = 0;
  int chains = 0;
  std::string mode;
  std::vector<double> choi_times;

  CLI::Option* o_config = nullptr;
  CLI::Option* o_preset = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_duration = nullptr;
  CLI::Option* o_tau = nullptr;
  CLI::Option* o_steps = nullptr;
  CLI::Option* o_chains = nullptr;
  CLI::Option* o_mode = nullptr;
};

std::string preset_list() {
  std::string s;
  for (const auto& n : preset_names()) {
    if (!s.empty()) s += ", ";
    s += n;
  }
  return s;
}

void add_shared(CLI::App* cmd, SharedOpts& s, bool with_choi) {
  s.o_config = cmd->add_option("--config", s.config_path, "scenario config JSON file");
  s.o_preset =
      cmd->add_option("--preset", s.preset, "built-in scenario: " + preset_list());
  cmd->add_option("--out", s.out_dir, "output directory (default: out)");
  s.o_seed = cmd->add_option("--seed", s.seed, "override the base RNG seed");
  s.o_duration =
      cmd->add_option("--duration", s.duration_s, "override run duration in seconds");
  s.o_tau = cmd->add_option("--tau", s.tau_s,
                            "override the coincidence integration window in seconds");
  s.o_steps = cmd->add_option("--mcmc-steps", s.mcmc_steps, "override MCMC chain length");
  s.o_chains = cmd->add_option("--chains", s.chains, "override MCMC chain count");
  s.o_mode =
      cmd->add_option("--mode", s.mode, "estimator schedule: segmented, sliding, both");
  if (with_choi) {
    cmd->add_option("--choi-time", s.choi_times,
                    "timestamp (s) for a process-matrix dump file; repeatable");
  }
}

ScenarioConfig base_config(const SharedOpts& s, std::string* label) {
  if (s.o_preset->count() > 0 && s.o_config->count() > 0) {
    throw ConfigError("use either --preset or --config, not both", {});
  }
  if (s.o_preset->count() > 0) {
    *label = s.preset;
    try {
      return preset_config(s.preset);
    } catch (const DomainError& e) {
      throw ConfigError(e.what(), {"preset"});
    }
  }
  if (s.o_config->count() > 0) {
    *label = s.config_path;
    return config_from_json_file(s.config_path);
  }
  throw ConfigError("one of --preset or --config is required", {});
}

void apply_overrides(ScenarioConfig& cfg, const SharedOpts& s) {
  if (s.o_seed->count() > 0) cfg.seed = s.seed;
  if (s.o_duration->count() > 0) cfg.duration_s = s.duration_s;
  if (s.o_tau->count() > 0) cfg.aapt.tau_s = s.tau_s;
  if (s.o_steps->count() > 0) cfg.aapt.mcmc.n_steps = s.mcmc_steps;
  if (s.o_chains->count() > 0) cfg.aapt.mcmc.chains = s.chains;
  if (s.o_mode->count() > 0) {
    try {
      cfg.aapt.mode = estimator_mode_from_string(s.mode);
    } catch (const DomainError& e) {
      throw ConfigError(e.what(), {"mode"});
    }
  }
  validate_config(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entangled polarization link: simulation, tracking, and channel estimation"};
  app.require_subcommand(1);

  SharedOpts sim_o, run_o, est_o;
  std::string stream_path, dir_a, dir_b;
  double detect_level = 0.9;
  std::vector<int> criteria;

  auto* sim = app.add_subcommand(
      "simulate", "run the physical-layer simulation and persist the event stream");
  add_shared(sim, sim_o, false);

  auto* run = app.add_subcommand("run", "simulate, then estimate, in one pass");
  add_shared(run, run_o, true);

  auto* est = app.add_subcommand("estimate",
                                 "re-run channel estimation from a persisted stream");
  add_shared(est, est_o, true);
  est->add_option("stream", stream_path, "stream.ndjson from an earlier run")->required();

  auto* cmp =
      app.add_subcommand("compare", "detection-latency report for two run directories");
  cmp->add_option("run_a", dir_a, "first run directory")->required();
  cmp->add_option("run_b", dir_b, "second run directory")->required();
  cmp->add_option("--detect", detect_level,
                  "fidelity level that counts as detecting a disturbance");

  auto* self = app.add_subcommand("selftest", "run the built-in acceptance checks");
  self->add_option("--criterion", criteria,
                   "run only these checks (1-10); repeatable, default all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) {
      std::string label;
      ScenarioConfig cfg = base_config(sim_o, &label);
      apply_overrides(cfg, sim_o);
      run_simulate(RunManifest{cfg, sim_o.out_dir, label, {}});
      std::printf("outputs in %s\n", sim_o.out_dir.c_str());
    } else if (run->parsed()) {
      std::string label;
      ScenarioConfig cfg = base_config(run_o, &label);
      apply_overrides(cfg, run_o);
      const RunManifest m{cfg, run_o.out_dir, label, run_o.choi_times};
      if (run_o.o_preset->count() > 0 && preset_is_sweep(run_o.preset)) {
        run_sweep(m);
      } else {
        run_full(m);
      }
      std::printf("outputs in %s\n", run_o.out_dir.c_str());
    } else if (est->parsed()) {
      std::string label = stream_path;
      ScenarioConfig cfg;
      if (est_o.o_preset->count() > 0 || est_o.o_config->count() > 0) {
        cfg = base_config(est_o, &label);
      } else {
        cfg = config_from_json_text(read_stream_file(stream_path).config_json);
      }
      apply_overrides(cfg, est_o);
      run_estimate(stream_path, RunManifest{cfg, est_o.out_dir, label, est_o.choi_times});
      std::printf("outputs in %s\n", est_o.out_dir.c_str());
    } else if (cmp->parsed()) {
      std::fputs(compare_runs(dir_a, dir_b, detect_level).c_str(), stdout);
    } else if (self->parsed()) {
      if (qlink::acceptance::run_checks(criteria) > 0) return 3;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
