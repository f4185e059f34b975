#include "qlink/presets.hpp"

#include <algorithm>

#include "qlink/errors.hpp"

namespace qlink {

namespace {

ScenarioConfig alice_bob() {
  ScenarioConfig cfg;
  cfg.duration_s = 3600.0;
  cfg.depol_p = 0.041;
  cfg.rates.pair_rate_total = 1600.0;
  cfg.perturbation_events = {{0.0, 2.5}, {1695.0, 2.5}, {3350.0, 2.5}};
  cfg.seed = 1;
  return cfg;
}

ScenarioConfig alice_charlie() {
  ScenarioConfig cfg;
  cfg.duration_s = 3300.0;
  cfg.depol_p = 0.0667;
  cfg.rates.pair_rate_total = 780.0;
  cfg.perturbation_events = {{0.0, 2.5}, {1678.0, 2.5}, {2981.0, 2.5}};
  cfg.seed = 1;
  return cfg;
}

ScenarioConfig alice_bob_converged() {
  ScenarioConfig cfg;
  cfg.duration_s = 25.0 * 163.0;  // room for 25 disjoint tomography blocks
  cfg.depol_p = 0.0409;
  cfg.rates.pair_rate_total = 1600.0;
  cfg.aapt.mode = EstimatorMode::segmented;
  cfg.seed = 1;
  return cfg;
}

ScenarioConfig integration_sweep() {
  ScenarioConfig cfg;
  cfg.duration_s = 163.0;
  cfg.depol_p = 0.0409;
  cfg.rates.pair_rate_total = 1600.0;
  cfg.aapt.mode = EstimatorMode::segmented;
  cfg.seed = 1;
  return cfg;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"alice-bob", "alice-charlie", "alice-bob-converged", "alice-bob-perturbed",
          "integration-sweep"};
}

ScenarioConfig preset_config(const std::string& name) {
  if (name == "alice-bob") return alice_bob();
  if (name == "alice-bob-perturbed") return alice_bob();
  if (name == "alice-charlie") return alice_charlie();
  if (name == "alice-bob-converged") return alice_bob_converged();
  if (name == "integration-sweep") return integration_sweep();
  throw DomainError("unknown preset: " + name);
}

bool preset_is_sweep(const std::string& name) { return name == "integration-sweep"; }

}  // namespace qlink
