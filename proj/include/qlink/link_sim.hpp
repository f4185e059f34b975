#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qlink/aapt.hpp"
#include "qlink/channel.hpp"
#include "qlink/records.hpp"
#include "qlink/rng.hpp"
#include "qlink/tracker.hpp"

namespace qlink {

struct PerturbationEvent {
  double time_s = 0.0;
  double magnitude = 0.0;  // rad, about a random axis
};

struct SourceSettings {
  double eta = 0.78539816339744831;  // pi/4: balanced pair state
  double mix_eps = 0.0;              // white-noise admixture
};

struct RateSettings {
  double pair_rate_total = 1600.0;  // coincidences/s summed over one basis set
  double background_rate = 0.0;     // accidentals/s per projector
  double classical_power = 1.0;     // launched reference power, arb. units
  double power_noise_rel = 0.01;    // relative detector noise per reading
};

enum class EstimatorMode { segmented, sliding, both };

std::string to_string(EstimatorMode mode);
EstimatorMode estimator_mode_from_string(const std::string& name);

struct AaptSettings {
  double tau_s = 10.0;
  double dead_time_s = 0.1875;  // per projector move
  EstimatorMode mode = EstimatorMode::both;
  McmcSettings mcmc;
};

struct ScenarioConfig {
  double duration_s = 163.0;
  double drift_sigma = 0.001;  // rad/sqrt(s), per axis
  std::vector<PerturbationEvent> perturbation_events;
  double depol_p = 0.0409;
  SourceSettings source;
  RateSettings rates;
  TrackerSettings tracker;
  AaptSettings aapt;
  std::optional<UnitaryParams> receiver_misalignment;
  std::uint64_t seed = 1;
};

// Throws ConfigError naming every offending field.
void validate_config(const ScenarioConfig& cfg);

// exp(-i delta.sigma / 2); the zero vector maps to the identity.
Mat rotation_about(const Eigen::Vector3d& delta);

// One diffusion step of the fiber unitary: a random rotation with per-axis
// angle N(0, sigma^2 dt), then a column re-orthonormalization to stop
// round-off from accumulating.  sigma <= 0 consumes no draws.
Mat drift_step(const Mat& u, double sigma, double dt, Rng& rng);

// Discrete jump: rotation by `magnitude` about an isotropically drawn axis.
Mat perturb(const Mat& u, double magnitude, Rng& rng);

// (1 - eps) |psi_eta><psi_eta| + eps I/4 with
// |psi_eta> = cos(eta)|HV> + sin(eta)|VH>.
DensityMatrix source_state(const SourceSettings& source);

// Physical channel on Bob's arm: drift, then the EPC at the given voltages,
// then any fixed receiver misalignment, wrapped in a depolarizing layer.
KrausChannel true_channel(const Mat& u_drift, const std::array<double, 4>& voltages,
                          const TrackerSettings& tracker, double depol_p,
                          const std::optional<Mat>& receiver = std::nullopt);

// Detector powers for one launched reference state, rows ordered H, V, D, A.
// Each reading gets independent multiplicative noise and clips at zero;
// power_noise_rel <= 0 consumes no draws.
PowerRow classical_powers(const KrausChannel& ch, Basis launched,
                          const RateSettings& rates, Rng& rng);

// Expected coincidences/s on one projector for the current channel.
double coincidence_rate(const KrausChannel& ch, const DensityMatrix& rho_src,
                        int projector, const RateSettings& rates);

// Runs tracker and pair measurement against a drifting channel.  One probe of
// the optimizer advances one tick (the EPC is physically driven to whatever it
// probes); expected coincidences integrate across ticks with partial-tick
// overlap and each projector window closes with one Poisson draw.  The loop
// stops at the first optimizer step boundary past duration_s, so the trace can
// run at most one sweep long.
EventStream run_scenario(const ScenarioConfig& cfg);

}  // namespace qlink
