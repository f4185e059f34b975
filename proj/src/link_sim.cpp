#include "qlink/link_sim.hpp"

#include <algorithm>
#include <cmath>

#include "qlink/errors.hpp"

namespace qlink {

namespace {

constexpr double kPi = 3.14159265358979312;

void check(bool ok, const char* field, std::vector<std::string>& bad) {
  if (!ok) bad.emplace_back(field);
}

}  // namespace

std::string to_string(EstimatorMode mode) {
  switch (mode) {
    case EstimatorMode::segmented:
      return "segmented";
    case EstimatorMode::sliding:
      return "sliding";
    case EstimatorMode::both:
      return "both";
  }
  throw DomainError("unknown estimator mode");
}

EstimatorMode estimator_mode_from_string(const std::string& name) {
  if (name == "segmented") return EstimatorMode::segmented;
  if (name == "sliding") return EstimatorMode::sliding;
  if (name == "both") return EstimatorMode::both;
  throw DomainError("unknown estimator mode: " + name);
}

void validate_config(const ScenarioConfig& cfg) {
  std::vector<std::string> bad;
  check(std::isfinite(cfg.duration_s) && cfg.duration_s > 0.0, "duration_s", bad);
  check(std::isfinite(cfg.drift_sigma) && cfg.drift_sigma >= 0.0, "drift_sigma", bad);
  for (std::size_t i = 0; i < cfg.perturbation_events.size(); ++i) {
    const auto& ev = cfg.perturbation_events[i];
    if (!(std::isfinite(ev.time_s) && ev.time_s >= 0.0 && ev.time_s <= cfg.duration_s &&
          std::isfinite(ev.magnitude) && ev.magnitude >= 0.0)) {
      bad.push_back("perturbation_events[" + std::to_string(i) + "]");
    }
  }
  check(cfg.depol_p >= 0.0 && cfg.depol_p <= 1.0, "depol_p", bad);
  check(std::isfinite(cfg.source.eta), "source.eta", bad);
  check(cfg.source.mix_eps >= 0.0 && cfg.source.mix_eps <= 1.0, "source.mix_eps", bad);
  check(cfg.rates.pair_rate_total > 0.0, "rates.pair_rate_total", bad);
  check(cfg.rates.background_rate >= 0.0, "rates.background_rate", bad);
  check(cfg.rates.classical_power > 0.0, "rates.classical_power", bad);
  check(cfg.rates.power_noise_rel >= 0.0, "rates.power_noise_rel", bad);
  check(cfg.tracker.f_th > 0.0 && cfg.tracker.f_th <= 1.0, "tracker.f_th", bad);
  check(cfg.tracker.tick_s > 0.0, "tracker.tick_s", bad);
  check(cfg.tracker.gain_rad_per_volt > 0.0, "tracker.gain_rad_per_volt", bad);
  check(cfg.tracker.v_max > 0.0, "tracker.v_max", bad);
  check(cfg.tracker.step_min > 0.0, "tracker.step_min", bad);
  check(cfg.tracker.step_max >= cfg.tracker.step_min, "tracker.step_max", bad);
  check(cfg.tracker.kick_sigma >= 0.0, "tracker.kick_sigma", bad);
  check(cfg.aapt.tau_s > 0.0, "aapt.tau_s", bad);
  check(cfg.aapt.dead_time_s >= 0.0, "aapt.dead_time_s", bad);
  check(cfg.aapt.mcmc.n_steps > 0, "aapt.mcmc.n_steps", bad);
  check(cfg.aapt.mcmc.burn_in < cfg.aapt.mcmc.n_steps, "aapt.mcmc.burn_in", bad);
  check(cfg.aapt.mcmc.retained > 0, "aapt.mcmc.retained", bad);
  check(cfg.aapt.mcmc.beta0 > 0.0 && cfg.aapt.mcmc.beta0 <= 1.0, "aapt.mcmc.beta0",
        bad);
  check(cfg.aapt.mcmc.chains >= 1, "aapt.mcmc.chains", bad);
  if (cfg.receiver_misalignment) {
    const auto& m = *cfg.receiver_misalignment;
    check(m.theta >= 0.0 && m.theta <= kPi, "receiver_misalignment.theta", bad);
    check(m.psi >= 0.0 && m.psi < 2.0 * kPi, "receiver_misalignment.psi", bad);
    check(m.lam >= 0.0 && m.lam < 2.0 * kPi, "receiver_misalignment.lam", bad);
  }
  if (!bad.empty()) throw ConfigError("invalid configuration", std::move(bad));
}

Mat rotation_about(const Eigen::Vector3d& delta) {
  const double n = delta.norm();
  Mat r = Mat::Identity(2, 2);
  if (n < 1e-300) return r;
  const Eigen::Vector3d a = delta / n;
  const double c = std::cos(0.5 * n);
  const double s = std::sin(0.5 * n);
  const Cplx mi(0.0, -1.0);
  r = c * Mat::Identity(2, 2) +
      mi * s * (a.x() * pauli_x() + a.y() * pauli_y() + a.z() * pauli_z());
  return r;
}

Mat drift_step(const Mat& u, double sigma, double dt, Rng& rng) {
  if (sigma <= 0.0 || dt <= 0.0) return u;
  const double scale = sigma * std::sqrt(dt);
  const Eigen::Vector3d delta(rng.normal(0.0, scale), rng.normal(0.0, scale),
                              rng.normal(0.0, scale));
  Mat v = rotation_about(delta) * u;
  Eigen::Vector2cd c0 = v.col(0);
  c0 /= c0.norm();
  Eigen::Vector2cd c1 = v.col(1);
  c1 -= c0 * c0.dot(c1);
  c1 /= c1.norm();
  Mat w(2, 2);
  w.col(0) = c0;
  w.col(1) = c1;
  return w;
}

Mat perturb(const Mat& u, double magnitude, Rng& rng) {
  Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
  const double n = axis.norm();
  if (n < 1e-12) {
    axis = Eigen::Vector3d(0.0, 0.0, 1.0);
  } else {
    axis /= n;
  }
  return rotation_about(magnitude * axis) * u;
}

DensityMatrix source_state(const SourceSettings& source) {
  Vec psi = Vec::Zero(4);
  psi(1) = std::cos(source.eta);  // |H V>
  psi(2) = std::sin(source.eta);  // |V H>
  Mat rho = (1.0 - source.mix_eps) * (psi * psi.adjoint()) +
            source.mix_eps * 0.25 * Mat::Identity(4, 4);
  return DensityMatrix(rho);
}

KrausChannel true_channel(const Mat& u_drift, const std::array<double, 4>& voltages,
                          const TrackerSettings& tracker, double depol_p,
                          const std::optional<Mat>& receiver) {
  Mat u = epc_unitary(voltages, tracker.gain_rad_per_volt) * u_drift;
  if (receiver) u = (*receiver) * u;
  return compose(depolarizing(depol_p), KrausChannel({u}));
}

PowerRow classical_powers(const KrausChannel& ch, Basis launched,
                          const RateSettings& rates, Rng& rng) {
  const DensityMatrix rho_out =
      apply(ch, DensityMatrix::pure(PureState::ket(launched)));
  static constexpr std::array<Basis, 4> kOutputs{Basis::H, Basis::V, Basis::D,
                                                 Basis::A};
  PowerRow row{};
  for (std::size_t i = 0; i < kOutputs.size(); ++i) {
    double p = rates.classical_power * state_fidelity(PureState::ket(kOutputs[i]), rho_out);
    if (rates.power_noise_rel > 0.0) {
      p *= 1.0 + rng.normal(0.0, rates.power_noise_rel);
    }
    row[i] = std::max(0.0, p);
  }
  return row;
}

double coincidence_rate(const KrausChannel& ch, const DensityMatrix& rho_src,
                        int projector, const RateSettings& rates) {
  const double p = measurement_probability(ch, rho_src, projector_state(projector));
  return 0.25 * rates.pair_rate_total * p + rates.background_rate;
}

EventStream run_scenario(const ScenarioConfig& cfg) {
  validate_config(cfg);
  Rng rng(cfg.seed);

  const double tick = cfg.tracker.tick_s;
  const std::int64_t total_ticks = std::llround(cfg.duration_s / tick);
  const double tau = cfg.aapt.tau_s;
  const double cycle = tau + cfg.aapt.dead_time_s;

  const DensityMatrix rho_src = source_state(cfg.source);
  std::optional<Mat> receiver;
  if (cfg.receiver_misalignment) {
    receiver = unitary_from_params(*cfg.receiver_misalignment);
  }

  std::vector<PerturbationEvent> events = cfg.perturbation_events;
  std::stable_sort(events.begin(), events.end(),
                   [](const PerturbationEvent& a, const PerturbationEvent& b) {
                     return a.time_s < b.time_s;
                   });
  std::size_t next_event = 0;

  Mat u_drift = Mat::Identity(2, 2);
  EpcState st = initial_epc_state(cfg.tracker);

  EventStream out;
  out.seed = cfg.seed;
  out.ticks.reserve(static_cast<std::size_t>(total_ticks) + 16);

  std::int64_t tick_i = 0;
  double lambda_acc = 0.0;

  // Per tick, in order: drift, due perturbations, the two classical readings
  // (H row then D row), then any window that closes inside the tick draws its
  // Poisson count.  Keeping the order fixed makes a run a pure function of the
  // seed.
  auto probe = [&](const std::array<double, 4>& volts) -> double {
    const double t0 = static_cast<double>(tick_i) * tick;
    const double t1 = t0 + tick;
    u_drift = drift_step(u_drift, cfg.drift_sigma, tick, rng);
    while (next_event < events.size() &&
           events[next_event].time_s <= t0 + 1e-9) {
      u_drift = perturb(u_drift, events[next_event].magnitude, rng);
      ++next_event;
    }

    const KrausChannel ch =
        true_channel(u_drift, volts, cfg.tracker, cfg.depol_p, receiver);
    // The reference light senses the fiber unitary only; depolarization of
    // the pair statistics is invisible to it.
    const KrausChannel ch_ref =
        true_channel(u_drift, volts, cfg.tracker, 0.0, receiver);
    const PowerReadings readings{classical_powers(ch_ref, Basis::H, cfg.rates, rng),
                                 classical_powers(ch_ref, Basis::D, cfg.rates, rng)};
    const FractionSet fr = fractions_from_powers(readings);
    const double f_r = reference_fidelity(fr);

    const std::int64_t k_lo =
        std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(t0 / cycle)));
    for (std::int64_t k = k_lo; static_cast<double>(k) * cycle < t1; ++k) {
      const double win_start = static_cast<double>(k) * cycle;
      const double win_end = win_start + tau;
      const int proj = static_cast<int>(k % kProjectorCount);
      const double ov = std::min(t1, win_end) - std::max(t0, win_start);
      if (ov > 0.0) {
        lambda_acc += ov * coincidence_rate(ch, rho_src, proj, cfg.rates);
      }
      if (win_end > t0 && win_end <= t1) {
        MeasurementRecord rec;
        rec.projector = proj;
        rec.counts = rng.poisson(lambda_acc);
        rec.start_s = win_start;
        rec.tau_s = tau;
        out.records.push_back(rec);
        lambda_acc = 0.0;

        const ChoiMatrix cm = choi(ch);
        TruthSnapshot snap;
        snap.time_s = win_end;
        snap.f_q = choi_fidelity_to_unitary(cm, Mat::Identity(2, 2));
        snap.purity = choi_purity(cm);
        snap.choi = cm.mat();
        out.truths.push_back(std::move(snap));
      }
    }

    TrackTick row;
    row.time_s = t1;
    row.f_r = f_r;
    row.angles = params_from_fractions(fr);
    row.voltages = volts;
    row.step = st.step;
    row.event = StepEvent::none;
    out.ticks.push_back(row);
    ++tick_i;
    return f_r;
  };

  while (tick_i < total_ticks) {
    const StepEvent ev = optimizer_step(st, probe, cfg.tracker, rng);
    out.ticks.back().event = ev;
  }
  return out;
}

}  // namespace qlink
