#include "qlink/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qlink {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double clamp_pm1(double x) { return std::clamp(x, -1.0, 1.0); }

double safe_fraction(double num, double den, double floor, const char* what) {
  if (den <= floor)
    throw DomainError(std::string(what) + ": no light on the detector pair");
  return num / den;
}

double wrap_2pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

}  // namespace

EpcState initial_epc_state(const TrackerSettings& cfg) {
  EpcState st;
  st.step = cfg.step_max;
  return st;
}

const char* to_string(StepEvent e) {
  switch (e) {
    case StepEvent::none: return "none";
    case StepEvent::improve: return "improve";
    case StepEvent::shrink: return "shrink";
    case StepEvent::kick: return "kick";
  }
  return "none";
}

FractionSet fractions_from_powers(const PowerReadings& r, double power_floor) {
  double peak = 0.0;
  for (double p : r.given_h) peak = std::max(peak, p);
  for (double p : r.given_d) peak = std::max(peak, p);
  const double floor = power_floor >= 0.0 ? power_floor : 1e-12 * peak;

  FractionSet f;
  f.f_hh = safe_fraction(r.given_h[0], r.given_h[0] + r.given_h[1], floor,
                         "fractions_from_powers[H|H]");
  f.f_dh = safe_fraction(r.given_h[2], r.given_h[2] + r.given_h[3], floor,
                         "fractions_from_powers[D|H]");
  f.f_hd = safe_fraction(r.given_d[0], r.given_d[0] + r.given_d[1], floor,
                         "fractions_from_powers[H|D]");
  f.f_dd = safe_fraction(r.given_d[2], r.given_d[2] + r.given_d[3], floor,
                         "fractions_from_powers[D|D]");
  return f;
}

double predicted_f_dd(const UnitaryParams& p) {
  const double c = std::cos(0.5 * p.theta);
  const double s = std::sin(0.5 * p.theta);
  const double cp = std::cos(0.5 * (p.psi + p.lam));
  const double sm = std::sin(0.5 * (p.psi - p.lam));
  return c * c * cp * cp + s * s * sm * sm;
}

UnitaryParams params_from_fractions(const FractionSet& f, double eps_degenerate) {
  for (double v : {f.f_hh, f.f_dh, f.f_hd})
    if (!(v >= 0.0 && v <= 1.0))
      throw DomainError("params_from_fractions: fraction outside [0, 1]");
  if (f.f_dd && !(*f.f_dd >= 0.0 && *f.f_dd <= 1.0))
    throw DomainError("params_from_fractions: fraction outside [0, 1]");

  UnitaryParams p;
  const double root = std::sqrt(std::clamp(f.f_hh, 0.0, 1.0));
  p.theta = 2.0 * std::acos(clamp_pm1(root));
  const double c = std::cos(0.5 * p.theta);
  const double s = std::sin(0.5 * p.theta);

  if (std::sin(p.theta) < eps_degenerate) {
    // contrast gone: the two phase equations are 0/0
    p.psi = 0.0;
    p.lam = std::acos(clamp_pm1(2.0 * f.f_dd.value_or(1.0) - 1.0));
    return p;
  }

  const double denom = 2.0 * c * s;
  const double psi_p = std::acos(clamp_pm1((2.0 * f.f_dh - 1.0) / denom));
  const double lam_p = std::acos(clamp_pm1((1.0 - 2.0 * f.f_hd) / denom));
  p.psi = psi_p;
  p.lam = lam_p;
  if (!f.f_dd) return p;

  UnitaryParams mixed = p;
  mixed.lam = wrap_2pi(kTwoPi - lam_p);
  const double err_principal = std::abs(predicted_f_dd(p) - *f.f_dd);
  const double err_mixed = std::abs(predicted_f_dd(mixed) - *f.f_dd);
  return err_mixed < err_principal ? mixed : p;
}

double reference_fidelity(const FractionSet& f) {
  return reference_fidelity(f, Mat::Identity(2, 2));
}

double reference_fidelity(const FractionSet& f, const Mat& target) {
  const Mat u = unitary_from_params(params_from_fractions(f));
  if (target.rows() != 2 || target.cols() != 2 || !is_unitary(target, 1e-8))
    throw DomainError("reference_fidelity: target must be a 2x2 unitary");
  return std::norm((target.adjoint() * u).trace()) / 4.0;
}

Mat epc_unitary(const std::array<double, 4>& voltages, double gain_rad_per_volt) {
  static const std::array<Mat, 2> axes = {pauli_x(), pauli_y()};
  Mat u = Mat::Identity(2, 2);
  for (int stage = 0; stage < 4; ++stage) {
    const double a = gain_rad_per_volt * voltages[stage];
    const Mat& sigma = axes[stage % 2];  // stage axes x, y, x, y
    const Mat r = std::cos(0.5 * a) * Mat::Identity(2, 2) -
                  Cplx(0, 1) * std::sin(0.5 * a) * sigma;
    u = r * u;  // stage 1 acts first
  }
  return u;
}

StepEvent optimizer_step(EpcState& st, const ProbeFn& probe, const TrackerSettings& cfg,
                         Rng& rng) {
  const double f_cur = probe(st.voltages);
  if (f_cur >= cfg.f_th) return StepEvent::none;

  double best_f = f_cur;
  std::array<double, 4> best_v = st.voltages;
  bool improved = false;
  for (int stage = 0; stage < 4; ++stage) {
    for (double dir : {+1.0, -1.0}) {
      std::array<double, 4> cand = st.voltages;
      cand[stage] = std::clamp(cand[stage] + dir * st.step, -cfg.v_max, cfg.v_max);
      const double f = probe(cand);
      if (f > best_f) {
        best_f = f;
        best_v = cand;
        improved = true;
      }
    }
  }

  if (improved) {
    st.voltages = best_v;
    st.stagnation_count = 0;
    return StepEvent::improve;
  }

  ++st.stagnation_count;
  const double halved = 0.5 * st.step;
  if (halved < cfg.step_min) {
    for (int stage = 0; stage < 4; ++stage)
      st.voltages[stage] = std::clamp(st.voltages[stage] + rng.normal(0.0, cfg.kick_sigma),
                                      -cfg.v_max, cfg.v_max);
    st.step = cfg.step_max;
    return StepEvent::kick;
  }
  st.step = halved;
  return StepEvent::shrink;
}

}  // namespace qlink
