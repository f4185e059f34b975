#pragma once

#include <array>
#include <functional>
#include <optional>

#include "qlink/algebra.hpp"
#include "qlink/rng.hpp"

namespace qlink {

// Power fractions from the polarimeter, conditioned on the launched state.
struct FractionSet {
  double f_hh = 0.0;  // H detected given H launched
  double f_dh = 0.0;  // D detected given H launched
  double f_hd = 0.0;  // H detected given D launched
  std::optional<double> f_dd;  // D detected given D launched
};

// Detected optical powers for one launched state, in projection order
// H, V, D, A.
using PowerRow = std::array<double, 4>;

struct PowerReadings {
  PowerRow given_h{};
  PowerRow given_d{};
};

// Electronic polarization controller: four stages, retardance gain * voltage,
// stage axes x, y, x, y applied in stage order.
struct TrackerSettings {
  double f_th = 0.98;
  double tick_s = 0.1;
  double gain_rad_per_volt = 0.5;
  double v_max = 5.0;
  double step_max = 0.5;   // volts
  double step_min = 0.01;  // volts
  double kick_sigma = 0.5;  // volts, 0.1 * v_max
};

struct EpcState {
  std::array<double, 4> voltages{0.0, 0.0, 0.0, 0.0};
  double step = 0.5;
  int stagnation_count = 0;
};

EpcState initial_epc_state(const TrackerSettings& cfg);

enum class StepEvent { none, improve, shrink, kick };

const char* to_string(StepEvent e);

// Power rows -> fractions. Denominator pairs at or below the floor mean no
// light reached the detector pair. A negative floor selects the default,
// 1e-12 of the largest reading.
FractionSet fractions_from_powers(const PowerReadings& r, double power_floor = -1.0);

// Angle extraction. Near theta = 0 or pi the interference contrast vanishes
// (sin theta < eps_degenerate), so psi is set to 0 and the remaining phase is
// read from f_dd. Away from it, the cosine inversions leave a two-fold branch
// ambiguity (lam vs 2pi - lam); the branch whose forward-predicted f_dd is
// closer to the measured one wins, ties keep the principal value.
UnitaryParams params_from_fractions(const FractionSet& f, double eps_degenerate = 1e-3);

// Forward model for the D-given-D fraction of the parameterized unitary.
double predicted_f_dd(const UnitaryParams& p);

// Fidelity of the unitary reconstructed from fractions against a target
// (identity by default).
double reference_fidelity(const FractionSet& f);
double reference_fidelity(const FractionSet& f, const Mat& target);

Mat epc_unitary(const std::array<double, 4>& voltages, double gain_rad_per_volt);

// One feedback iteration. `probe` maps candidate voltages to the observed
// reference fidelity; above threshold nothing is probed beyond the current
// setting. Below it, all eight one-stage moves are probed and the best
// improving one is taken; a sweep without improvement halves the step, and
// once the step falls below step_min every stage gets a Gaussian kick and the
// step resets. Saturated moves are clipped to the voltage range.
using ProbeFn = std::function<double(const std::array<double, 4>&)>;

StepEvent optimizer_step(EpcState& st, const ProbeFn& probe, const TrackerSettings& cfg,
                         Rng& rng);

}  // namespace qlink
