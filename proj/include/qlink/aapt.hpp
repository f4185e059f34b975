#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qlink/channel.hpp"
#include "qlink/records.hpp"
#include "qlink/rng.hpp"

namespace qlink {

// 2 d^4 real Kraus-generator coordinates plus one flux coordinate.
inline constexpr int kParamCount = 33;
using ParamVector = std::array<double, kParamCount>;

// Generator layout: four 2x2 matrices G_k, each packed as 4 real parts then
// 4 imaginary parts, row-major; the channel is A_k = G_k S^{-1/2} with
// S = sum G_k^dag G_k, so any draw maps to a CPTP channel.
KrausChannel kraus_from_params(const ParamVector& x);

// Detected-flux scale K = K0 (1 + 0.1 x_33), floored at K0 * 1e-6.
double flux_from_params(const ParamVector& x, double k0);

// Anchor for the flux scale: 4 * mean counts over a window (a maximally mixed
// pair state puts 1/4 of the flux on every product projector).
double k0_estimate(std::span<const MeasurementRecord> records);

struct McmcSettings {
  std::int64_t n_steps = std::int64_t{1} << 18;
  std::int64_t burn_in = -1;  // negative: n_steps / 4
  std::int64_t retained = 1024;
  double beta0 = 0.05;
  bool adapt_beta = true;
  // The printed count model drops the flux factor inside the count power;
  // false (default) keeps the full Poisson form with lambda = K p.
  bool literal_count_form = false;
  int chains = 2;

  std::int64_t effective_burn_in() const {
    return burn_in >= 0 ? burn_in : n_steps / 4;
  }
};

// Poisson log-likelihood of one window, up to data-only constants.
// Probabilities are floored at 1e-12; a numerically singular generator sum
// yields -infinity.
double log_likelihood(std::span<const MeasurementRecord> records,
                      const DensityMatrix& rho_in, double k0, const ParamVector& x,
                      bool literal_count_form = false);

struct PosteriorSample {
  ParamVector x;
  KrausChannel channel;
  double log_likelihood;
};

struct ChainResult {
  std::vector<PosteriorSample> samples;
  double acceptance_rate = 0.0;  // after burn-in
  double beta_final = 0.0;
  bool zero_accepted = false;    // no accepted move after burn-in
};

// Preconditioned Crank-Nicolson chain over the standard-normal prior:
// x' = sqrt(1-beta^2) x + beta xi, accepted with min(1, exp(dlogL)).
// beta doubles/halves every 1000 burn-in steps toward acceptance in
// [0.2, 0.4] and is frozen afterwards.
ChainResult pcn_sample(std::span<const MeasurementRecord> records,
                       const DensityMatrix& rho_in, double k0,
                       const McmcSettings& settings, Rng& rng);

ChoiMatrix bayes_mean_choi(std::span<const PosteriorSample> samples);

struct FidelityStats {
  double mean = 0.0;
  double std_dev = 0.0;  // population
};

FidelityStats fidelity_posterior(std::span<const PosteriorSample> samples,
                                 const Mat& target);

// Split-free potential scale reduction on equal-length scalar chains.
double gelman_rubin(const std::vector<std::vector<double>>& chains);

struct Window {
  int id = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  std::vector<MeasurementRecord> records;
};

struct ScheduleResult {
  std::vector<Window> windows;
  std::vector<std::string> warnings;
};

// Disjoint blocks of 16 records vs every contiguous run of 16; windows that
// do not cover all sixteen projectors exactly once are skipped with a warning.
ScheduleResult segmented_schedule(std::span<const MeasurementRecord> records);
ScheduleResult sliding_schedule(std::span<const MeasurementRecord> records);

struct TomogramResult {
  int window_id = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  Mat choi_mean;  // validated before storing
  double fq_mean = 0.0;
  double fq_std = 0.0;
  double purity_mean = 0.0;
  int n_samples = 0;
  double acceptance_rate = 0.0;
  double rhat = 0.0;  // NaN when a single chain ran
  bool zero_accepted = false;
};

// Chain seeds hash the window's record content (plus chain index), so a
// replay of the same records reproduces the estimate bit for bit regardless
// of which schedule produced the window.
std::uint64_t window_seed(std::uint64_t base_seed, const Window& w, int chain);

TomogramResult run_tomography(const Window& w, const DensityMatrix& rho_in,
                              const McmcSettings& settings, std::uint64_t base_seed);

// Ideal pair state the estimator assumes unless told otherwise.
DensityMatrix assumed_input_state();

}  // namespace qlink
