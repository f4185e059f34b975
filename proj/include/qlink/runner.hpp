#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qlink/aapt.hpp"
#include "qlink/io.hpp"
#include "qlink/link_sim.hpp"

namespace qlink {

struct RunManifest {
  ScenarioConfig cfg;
  std::filesystem::path out_dir;
  std::string label;  // preset name or config path, echoed into the summary
  std::vector<double> choi_times;
};

struct EstimationOutput {
  std::vector<TomogramResult> segmented;
  std::vector<TomogramResult> sliding;
  std::vector<std::string> warnings;
};

// Runs the schedules requested by cfg.aapt.mode over the stream's records.
// Chain seeds derive from cfg.seed and each window's record content, so
// re-estimating a persisted stream under the same config reproduces every
// tomogram exactly.
EstimationOutput estimate_stream(const EventStream& stream, const ScenarioConfig& cfg);

// simulate + estimate + exports; summary.json is written last as the commit
// marker and partial outputs are removed if anything fails.
void run_full(const RunManifest& manifest);

// simulate only: stream.ndjson, tracker.csv, truth.csv, summary.json.
void run_simulate(const RunManifest& manifest);

// estimate from a persisted stream: tomograms.csv (+ Choi dumps), summary.json.
void run_estimate(const std::filesystem::path& stream_path, const RunManifest& manifest);

// Integration-time sweep driver: one short converged run per (tau, seed),
// sweep.csv + summary.json.
struct SweepRow {
  double tau_s = 0.0;
  std::uint64_t seed = 0;
  double fq_mean = 0.0;
  double fq_std = 0.0;
  double purity_mean = 0.0;
};
std::vector<SweepRow> run_sweep_rows(const ScenarioConfig& base,
                                     const std::vector<double>& taus, int seeds_per_tau);
void run_sweep(const RunManifest& manifest);

struct LatencyEntry {
  double event_time_s = 0.0;
  std::string estimator;
  bool detected = false;
  double detect_latency_s = 0.0;
  bool recovered = false;
  double recover_latency_s = 0.0;
};

// For each scripted event and estimator series in the trace: time until the
// fidelity first drops below detect_level (searching up to the next event),
// and from detection until it climbs back above recover_level.
std::vector<LatencyEntry> detection_latencies(const std::vector<TraceRow>& rows,
                                              const std::vector<double>& event_times,
                                              double detect_level, double recover_level);

// Side-by-side latency report for two run directories (trace.csv +
// summary.json each); returns the report as pretty JSON text.
std::string compare_runs(const std::filesystem::path& dir_a,
                         const std::filesystem::path& dir_b, double detect_level);

}  // namespace qlink
