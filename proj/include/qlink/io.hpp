#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qlink/aapt.hpp"
#include "qlink/link_sim.hpp"

namespace qlink {

// Strict parse: every key must be a known ScenarioConfig field; unknown or
// ill-typed keys raise ConfigError naming all of them.
ScenarioConfig config_from_json_text(const std::string& text);
ScenarioConfig config_from_json_file(const std::filesystem::path& path);

// Canonical full echo (defaults spelled out); parses back to an equal config.
std::string config_to_json_text(const ScenarioConfig& cfg);

// Newline-delimited self-describing records: one header line (seed + config
// echo), then track/count/truth lines merged in time order.
void write_stream_file(const std::filesystem::path& path, const EventStream& stream);
EventStream read_stream_file(const std::filesystem::path& path);

struct TraceRow {
  double time_s = 0.0;
  std::string estimator;  // REF | AAPT_SEG | AAPT_SLIDE | TRUTH
  double fidelity = 0.0;
  std::optional<double> fidelity_std;
  std::optional<double> purity;
  std::optional<int> window_id;
};

std::vector<TraceRow> ref_rows(const EventStream& stream);
std::vector<TraceRow> truth_rows(const EventStream& stream);
std::vector<TraceRow> tomogram_rows(const std::string& estimator,
                                    const std::vector<TomogramResult>& results);

// Single header `time_s,estimator,fidelity,fidelity_std,purity,window_id`;
// full double precision; absent fields stay empty.
void write_trace_csv(const std::filesystem::path& path,
                     const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

struct ChoiDumpEntry {
  std::string estimator;
  int window_id = 0;
  double window_end_s = 0.0;
  Mat raw;
  Mat gauge_fixed;
  UnitaryParams gauge_params;
};

// One file per requested timestamp: raw and gauge-corrected matrices as
// row-major (re, im) pairs plus metadata.
void write_choi_file(const std::filesystem::path& path, double time_s,
                     const std::vector<ChoiDumpEntry>& entries);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

std::string format_double(double value);

}  // namespace qlink
