#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qlink/algebra.hpp"
#include "qlink/tracker.hpp"

namespace qlink {

// The sixteen two-qubit product projectors of the tomography cycle, in
// acquisition order. First letter: ancilla analyzer, second: transmitted arm.
inline constexpr int kProjectorCount = 16;

extern const std::array<std::pair<Basis, Basis>, kProjectorCount> kProjectorTable;
extern const std::array<const char*, kProjectorCount> kProjectorLabels;

int projector_index(const std::string& label);
PureState projector_state(int index);

// One coincidence acquisition: counts integrated over [start_s, start_s + tau_s]
// on one projector.
struct MeasurementRecord {
  int projector = 0;  // index into kProjectorTable
  std::int64_t counts = 0;
  double start_s = 0.0;
  double tau_s = 0.0;
};

// One tracker tick: probed fidelity, reconstructed angles, applied voltages.
struct TrackTick {
  double time_s = 0.0;
  double f_r = 0.0;
  UnitaryParams angles;
  std::array<double, 4> voltages{};
  double step = 0.0;
  StepEvent event = StepEvent::none;
};

// Ground truth emitted at projector boundaries: the physical channel's process
// matrix and its identity-target fidelity/purity at that instant.
struct TruthSnapshot {
  double time_s = 0.0;
  double f_q = 0.0;
  double purity = 0.0;
  Mat choi;  // 4x4
};

struct EventStream {
  std::uint64_t seed = 0;
  std::string config_json;  // effective scenario configuration, echoed
  std::vector<TrackTick> ticks;
  std::vector<MeasurementRecord> records;
  std::vector<TruthSnapshot> truths;
};

}  // namespace qlink
