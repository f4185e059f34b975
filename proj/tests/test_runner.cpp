#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "qlink/algebra.hpp"
#include "qlink/channel.hpp"
#include "qlink/records.hpp"
#include "qlink/runner.hpp"

using namespace qlink;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) {
    path = fs::temp_directory_path() /
           (std::string("qlink_runner_") + tag + "_" + std::to_string(::getpid()));
    std::error_code ec;
    fs::remove_all(path, ec);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Two clean measurement cycles as the detectors would report them for an
// identity channel: projector i % 16, one record per slot, counts at the
// noiseless expectation for a flux of 4000 per window.
EventStream two_cycle_stream() {
  EventStream st;
  st.seed = 9;
  st.config_json = config_to_json_text(ScenarioConfig{});
  const DensityMatrix rho = assumed_input_state();
  const KrausChannel id = KrausChannel::identity();
  for (int i = 0; i < 32; ++i) {
    const int pi = i % 16;
    const PureState proj = tensor(PureState::ket(kProjectorTable[pi].first),
                                  PureState::ket(kProjectorTable[pi].second));
    MeasurementRecord r;
    r.projector = pi;
    r.counts = std::llround(4000.0 * measurement_probability(id, rho, proj));
    r.start_s = 10.1875 * i;
    r.tau_s = 10.0;
    st.records.push_back(r);
  }
  return st;
}

ScenarioConfig small_mcmc(EstimatorMode mode) {
  ScenarioConfig cfg;
  cfg.seed = 9;
  cfg.aapt.mode = mode;
  cfg.aapt.mcmc.n_steps = 2048;
  cfg.aapt.mcmc.retained = 256;
  cfg.aapt.mcmc.chains = 1;
  return cfg;
}

ScenarioConfig quiet_sim() {
  ScenarioConfig cfg;
  cfg.duration_s = 163.0;
  cfg.drift_sigma = 0.0;
  cfg.rates.power_noise_rel = 0.0;
  cfg.seed = 4;
  cfg.aapt.mcmc.n_steps = 4096;
  cfg.aapt.mcmc.retained = 256;
  cfg.aapt.mcmc.chains = 2;
  return cfg;
}

}  // namespace

TEST_CASE("estimate_stream windows both schedules and seeds them by content") {
  const EventStream st = two_cycle_stream();
  const EstimationOutput est = estimate_stream(st, small_mcmc(EstimatorMode::both));

  CHECK(est.warnings.empty());
  REQUIRE(est.segmented.size() == 2);
  REQUIRE(est.sliding.size() == 17);
  for (const auto& r : est.segmented) {
    CHECK(r.n_samples == 256);
    CHECK(std::isfinite(r.fq_mean));
    CHECK(r.fq_mean >= 0.0);
    CHECK(r.fq_mean <= 1.0 + 1e-9);
  }

  // Seeds hash the window's records, not its schedule position, so windows
  // holding the same records produce bit-identical posteriors.
  CHECK(est.segmented[0].fq_mean == est.sliding[0].fq_mean);
  CHECK(est.segmented[0].fq_std == est.sliding[0].fq_std);
  CHECK(est.segmented[1].fq_mean == est.sliding[16].fq_mean);
  CHECK(est.segmented[1].purity_mean == est.sliding[16].purity_mean);
  CHECK((est.segmented[1].choi_mean - est.sliding[16].choi_mean)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK(est.segmented[1].window_id == 1);
  CHECK(est.sliding[16].window_id == 16);
}

TEST_CASE("estimate_stream honors the mode switch") {
  const EventStream st = two_cycle_stream();
  ScenarioConfig cfg = small_mcmc(EstimatorMode::segmented);
  cfg.aapt.mcmc.n_steps = 512;
  cfg.aapt.mcmc.retained = 64;

  EstimationOutput est = estimate_stream(st, cfg);
  CHECK(est.segmented.size() == 2);
  CHECK(est.sliding.empty());

  cfg.aapt.mode = EstimatorMode::sliding;
  est = estimate_stream(st, cfg);
  CHECK(est.segmented.empty());
  CHECK(est.sliding.size() == 17);
}

TEST_CASE("run_full writes the whole output set") {
  TempDir tmp("full");
  RunManifest m;
  m.cfg = quiet_sim();
  m.out_dir = tmp.path;
  m.label = "unit";
  m.choi_times = {163.0};
  run_full(m);

  for (const char* name :
       {"stream.ndjson", "tracker.csv", "truth.csv", "tomograms.csv",
        "trace.csv", "choi_163.json", "summary.json"}) {
    CHECK_MESSAGE(fs::exists(tmp.path / name), name);
  }

  const json summary = json::parse(read_text_file(tmp.path / "summary.json"));
  CHECK(summary.at("label") == "unit");
  CHECK(summary.at("seed") == 4);
  CHECK(summary.at("counts").at("ticks") == 1630);
  CHECK(summary.at("counts").at("records") == 16);
  CHECK(summary.at("counts").at("truths") == 16);
  CHECK(summary.at("tracker").at("min_f_r").get<double>() ==
        doctest::Approx(1.0));
  CHECK(summary.at("truth").at("mean_f_q").get<double>() ==
        doctest::Approx(1.0 - 0.75 * 0.0409));
  CHECK(summary.at("segmented").at("windows") == 1);
  CHECK(summary.at("sliding").at("windows") == 1);
  CHECK(summary.at("segmented").at("max_rhat").get<double>() < 2.0);
  CHECK(summary.at("warnings").empty());
  const ScenarioConfig echoed =
      config_from_json_text(summary.at("config").dump());
  CHECK(echoed.duration_s == m.cfg.duration_s);
  CHECK(echoed.seed == m.cfg.seed);
  for (const char* name :
       {"stream.ndjson", "tracker.csv", "truth.csv", "tomograms.csv",
        "trace.csv", "choi_163.json", "summary.json"}) {
    bool found = false;
    for (const auto& n : summary.at("outputs")) found |= (n == name);
    CHECK_MESSAGE(found, name);
  }

  // trace.csv merges every series
  const auto rows = read_trace_csv(tmp.path / "trace.csv");
  int n_ref = 0, n_seg = 0, n_slide = 0, n_truth = 0;
  for (const auto& r : rows) {
    if (r.estimator == "REF") ++n_ref;
    else if (r.estimator == "AAPT_SEG") ++n_seg;
    else if (r.estimator == "AAPT_SLIDE") ++n_slide;
    else if (r.estimator == "TRUTH") ++n_truth;
    else FAIL("unexpected estimator " << r.estimator);
  }
  CHECK(n_ref == 1630);
  CHECK(n_seg == 1);
  CHECK(n_slide == 1);
  CHECK(n_truth == 16);

  const auto tomo = read_trace_csv(tmp.path / "tomograms.csv");
  REQUIRE(tomo.size() == 2);
  CHECK(tomo[0].estimator == "AAPT_SEG");
  CHECK(tomo[1].estimator == "AAPT_SLIDE");
  CHECK(tomo[0].time_s == 15.0 * 10.1875 + 10.0);
  CHECK(tomo[0].fidelity > 0.8);
  CHECK(tomo[0].fidelity < 1.0 + 1e-9);
  REQUIRE(tomo[0].window_id.has_value());
  CHECK(*tomo[0].window_id == 0);

  const json chois = json::parse(read_text_file(tmp.path / "choi_163.json"));
  CHECK(chois.at("time_s") == 163.0);
  REQUIRE(chois.at("entries").size() == 2);
  CHECK(chois.at("entries").at(0).at("estimator") == "AAPT_SEG");
  CHECK(chois.at("entries").at(1).at("estimator") == "AAPT_SLIDE");
  CHECK(chois.at("entries").at(0).at("window_end_s").get<double>() ==
        doctest::Approx(162.8125));

  // re-estimating the persisted stream stays consistent with the run
  TempDir est_dir("estimate");
  RunManifest em;
  em.cfg = quiet_sim();
  em.cfg.aapt.mode = EstimatorMode::segmented;
  em.out_dir = est_dir.path;
  em.label = "replay";
  run_estimate(tmp.path / "stream.ndjson", em);
  const auto replay = read_trace_csv(est_dir.path / "tomograms.csv");
  REQUIRE(replay.size() == 1);
  CHECK(replay[0].estimator == "AAPT_SEG");
  CHECK(replay[0].fidelity == tomo[0].fidelity);
  CHECK(replay[0].fidelity_std == tomo[0].fidelity_std);
  const json esum = json::parse(read_text_file(est_dir.path / "summary.json"));
  CHECK_FALSE(esum.contains("counts"));
  CHECK(esum.at("segmented").at("windows") == 1);
}

TEST_CASE("run_simulate skips estimation") {
  TempDir tmp("simulate");
  RunManifest m;
  m.cfg = quiet_sim();
  m.cfg.duration_s = 21.0;  // two records, no full window
  m.out_dir = tmp.path;
  m.label = "sim-only";
  run_simulate(m);
  CHECK(fs::exists(tmp.path / "stream.ndjson"));
  CHECK(fs::exists(tmp.path / "tracker.csv"));
  CHECK(fs::exists(tmp.path / "truth.csv"));
  CHECK_FALSE(fs::exists(tmp.path / "tomograms.csv"));
  const json summary = json::parse(read_text_file(tmp.path / "summary.json"));
  CHECK(summary.at("counts").at("records") == 2);
  CHECK_FALSE(summary.contains("segmented"));
}

TEST_CASE("run_estimate discards partial output when the stream is unreadable") {
  TempDir tmp("discard");
  RunManifest m;
  m.cfg = small_mcmc(EstimatorMode::segmented);
  m.out_dir = tmp.path;
  m.label = "broken";
  CHECK_THROWS_AS(run_estimate(tmp.path / "missing.ndjson", m), DomainError);
  CHECK_FALSE(fs::exists(tmp.path / "summary.json"));
  CHECK_FALSE(fs::exists(tmp.path / "tomograms.csv"));
}

TEST_CASE("detection_latencies finds drops and recoveries per estimator") {
  std::vector<TraceRow> rows;
  for (int t = 10; t <= 100; t += 10) {
    TraceRow seg;
    seg.time_s = t;
    seg.estimator = "AAPT_SEG";
    seg.fidelity = (t == 40 || t == 50) ? 0.85 : 0.99;
    rows.push_back(seg);
    TraceRow sli = seg;
    sli.estimator = "AAPT_SLIDE";
    sli.fidelity = 0.99;
    rows.push_back(sli);
  }

  const auto es = detection_latencies(rows, {35.0, 95.0}, 0.93, 0.93);
  REQUIRE(es.size() == 4);  // two estimators x two events, name-sorted

  CHECK(es[0].estimator == "AAPT_SEG");
  CHECK(es[0].event_time_s == 35.0);
  CHECK(es[0].detected);
  CHECK(es[0].detect_latency_s == 5.0);   // first low row at t = 40
  CHECK(es[0].recovered);
  CHECK(es[0].recover_latency_s == 25.0); // back above threshold at t = 60

  CHECK(es[1].estimator == "AAPT_SEG");
  CHECK(es[1].event_time_s == 95.0);
  CHECK_FALSE(es[1].detected);
  CHECK_FALSE(es[1].recovered);

  CHECK(es[2].estimator == "AAPT_SLIDE");
  CHECK_FALSE(es[2].detected);
  CHECK(es[3].estimator == "AAPT_SLIDE");
  CHECK_FALSE(es[3].detected);

  // a drop after the next event belongs to that event, not the earlier one
  const auto late = detection_latencies(rows, {45.0}, 0.93, 0.93);
  REQUIRE(late.size() == 2);
  CHECK(late[0].estimator == "AAPT_SEG");
  CHECK(late[0].detected);
  CHECK(late[0].detect_latency_s == 5.0);  // t = 50 row
}

TEST_CASE("compare_runs reports the no-event case plainly") {
  TempDir ta("cmp_a");
  TempDir tb("cmp_b");
  RunManifest m;
  m.cfg = quiet_sim();
  m.cfg.duration_s = 21.0;
  m.cfg.aapt.mcmc.n_steps = 512;
  m.cfg.aapt.mcmc.retained = 64;
  m.cfg.aapt.mcmc.chains = 1;
  m.out_dir = ta.path;
  m.label = "a";
  run_full(m);
  m.out_dir = tb.path;
  m.label = "b";
  run_full(m);

  const json report = json::parse(compare_runs(ta.path, tb.path, 0.9));
  CHECK(report.at("detect_level") == 0.9);
  CHECK(report.at("note") ==
        "no scripted perturbation events in either trace");
  CHECK(report.at("a").at("latencies").empty());
  CHECK(report.at("b").at("latencies").empty());
  CHECK_FALSE(report.contains("a_minus_b"));
}

TEST_CASE("run_sweep_rows derives duration and seed per cell") {
  ScenarioConfig base;
  base.drift_sigma = 0.0;
  base.depol_p = 0.0;
  base.rates.power_noise_rel = 0.0;
  base.seed = 31;
  base.aapt.mcmc.n_steps = 2048;
  base.aapt.mcmc.retained = 128;
  base.aapt.mcmc.chains = 1;

  const auto rows = run_sweep_rows(base, {2.0, 5.0}, 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].tau_s == 2.0);
  CHECK(rows[0].seed == 31);
  CHECK(rows[1].tau_s == 5.0);
  CHECK(rows[1].seed == 31 + 97);
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.fq_mean));
    CHECK(r.fq_mean > 0.5);
    CHECK(r.fq_mean < 1.0 + 1e-9);
    CHECK(r.fq_std >= 0.0);
    CHECK(r.purity_mean > 0.5);
    CHECK(r.purity_mean < 1.0 + 1e-9);
  }
}
