#include "qlink/runner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "json.hpp"

#include "qlink/channel.hpp"
#include "qlink/errors.hpp"

namespace qlink {

namespace {

using nlohmann::json;

// Remembers every file handed out so a failed run can remove its partial
// outputs; the summary goes through the same set but last, as the commit
// marker.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::filesystem::path file(const std::string& name) {
    created_.push_back(dir_ / name);
    names_.push_back(name);
    return created_.back();
  }

  void discard_all() {
    for (const auto& p : created_) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
  }

  const std::vector<std::string>& names() const { return names_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> created_;
  std::vector<std::string> names_;
};

json tracker_stats(const EventStream& stream, double f_th) {
  if (stream.ticks.empty()) return nullptr;
  double sum = 0.0, min_f = 1.0;
  std::int64_t above = 0;
  for (const auto& t : stream.ticks) {
    sum += t.f_r;
    min_f = std::min(min_f, t.f_r);
    if (t.f_r >= f_th) ++above;
  }
  const double n = static_cast<double>(stream.ticks.size());
  return json{{"mean_f_r", sum / n},
              {"min_f_r", min_f},
              {"final_f_r", stream.ticks.back().f_r},
              {"frac_above_f_th", static_cast<double>(above) / n}};
}

json truth_stats(const EventStream& stream) {
  if (stream.truths.empty()) return nullptr;
  double sum = 0.0, min_f = 1.0;
  for (const auto& t : stream.truths) {
    sum += t.f_q;
    min_f = std::min(min_f, t.f_q);
  }
  return json{{"mean_f_q", sum / static_cast<double>(stream.truths.size())},
              {"min_f_q", min_f},
              {"final_f_q", stream.truths.back().f_q}};
}

json estimator_stats(const std::vector<TomogramResult>& rs) {
  if (rs.empty()) return nullptr;
  double sum = 0.0, min_f = 1.0, max_f = 0.0, purity = 0.0, max_rhat = 0.0;
  int zero_acc = 0;
  for (const auto& r : rs) {
    sum += r.fq_mean;
    min_f = std::min(min_f, r.fq_mean);
    max_f = std::max(max_f, r.fq_mean);
    purity += r.purity_mean;
    if (std::isfinite(r.rhat)) max_rhat = std::max(max_rhat, r.rhat);
    if (r.zero_accepted) ++zero_acc;
  }
  const double n = static_cast<double>(rs.size());
  return json{{"windows", rs.size()},      {"mean_fq", sum / n},
              {"min_fq", min_f},           {"max_fq", max_f},
              {"mean_purity", purity / n}, {"max_rhat", max_rhat},
              {"zero_accept_windows", zero_acc}};
}

void write_choi_dumps(OutputSet& outs, const EstimationOutput& est,
                      const std::vector<double>& times) {
  if (times.empty()) return;

  struct Series {
    std::string name;
    const std::vector<TomogramResult>* rs;
    GaugeResult gauge;
  };
  std::vector<Series> series;
  if (!est.segmented.empty()) {
    std::vector<ChoiMatrix> chois;
    chois.reserve(est.segmented.size());
    for (const auto& r : est.segmented) chois.emplace_back(r.choi_mean);
    series.push_back(Series{"AAPT_SEG", &est.segmented, gauge_fix(chois)});
  }
  if (!est.sliding.empty()) {
    std::vector<ChoiMatrix> chois;
    chois.reserve(est.sliding.size());
    for (const auto& r : est.sliding) chois.emplace_back(r.choi_mean);
    series.push_back(Series{"AAPT_SLIDE", &est.sliding, gauge_fix(chois)});
  }
  if (series.empty()) return;

  for (double t : times) {
    std::vector<ChoiDumpEntry> entries;
    for (const auto& s : series) {
      // latest window reported by time t; the first one when t precedes all
      std::size_t idx = 0;
      for (std::size_t i = 0; i < s.rs->size(); ++i) {
        if ((*s.rs)[i].end_s <= t) idx = i;
      }
      ChoiDumpEntry e;
      e.estimator = s.name;
      e.window_id = (*s.rs)[idx].window_id;
      e.window_end_s = (*s.rs)[idx].end_s;
      e.raw = (*s.rs)[idx].choi_mean;
      e.gauge_fixed = s.gauge.corrected[idx].mat();
      e.gauge_params = s.gauge.v_params;
      entries.push_back(std::move(e));
    }
    write_choi_file(outs.file("choi_" + format_double(t) + ".json"), t, entries);
  }
}

void write_summary(OutputSet& outs, const ScenarioConfig& cfg,
                   const std::string& label, const EventStream* stream,
                   const EstimationOutput* est,
                   const std::vector<std::string>& extra_warnings) {
  json j;
  j["label"] = label;
  j["seed"] = cfg.seed;
  j["config"] = json::parse(config_to_json_text(cfg));
  if (stream) {
    j["counts"] = {{"ticks", stream->ticks.size()},
                   {"records", stream->records.size()},
                   {"truths", stream->truths.size()}};
    j["tracker"] = tracker_stats(*stream, cfg.tracker.f_th);
    j["truth"] = truth_stats(*stream);
  }
  if (est) {
    j["segmented"] = estimator_stats(est->segmented);
    j["sliding"] = estimator_stats(est->sliding);
  }
  std::vector<std::string> warnings = extra_warnings;
  if (est) {
    warnings.insert(warnings.end(), est->warnings.begin(), est->warnings.end());
  }
  j["warnings"] = warnings;
  json names = json::array();
  for (const auto& n : outs.names()) names.push_back(n);
  names.push_back("summary.json");
  j["outputs"] = names;
  write_text_file(outs.file("summary.json"), j.dump(2) + "\n");
}

std::vector<TraceRow> all_trace_rows(const EventStream& stream,
                                     const EstimationOutput& est) {
  std::vector<TraceRow> rows = ref_rows(stream);
  const auto seg = tomogram_rows("AAPT_SEG", est.segmented);
  const auto sli = tomogram_rows("AAPT_SLIDE", est.sliding);
  rows.insert(rows.end(), seg.begin(), seg.end());
  rows.insert(rows.end(), sli.begin(), sli.end());
  const auto tru = truth_rows(stream);
  rows.insert(rows.end(), tru.begin(), tru.end());
  return rows;
}

}  // namespace

EstimationOutput estimate_stream(const EventStream& stream, const ScenarioConfig& cfg) {
  EstimationOutput out;
  const DensityMatrix rho_in = assumed_input_state();
  const bool do_seg = cfg.aapt.mode != EstimatorMode::sliding;
  const bool do_slide = cfg.aapt.mode != EstimatorMode::segmented;
  if (do_seg) {
    ScheduleResult sched = segmented_schedule(stream.records);
    out.warnings.insert(out.warnings.end(), sched.warnings.begin(),
                        sched.warnings.end());
    for (const auto& w : sched.windows) {
      out.segmented.push_back(run_tomography(w, rho_in, cfg.aapt.mcmc, cfg.seed));
    }
  }
  if (do_slide) {
    ScheduleResult sched = sliding_schedule(stream.records);
    out.warnings.insert(out.warnings.end(), sched.warnings.begin(),
                        sched.warnings.end());
    for (const auto& w : sched.windows) {
      out.sliding.push_back(run_tomography(w, rho_in, cfg.aapt.mcmc, cfg.seed));
    }
  }
  return out;
}

void run_full(const RunManifest& manifest) {
  validate_config(manifest.cfg);
  OutputSet outs(manifest.out_dir);
  try {
    EventStream stream = run_scenario(manifest.cfg);
    stream.config_json = config_to_json_text(manifest.cfg);
    write_stream_file(outs.file("stream.ndjson"), stream);
    write_trace_csv(outs.file("tracker.csv"), ref_rows(stream));
    write_trace_csv(outs.file("truth.csv"), truth_rows(stream));

    EstimationOutput est = estimate_stream(stream, manifest.cfg);
    std::vector<TraceRow> tomo = tomogram_rows("AAPT_SEG", est.segmented);
    const auto sli = tomogram_rows("AAPT_SLIDE", est.sliding);
    tomo.insert(tomo.end(), sli.begin(), sli.end());
    write_trace_csv(outs.file("tomograms.csv"), tomo);
    write_trace_csv(outs.file("trace.csv"), all_trace_rows(stream, est));
    write_choi_dumps(outs, est, manifest.choi_times);
    write_summary(outs, manifest.cfg, manifest.label, &stream, &est, {});
  } catch (...) {
    outs.discard_all();
    throw;
  }
}

void run_simulate(const RunManifest& manifest) {
  validate_config(manifest.cfg);
  OutputSet outs(manifest.out_dir);
  try {
    EventStream stream = run_scenario(manifest.cfg);
    stream.config_json = config_to_json_text(manifest.cfg);
    write_stream_file(outs.file("stream.ndjson"), stream);
    write_trace_csv(outs.file("tracker.csv"), ref_rows(stream));
    write_trace_csv(outs.file("truth.csv"), truth_rows(stream));
    write_summary(outs, manifest.cfg, manifest.label, &stream, nullptr, {});
  } catch (...) {
    outs.discard_all();
    throw;
  }
}

void run_estimate(const std::filesystem::path& stream_path,
                  const RunManifest& manifest) {
  validate_config(manifest.cfg);
  OutputSet outs(manifest.out_dir);
  try {
    const EventStream stream = read_stream_file(stream_path);
    EstimationOutput est = estimate_stream(stream, manifest.cfg);
    std::vector<TraceRow> tomo = tomogram_rows("AAPT_SEG", est.segmented);
    const auto sli = tomogram_rows("AAPT_SLIDE", est.sliding);
    tomo.insert(tomo.end(), sli.begin(), sli.end());
    write_trace_csv(outs.file("tomograms.csv"), tomo);
    write_choi_dumps(outs, est, manifest.choi_times);
    write_summary(outs, manifest.cfg, manifest.label, nullptr, &est, {});
  } catch (...) {
    outs.discard_all();
    throw;
  }
}

std::vector<SweepRow> run_sweep_rows(const ScenarioConfig& base,
                                     const std::vector<double>& taus,
                                     int seeds_per_tau) {
  std::vector<SweepRow> rows;
  for (std::size_t ti = 0; ti < taus.size(); ++ti) {
    for (int s = 0; s < seeds_per_tau; ++s) {
      ScenarioConfig cfg = base;
      cfg.aapt.tau_s = taus[ti];
      cfg.aapt.mode = EstimatorMode::segmented;
      cfg.duration_s = 16.0 * (taus[ti] + cfg.aapt.dead_time_s);
      cfg.seed = base.seed + 97 * ti + static_cast<std::uint64_t>(s);
      const EventStream stream = run_scenario(cfg);
      const EstimationOutput est = estimate_stream(stream, cfg);
      if (est.segmented.empty()) continue;
      const TomogramResult& r = est.segmented.front();
      rows.push_back(SweepRow{taus[ti], cfg.seed, r.fq_mean, r.fq_std, r.purity_mean});
    }
  }
  return rows;
}

void run_sweep(const RunManifest& manifest) {
  validate_config(manifest.cfg);
  OutputSet outs(manifest.out_dir);
  try {
    const std::vector<double> taus{0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0};
    const int seeds_per_tau = 3;
    const auto rows = run_sweep_rows(manifest.cfg, taus, seeds_per_tau);

    std::string csv = "tau_s,seed,fq_mean,fq_std,purity_mean\n";
    for (const auto& r : rows) {
      csv += format_double(r.tau_s) + "," + std::to_string(r.seed) + "," +
             format_double(r.fq_mean) + "," + format_double(r.fq_std) + "," +
             format_double(r.purity_mean) + "\n";
    }
    write_text_file(outs.file("sweep.csv"), csv);

    json per_tau = json::array();
    for (double tau : taus) {
      double std_sum = 0.0, fq_sum = 0.0;
      int n = 0;
      for (const auto& r : rows) {
        if (r.tau_s == tau) {
          std_sum += r.fq_std;
          fq_sum += r.fq_mean;
          ++n;
        }
      }
      if (n > 0) {
        per_tau.push_back({{"tau_s", tau},
                           {"mean_fq", fq_sum / n},
                           {"mean_fq_std", std_sum / n},
                           {"runs", n}});
      }
    }
    json j;
    j["label"] = manifest.label;
    j["seed"] = manifest.cfg.seed;
    j["config"] = json::parse(config_to_json_text(manifest.cfg));
    j["sweep"] = per_tau;
    json names = json::array();
    for (const auto& n : outs.names()) names.push_back(n);
    names.push_back("summary.json");
    j["outputs"] = names;
    write_text_file(outs.file("summary.json"), j.dump(2) + "\n");
  } catch (...) {
    outs.discard_all();
    throw;
  }
}

std::vector<LatencyEntry> detection_latencies(const std::vector<TraceRow>& rows,
                                              const std::vector<double>& event_times,
                                              double detect_level,
                                              double recover_level) {
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  for (const auto& r : rows) series[r.estimator].push_back({r.time_s, r.fidelity});
  for (auto& [name, sv] : series) std::sort(sv.begin(), sv.end());

  std::vector<double> events = event_times;
  std::sort(events.begin(), events.end());

  std::vector<LatencyEntry> out;
  for (const auto& [name, sv] : series) {
    for (std::size_t i = 0; i < events.size(); ++i) {
      const double ev = events[i];
      const double bound = i + 1 < events.size()
                               ? events[i + 1]
                               : std::numeric_limits<double>::infinity();
      LatencyEntry e;
      e.event_time_s = ev;
      e.estimator = name;
      std::size_t k = 0;
      while (k < sv.size() && sv[k].first < ev) ++k;
      for (; k < sv.size() && sv[k].first < bound; ++k) {
        if (sv[k].second < detect_level) {
          e.detected = true;
          e.detect_latency_s = sv[k].first - ev;
          break;
        }
      }
      if (e.detected) {
        for (std::size_t m = k + 1; m < sv.size() && sv[m].first < bound; ++m) {
          if (sv[m].second >= recover_level) {
            e.recovered = true;
            e.recover_latency_s = sv[m].first - ev;
            break;
          }
        }
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::string compare_runs(const std::filesystem::path& dir_a,
                         const std::filesystem::path& dir_b, double detect_level) {
  struct Side {
    std::vector<TraceRow> rows;
    std::vector<double> events;
    double f_th = 0.98;
  };
  auto load = [](const std::filesystem::path& dir) {
    Side s;
    s.rows = read_trace_csv(dir / "trace.csv");
    const json summary = json::parse(read_text_file(dir / "summary.json"));
    const ScenarioConfig cfg =
        config_from_json_text(summary.at("config").dump());
    for (const auto& ev : cfg.perturbation_events) s.events.push_back(ev.time_s);
    s.f_th = cfg.tracker.f_th;
    return s;
  };
  const Side a = load(dir_a);
  const Side b = load(dir_b);

  auto entries_json = [](const std::vector<LatencyEntry>& es) {
    json arr = json::array();
    for (const auto& e : es) {
      json item;
      item["event_time_s"] = e.event_time_s;
      item["estimator"] = e.estimator;
      item["detected"] = e.detected;
      if (e.detected) item["detect_latency_s"] = e.detect_latency_s;
      item["recovered"] = e.recovered;
      if (e.recovered) item["recover_latency_s"] = e.recover_latency_s;
      arr.push_back(std::move(item));
    }
    return arr;
  };

  json report;
  report["detect_level"] = detect_level;
  if (a.events.empty() && b.events.empty()) {
    report["note"] = "no scripted perturbation events in either trace";
    report["a"] = json{{"dir", dir_a.string()}, {"latencies", json::array()}};
    report["b"] = json{{"dir", dir_b.string()}, {"latencies", json::array()}};
    return report.dump(2) + "\n";
  }

  const auto ea = detection_latencies(a.rows, a.events, detect_level, a.f_th);
  const auto eb = detection_latencies(b.rows, b.events, detect_level, b.f_th);
  report["a"] = json{{"dir", dir_a.string()}, {"latencies", entries_json(ea)}};
  report["b"] = json{{"dir", dir_b.string()}, {"latencies", entries_json(eb)}};

  json diffs = json::array();
  for (const auto& x : ea) {
    for (const auto& y : eb) {
      if (x.estimator == y.estimator && x.event_time_s == y.event_time_s &&
          x.detected && y.detected) {
        diffs.push_back({{"estimator", x.estimator},
                         {"event_time_s", x.event_time_s},
                         {"detect_latency_diff_s",
                          x.detect_latency_s - y.detect_latency_s}});
      }
    }
  }
  report["a_minus_b"] = diffs;

  auto within = [&](const std::vector<LatencyEntry>& es) {
    json arr = json::array();
    for (const auto& x : es) {
      if (x.estimator != "AAPT_SLIDE" || !x.detected) continue;
      for (const auto& y : es) {
        if (y.estimator == "AAPT_SEG" && y.event_time_s == x.event_time_s &&
            y.detected) {
          arr.push_back({{"event_time_s", x.event_time_s},
                         {"sliding_minus_segmented_s",
                          x.detect_latency_s - y.detect_latency_s}});
        }
      }
    }
    return arr;
  };
  report["within_a_sliding_vs_segmented"] = within(ea);
  report["within_b_sliding_vs_segmented"] = within(eb);
  return report.dump(2) + "\n";
}

}  // namespace qlink
