#include "qlink/io.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "qlink/errors.hpp"

namespace qlink {

namespace {

using nlohmann::json;

// Collects every unknown or ill-typed key instead of stopping at the first,
// so one ConfigError can name all offending fields.
class ObjReader {
 public:
  ObjReader(const json& obj, std::string prefix, std::vector<std::string>& errs)
      : obj_(obj), prefix_(std::move(prefix)), errs_(errs) {
    if (!obj_.is_object()) {
      errs_.push_back(path(""));
      degenerate_ = true;
    }
  }

  double num(const char* key, double def) {
    const json* v = lookup(key);
    if (!v) return def;
    if (!v->is_number()) {
      errs_.push_back(path(key));
      return def;
    }
    return v->get<double>();
  }

  std::int64_t integer(const char* key, std::int64_t def) {
    const json* v = lookup(key);
    if (!v) return def;
    if (!v->is_number_integer()) {
      errs_.push_back(path(key));
      return def;
    }
    return v->get<std::int64_t>();
  }

  int small_int(const char* key, int def) {
    return static_cast<int>(integer(key, def));
  }

  std::uint64_t uint(const char* key, std::uint64_t def) {
    const json* v = lookup(key);
    if (!v) return def;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
      return static_cast<std::uint64_t>(v->get<std::int64_t>());
    }
    errs_.push_back(path(key));
    return def;
  }

  bool boolean(const char* key, bool def) {
    const json* v = lookup(key);
    if (!v) return def;
    if (!v->is_boolean()) {
      errs_.push_back(path(key));
      return def;
    }
    return v->get<bool>();
  }

  std::string str(const char* key, std::string def) {
    const json* v = lookup(key);
    if (!v) return def;
    if (!v->is_string()) {
      errs_.push_back(path(key));
      return def;
    }
    return v->get<std::string>();
  }

  const json* child(const char* key) { return lookup(key); }

  void bad(const char* key) { errs_.push_back(path(key)); }

  void finish() {
    if (degenerate_) return;
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) errs_.push_back(path(item.key().c_str()));
    }
  }

  std::string path(const char* key) const {
    if (prefix_.empty()) return key;
    if (key[0] == '\0') return prefix_;
    return prefix_ + "." + key;
  }

 private:
  const json* lookup(const char* key) {
    if (degenerate_) return nullptr;
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  const json& obj_;
  std::string prefix_;
  std::vector<std::string>& errs_;
  std::set<std::string> seen_;
  bool degenerate_ = false;
};

ScenarioConfig config_from_json(const json& root) {
  std::vector<std::string> errs;
  ScenarioConfig cfg;
  ObjReader r(root, "", errs);

  cfg.duration_s = r.num("duration_s", cfg.duration_s);
  cfg.drift_sigma = r.num("drift_sigma", cfg.drift_sigma);
  if (const json* evs = r.child("perturbation_events")) {
    if (!evs->is_array()) {
      r.bad("perturbation_events");
    } else {
      cfg.perturbation_events.clear();
      for (std::size_t i = 0; i < evs->size(); ++i) {
        const std::string p = "perturbation_events[" + std::to_string(i) + "]";
        ObjReader er((*evs)[i], p, errs);
        PerturbationEvent ev;
        ev.time_s = er.num("time_s", 0.0);
        ev.magnitude = er.num("magnitude", 0.0);
        er.finish();
        cfg.perturbation_events.push_back(ev);
      }
    }
  }
  cfg.depol_p = r.num("depol_p", cfg.depol_p);
  if (const json* s = r.child("source")) {
    ObjReader sr(*s, "source", errs);
    cfg.source.eta = sr.num("eta", cfg.source.eta);
    cfg.source.mix_eps = sr.num("mix_eps", cfg.source.mix_eps);
    sr.finish();
  }
  if (const json* s = r.child("rates")) {
    ObjReader sr(*s, "rates", errs);
    cfg.rates.pair_rate_total = sr.num("pair_rate_total", cfg.rates.pair_rate_total);
    cfg.rates.background_rate = sr.num("background_rate", cfg.rates.background_rate);
    cfg.rates.classical_power = sr.num("classical_power", cfg.rates.classical_power);
    cfg.rates.power_noise_rel = sr.num("power_noise_rel", cfg.rates.power_noise_rel);
    sr.finish();
  }
  if (const json* s = r.child("tracker")) {
    ObjReader sr(*s, "tracker", errs);
    cfg.tracker.f_th = sr.num("f_th", cfg.tracker.f_th);
    cfg.tracker.tick_s = sr.num("tick_s", cfg.tracker.tick_s);
    cfg.tracker.gain_rad_per_volt =
        sr.num("gain_rad_per_volt", cfg.tracker.gain_rad_per_volt);
    cfg.tracker.v_max = sr.num("v_max", cfg.tracker.v_max);
    cfg.tracker.step_max = sr.num("step_max", cfg.tracker.step_max);
    cfg.tracker.step_min = sr.num("step_min", cfg.tracker.step_min);
    cfg.tracker.kick_sigma = sr.num("kick_sigma", cfg.tracker.kick_sigma);
    sr.finish();
  }
  if (const json* s = r.child("aapt")) {
    ObjReader sr(*s, "aapt", errs);
    cfg.aapt.tau_s = sr.num("tau_s", cfg.aapt.tau_s);
    cfg.aapt.dead_time_s = sr.num("dead_time_s", cfg.aapt.dead_time_s);
    const std::string mode = sr.str("mode", to_string(cfg.aapt.mode));
    try {
      cfg.aapt.mode = estimator_mode_from_string(mode);
    } catch (const DomainError&) {
      sr.bad("mode");
    }
    if (const json* m = sr.child("mcmc")) {
      ObjReader mr(*m, "aapt.mcmc", errs);
      cfg.aapt.mcmc.n_steps = mr.integer("n_steps", cfg.aapt.mcmc.n_steps);
      cfg.aapt.mcmc.burn_in = mr.integer("burn_in", cfg.aapt.mcmc.burn_in);
      cfg.aapt.mcmc.retained = mr.integer("retained", cfg.aapt.mcmc.retained);
      cfg.aapt.mcmc.beta0 = mr.num("beta0", cfg.aapt.mcmc.beta0);
      cfg.aapt.mcmc.adapt_beta = mr.boolean("adapt_beta", cfg.aapt.mcmc.adapt_beta);
      cfg.aapt.mcmc.literal_count_form =
          mr.boolean("literal_count_form", cfg.aapt.mcmc.literal_count_form);
      cfg.aapt.mcmc.chains = mr.small_int("chains", cfg.aapt.mcmc.chains);
      mr.finish();
    }
    sr.finish();
  }
  if (const json* s = r.child("receiver_misalignment")) {
    ObjReader sr(*s, "receiver_misalignment", errs);
    UnitaryParams m;
    m.theta = sr.num("theta", 0.0);
    m.psi = sr.num("psi", 0.0);
    m.lam = sr.num("lam", 0.0);
    sr.finish();
    cfg.receiver_misalignment = m;
  }
  cfg.seed = r.uint("seed", cfg.seed);
  r.finish();

  if (!errs.empty()) throw ConfigError("invalid configuration", std::move(errs));
  validate_config(cfg);
  return cfg;
}

json config_to_json(const ScenarioConfig& cfg) {
  json j;
  j["duration_s"] = cfg.duration_s;
  j["drift_sigma"] = cfg.drift_sigma;
  json evs = json::array();
  for (const auto& ev : cfg.perturbation_events) {
    evs.push_back({{"time_s", ev.time_s}, {"magnitude", ev.magnitude}});
  }
  j["perturbation_events"] = evs;
  j["depol_p"] = cfg.depol_p;
  j["source"] = {{"eta", cfg.source.eta}, {"mix_eps", cfg.source.mix_eps}};
  j["rates"] = {{"pair_rate_total", cfg.rates.pair_rate_total},
                {"background_rate", cfg.rates.background_rate},
                {"classical_power", cfg.rates.classical_power},
                {"power_noise_rel", cfg.rates.power_noise_rel}};
  j["tracker"] = {{"f_th", cfg.tracker.f_th},
                  {"tick_s", cfg.tracker.tick_s},
                  {"gain_rad_per_volt", cfg.tracker.gain_rad_per_volt},
                  {"v_max", cfg.tracker.v_max},
                  {"step_max", cfg.tracker.step_max},
                  {"step_min", cfg.tracker.step_min},
                  {"kick_sigma", cfg.tracker.kick_sigma}};
  j["aapt"] = {{"tau_s", cfg.aapt.tau_s},
               {"dead_time_s", cfg.aapt.dead_time_s},
               {"mode", to_string(cfg.aapt.mode)},
               {"mcmc",
                {{"n_steps", cfg.aapt.mcmc.n_steps},
                 {"burn_in", cfg.aapt.mcmc.burn_in},
                 {"retained", cfg.aapt.mcmc.retained},
                 {"beta0", cfg.aapt.mcmc.beta0},
                 {"adapt_beta", cfg.aapt.mcmc.adapt_beta},
                 {"literal_count_form", cfg.aapt.mcmc.literal_count_form},
                 {"chains", cfg.aapt.mcmc.chains}}}};
  if (cfg.receiver_misalignment) {
    j["receiver_misalignment"] = {{"theta", cfg.receiver_misalignment->theta},
                                  {"psi", cfg.receiver_misalignment->psi},
                                  {"lam", cfg.receiver_misalignment->lam}};
  } else {
    j["receiver_misalignment"] = nullptr;
  }
  j["seed"] = cfg.seed;
  return j;
}

json mat_to_pairs(const Mat& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      data.push_back({m(i, k).real(), m(i, k).imag()});
    }
  }
  return data;
}

Mat pairs_to_mat(const json& data, Eigen::Index dim) {
  if (!data.is_array() || data.size() != static_cast<std::size_t>(dim * dim)) {
    throw DomainError("malformed matrix record");
  }
  Mat m(dim, dim);
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index k = 0; k < dim; ++k, ++n) {
      const json& p = data[n];
      if (!p.is_array() || p.size() != 2) throw DomainError("malformed matrix record");
      m(i, k) = Cplx(p[0].get<double>(), p[1].get<double>());
    }
  }
  return m;
}

StepEvent step_event_from_string(const std::string& s) {
  if (s == "none") return StepEvent::none;
  if (s == "improve") return StepEvent::improve;
  if (s == "shrink") return StepEvent::shrink;
  if (s == "kick") return StepEvent::kick;
  throw DomainError("unknown step event: " + s);
}

constexpr char kTraceHeader[] = "time_s,estimator,fidelity,fidelity_std,purity,window_id";

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

ScenarioConfig config_from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what(), {});
  }
  return config_from_json(root);
}

ScenarioConfig config_from_json_file(const std::filesystem::path& path) {
  return config_from_json_text(read_text_file(path));
}

std::string config_to_json_text(const ScenarioConfig& cfg) {
  return config_to_json(cfg).dump(2) + "\n";
}

void write_stream_file(const std::filesystem::path& path, const EventStream& stream) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot open for writing: " + path.string());

  json header;
  header["type"] = "header";
  header["seed"] = stream.seed;
  header["config"] =
      stream.config_json.empty() ? json::object() : json::parse(stream.config_json);
  out << header.dump() << '\n';

  struct Line {
    double t;
    int rank;  // count < truth < track at equal times
    std::size_t idx;
  };
  std::vector<Line> lines;
  lines.reserve(stream.ticks.size() + stream.records.size() + stream.truths.size());
  for (std::size_t i = 0; i < stream.records.size(); ++i) {
    lines.push_back({stream.records[i].start_s + stream.records[i].tau_s, 0, i});
  }
  for (std::size_t i = 0; i < stream.truths.size(); ++i) {
    lines.push_back({stream.truths[i].time_s, 1, i});
  }
  for (std::size_t i = 0; i < stream.ticks.size(); ++i) {
    lines.push_back({stream.ticks[i].time_s, 2, i});
  }
  std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.rank < b.rank;
  });

  for (const auto& line : lines) {
    json j;
    switch (line.rank) {
      case 0: {
        const auto& r = stream.records[line.idx];
        j["type"] = "count";
        j["projector"] = kProjectorLabels[static_cast<std::size_t>(r.projector)];
        j["counts"] = r.counts;
        j["start_s"] = r.start_s;
        j["tau_s"] = r.tau_s;
        break;
      }
      case 1: {
        const auto& t = stream.truths[line.idx];
        j["type"] = "truth";
        j["time_s"] = t.time_s;
        j["f_q"] = t.f_q;
        j["purity"] = t.purity;
        j["choi"] = mat_to_pairs(t.choi);
        break;
      }
      default: {
        const auto& t = stream.ticks[line.idx];
        j["type"] = "track";
        j["time_s"] = t.time_s;
        j["f_r"] = t.f_r;
        j["theta"] = t.angles.theta;
        j["psi"] = t.angles.psi;
        j["lam"] = t.angles.lam;
        j["v"] = {t.voltages[0], t.voltages[1], t.voltages[2], t.voltages[3]};
        j["step"] = t.step;
        j["event"] = to_string(t.event);
        break;
      }
    }
    out << j.dump() << '\n';
  }
  if (!out) throw DomainError("write failed: " + path.string());
}

EventStream read_stream_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open: " + path.string());
  EventStream stream;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "header") {
      stream.seed = j.at("seed").get<std::uint64_t>();
      stream.config_json = j.at("config").dump();
      have_header = true;
    } else if (type == "count") {
      MeasurementRecord r;
      r.projector = projector_index(j.at("projector").get<std::string>());
      r.counts = j.at("counts").get<std::int64_t>();
      r.start_s = j.at("start_s").get<double>();
      r.tau_s = j.at("tau_s").get<double>();
      stream.records.push_back(r);
    } else if (type == "truth") {
      TruthSnapshot t;
      t.time_s = j.at("time_s").get<double>();
      t.f_q = j.at("f_q").get<double>();
      t.purity = j.at("purity").get<double>();
      t.choi = pairs_to_mat(j.at("choi"), 4);
      stream.truths.push_back(std::move(t));
    } else if (type == "track") {
      TrackTick t;
      t.time_s = j.at("time_s").get<double>();
      t.f_r = j.at("f_r").get<double>();
      t.angles.theta = j.at("theta").get<double>();
      t.angles.psi = j.at("psi").get<double>();
      t.angles.lam = j.at("lam").get<double>();
      const auto& v = j.at("v");
      for (std::size_t i = 0; i < 4; ++i) t.voltages[i] = v.at(i).get<double>();
      t.step = j.at("step").get<double>();
      t.event = step_event_from_string(j.at("event").get<std::string>());
      stream.ticks.push_back(t);
    } else {
      throw DomainError("unknown stream record type: " + type);
    }
  }
  if (!have_header) throw DomainError("stream has no header line: " + path.string());
  return stream;
}

std::vector<TraceRow> ref_rows(const EventStream& stream) {
  std::vector<TraceRow> rows;
  rows.reserve(stream.ticks.size());
  for (const auto& t : stream.ticks) {
    TraceRow r;
    r.time_s = t.time_s;
    r.estimator = "REF";
    r.fidelity = t.f_r;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<TraceRow> truth_rows(const EventStream& stream) {
  std::vector<TraceRow> rows;
  rows.reserve(stream.truths.size());
  for (const auto& t : stream.truths) {
    TraceRow r;
    r.time_s = t.time_s;
    r.estimator = "TRUTH";
    r.fidelity = t.f_q;
    r.purity = t.purity;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<TraceRow> tomogram_rows(const std::string& estimator,
                                    const std::vector<TomogramResult>& results) {
  std::vector<TraceRow> rows;
  rows.reserve(results.size());
  for (const auto& t : results) {
    TraceRow r;
    r.time_s = t.end_s;
    r.estimator = estimator;
    r.fidelity = t.fq_mean;
    r.fidelity_std = t.fq_std;
    r.purity = t.purity_mean;
    r.window_id = t.window_id;
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_trace_csv(const std::filesystem::path& path,
                     const std::vector<TraceRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot open for writing: " + path.string());
  out << kTraceHeader << '\n';
  for (const auto& r : rows) {
    out << format_double(r.time_s) << ',' << r.estimator << ','
        << format_double(r.fidelity) << ',';
    if (r.fidelity_std) out << format_double(*r.fidelity_std);
    out << ',';
    if (r.purity) out << format_double(*r.purity);
    out << ',';
    if (r.window_id) out << *r.window_id;
    out << '\n';
  }
  if (!out) throw DomainError("write failed: " + path.string());
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw DomainError("unexpected trace header in " + path.string());
  }
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<std::string, 6> cell;
    std::size_t field = 0, pos = 0;
    while (field < 5) {
      const std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) throw DomainError("short trace row");
      cell[field++] = line.substr(pos, comma - pos);
      pos = comma + 1;
    }
    cell[5] = line.substr(pos);
    TraceRow r;
    r.time_s = std::stod(cell[0]);
    r.estimator = cell[1];
    r.fidelity = std::stod(cell[2]);
    if (!cell[3].empty()) r.fidelity_std = std::stod(cell[3]);
    if (!cell[4].empty()) r.purity = std::stod(cell[4]);
    if (!cell[5].empty()) r.window_id = std::stoi(cell[5]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_choi_file(const std::filesystem::path& path, double time_s,
                     const std::vector<ChoiDumpEntry>& entries) {
  json j;
  j["time_s"] = time_s;
  json arr = json::array();
  for (const auto& e : entries) {
    json item;
    item["estimator"] = e.estimator;
    item["window_id"] = e.window_id;
    item["window_end_s"] = e.window_end_s;
    item["dim"] = 4;
    item["raw"] = mat_to_pairs(e.raw);
    item["gauge_fixed"] = mat_to_pairs(e.gauge_fixed);
    item["gauge"] = {{"theta", e.gauge_params.theta},
                     {"psi", e.gauge_params.psi},
                     {"lam", e.gauge_params.lam}};
    arr.push_back(std::move(item));
  }
  j["entries"] = std::move(arr);
  write_text_file(path, j.dump(2) + "\n");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw DomainError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace qlink
