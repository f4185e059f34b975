#include "qlink/aapt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "qlink/errors.hpp"

namespace qlink {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kProbFloor = 1e-12;
constexpr double kFluxFloor = 1e-6;
constexpr double kSingularEig = 1e-12;

std::array<Eigen::Matrix2cd, 4> unpack_generators(const ParamVector& x) {
  std::array<Eigen::Matrix2cd, 4> g;
  for (int k = 0; k < 4; ++k) {
    const double* re = x.data() + 8 * k;
    const double* im = re + 4;
    g[k] << Cplx(re[0], im[0]), Cplx(re[1], im[1]), Cplx(re[2], im[2]),
        Cplx(re[3], im[3]);
  }
  return g;
}

// S^{-1/2} for a 2x2 positive matrix, via sqrt(S) = (S + s I)/t with
// s = sqrt(det S), t = sqrt(tr S + 2 s).  Returns false when S is singular
// at the same threshold herm_inv_sqrt uses for its smallest eigenvalue.
bool inv_sqrt_2x2(const Eigen::Matrix2cd& s_mat, Eigen::Matrix2cd& out) {
  const double a = s_mat(0, 0).real();
  const double c = s_mat(1, 1).real();
  const Cplx b = s_mat(0, 1);
  const double det = a * c - std::norm(b);
  const double tr = a + c;
  if (!(det > 0.0) || !(tr > 0.0)) return false;
  const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
  if (0.5 * (tr - disc) <= kSingularEig) return false;
  const double s = std::sqrt(det);
  const double t = std::sqrt(tr + 2.0 * s);
  const double inv_st = 1.0 / (s * t);
  out << (c + s) * inv_st, -b * inv_st, -std::conj(b) * inv_st, (a + s) * inv_st;
  return true;
}

// Precomputed window data for the hot likelihood path.  For each record the
// projector ket beta and the source-eigenvector images c_j = U_j^T conj(alpha)
// are fixed; p = sum_k sum_j mu_j |beta^dag A_k c_j|^2 then only needs 2x2
// products.
struct RecordTerm {
  double counts;
  Eigen::Vector2cd beta;                // Bob-side projector ket
  std::vector<Eigen::Vector2cd> c;      // one per retained source eigenvector
};

struct LikelihoodModel {
  std::vector<RecordTerm> recs;
  std::vector<double> mu;
  double k0 = 0.0;
  bool literal = false;

  void build(std::span<const MeasurementRecord> records, const DensityMatrix& rho_in,
             double k0_in, bool literal_in);
  double eval(const ParamVector& x) const;
};

void LikelihoodModel::build(std::span<const MeasurementRecord> records,
                            const DensityMatrix& rho_in, double k0_in,
                            bool literal_in) {
  if (rho_in.dim() != 4) throw DomainError("pair input state must be two-qubit");
  k0 = k0_in;
  literal = literal_in;

  Eigen::SelfAdjointEigenSolver<Mat> es(rho_in.mat());
  // Each eigenvector is a 4-vector; with the channel on the second qubit,
  // <P|(1 x E)(|v><v|)|P> reshapes v to V(m, i) = v(2 m + i) and the amplitude
  // becomes beta^dag A_k (V^T alpha*) for a projector alpha x beta.
  struct Eig {
    double mu;
    Eigen::Matrix2cd v;
  };
  std::vector<Eig> eigs;
  for (int j = 0; j < 4; ++j) {
    const double mu_j = std::max(0.0, es.eigenvalues()(j));
    if (mu_j < 1e-14) continue;
    Eigen::Matrix2cd v;
    v << es.eigenvectors()(0, j), es.eigenvectors()(1, j),
        es.eigenvectors()(2, j), es.eigenvectors()(3, j);
    eigs.push_back({mu_j, v});
  }
  mu.clear();
  for (const auto& e : eigs) mu.push_back(e.mu);

  recs.clear();
  recs.reserve(records.size());
  for (const auto& r : records) {
    const auto [ba, bb] = kProjectorTable[static_cast<std::size_t>(r.projector)];
    const Vec alpha4 = basis_ket(ba);
    const Vec beta4 = basis_ket(bb);
    Eigen::Vector2cd alpha(alpha4(0), alpha4(1));
    RecordTerm term;
    term.counts = static_cast<double>(r.counts);
    term.beta = Eigen::Vector2cd(beta4(0), beta4(1));
    for (const auto& e : eigs) term.c.push_back(e.v.transpose() * alpha.conjugate());
    recs.push_back(std::move(term));
  }
}

double LikelihoodModel::eval(const ParamVector& x) const {
  const auto g = unpack_generators(x);
  Eigen::Matrix2cd s_mat = Eigen::Matrix2cd::Zero();
  for (const auto& gk : g) s_mat.noalias() += gk.adjoint() * gk;
  Eigen::Matrix2cd r;
  if (!inv_sqrt_2x2(s_mat, r)) return kNegInf;
  std::array<Eigen::Matrix2cd, 4> a;
  for (int k = 0; k < 4; ++k) a[k].noalias() = g[k] * r;

  double flux = k0 * (1.0 + 0.1 * x[32]);
  flux = std::max(flux, k0 * kFluxFloor);

  double logl = 0.0;
  for (const auto& rec : recs) {
    double p = 0.0;
    for (int k = 0; k < 4; ++k) {
      const Eigen::Vector2cd row = a[k].adjoint() * rec.beta;  // (beta^dag A_k)^dag
      for (std::size_t j = 0; j < rec.c.size(); ++j) {
        p += mu[j] * std::norm(row.dot(rec.c[j]));
      }
    }
    p = std::max(p, kProbFloor);
    if (literal) {
      logl += rec.counts * std::log(p) - flux * p;
    } else {
      const double lambda = flux * p;
      logl += rec.counts * std::log(lambda) - lambda;
    }
  }
  return logl;
}

double population_std(const std::vector<double>& v, double mean) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

bool full_projector_coverage(std::span<const MeasurementRecord> records,
                             std::string* missing) {
  std::array<int, kProjectorCount> seen{};
  for (const auto& r : records) {
    if (r.projector < 0 || r.projector >= kProjectorCount) {
      if (missing) *missing = "out-of-range projector index";
      return false;
    }
    ++seen[static_cast<std::size_t>(r.projector)];
  }
  for (int i = 0; i < kProjectorCount; ++i) {
    if (seen[static_cast<std::size_t>(i)] != 1) {
      if (missing) *missing = kProjectorLabels[static_cast<std::size_t>(i)];
      return false;
    }
  }
  return true;
}

Window make_window(int id, std::span<const MeasurementRecord> records) {
  Window w;
  w.id = id;
  w.records.assign(records.begin(), records.end());
  w.start_s = records.front().start_s;
  double end = records.front().start_s + records.front().tau_s;
  for (const auto& r : records) end = std::max(end, r.start_s + r.tau_s);
  w.end_s = end;
  return w;
}

}  // namespace

KrausChannel kraus_from_params(const ParamVector& x) {
  const auto g = unpack_generators(x);
  Mat s_mat = Mat::Zero(2, 2);
  for (const auto& gk : g) s_mat += gk.adjoint() * gk;
  const Mat r = herm_inv_sqrt(s_mat, kSingularEig);  // throws SingularityError
  std::vector<Mat> ops;
  ops.reserve(4);
  for (const auto& gk : g) ops.push_back(gk * r);
  return KrausChannel(std::move(ops));
}

double flux_from_params(const ParamVector& x, double k0) {
  if (!(k0 > 0.0)) throw DomainError("flux anchor must be positive");
  return std::max(k0 * (1.0 + 0.1 * x[32]), k0 * kFluxFloor);
}

double k0_estimate(std::span<const MeasurementRecord> records) {
  if (records.empty()) throw DomainError("insufficient counts for a flux anchor");
  double total = 0.0;
  for (const auto& r : records) total += static_cast<double>(r.counts);
  const double k0 = 4.0 * total / static_cast<double>(records.size());
  if (!(k0 > 0.0)) throw DomainError("insufficient counts for a flux anchor");
  return k0;
}

double log_likelihood(std::span<const MeasurementRecord> records,
                      const DensityMatrix& rho_in, double k0, const ParamVector& x,
                      bool literal_count_form) {
  LikelihoodModel model;
  model.build(records, rho_in, k0, literal_count_form);
  return model.eval(x);
}

ChainResult pcn_sample(std::span<const MeasurementRecord> records,
                       const DensityMatrix& rho_in, double k0,
                       const McmcSettings& settings, Rng& rng) {
  if (settings.n_steps <= 0) throw DomainError("chain length must be positive");
  const std::int64_t burn = std::min(settings.effective_burn_in(), settings.n_steps);
  const std::int64_t post = settings.n_steps - burn;
  const std::int64_t want = std::max<std::int64_t>(1, settings.retained);
  const std::int64_t thin = std::max<std::int64_t>(1, post / want);

  LikelihoodModel model;
  model.build(records, rho_in, k0, settings.literal_count_form);

  ParamVector x;
  for (double& xi : x) xi = rng.normal();
  double logl = model.eval(x);

  double beta = settings.beta0;
  std::int64_t block_accepts = 0;
  std::int64_t post_accepts = 0;

  ChainResult out;
  ParamVector prop;
  for (std::int64_t step = 0; step < settings.n_steps; ++step) {
    const double keep = std::sqrt(std::max(0.0, 1.0 - beta * beta));
    for (int i = 0; i < kParamCount; ++i) {
      prop[i] = keep * x[i] + beta * rng.normal();
    }
    const double logl_prop = model.eval(prop);
    const double u = 1.0 - rng.uniform();  // (0, 1]
    bool accepted = false;
    if (logl_prop - logl > std::log(u)) {
      x = prop;
      logl = logl_prop;
      accepted = true;
    }

    if (step < burn) {
      if (accepted) ++block_accepts;
      if (settings.adapt_beta && (step + 1) % 1000 == 0) {
        const double rate = static_cast<double>(block_accepts) / 1000.0;
        if (rate > 0.4) {
          beta = std::min(1.0, 2.0 * beta);
        } else if (rate < 0.2) {
          beta = std::max(1e-4, 0.5 * beta);
        }
        block_accepts = 0;
      }
    } else {
      if (accepted) ++post_accepts;
      if ((step - burn) % thin == 0 && std::isfinite(logl)) {
        out.samples.push_back(PosteriorSample{x, kraus_from_params(x), logl});
      }
    }
  }

  out.acceptance_rate =
      post > 0 ? static_cast<double>(post_accepts) / static_cast<double>(post) : 0.0;
  out.beta_final = beta;
  out.zero_accepted = post > 0 && post_accepts == 0;
  return out;
}

ChoiMatrix bayes_mean_choi(std::span<const PosteriorSample> samples) {
  if (samples.empty()) throw DomainError("no posterior samples");
  Mat acc = Mat::Zero(4, 4);
  for (const auto& s : samples) acc += choi(s.channel).mat();
  acc /= static_cast<double>(samples.size());
  return ChoiMatrix(acc);
}

FidelityStats fidelity_posterior(std::span<const PosteriorSample> samples,
                                 const Mat& target) {
  if (samples.empty()) throw DomainError("no posterior samples");
  std::vector<double> f;
  f.reserve(samples.size());
  for (const auto& s : samples) f.push_back(process_fidelity_kraus(s.channel, target));
  double mean = 0.0;
  for (double x : f) mean += x;
  mean /= static_cast<double>(f.size());
  return FidelityStats{mean, population_std(f, mean)};
}

double gelman_rubin(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw DomainError("scale reduction needs at least two chains");
  const std::size_t n = chains.front().size();
  if (n < 10) throw DomainError("chains too short for a scale reduction");
  for (const auto& c : chains) {
    if (c.size() != n) throw DomainError("chains must have equal length");
  }

  std::vector<double> means(m);
  double grand = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (double x : chains[j]) acc += x;
    means[j] = acc / static_cast<double>(n);
    grand += means[j];
  }
  grand /= static_cast<double>(m);

  double w = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (double x : chains[j]) acc += (x - means[j]) * (x - means[j]);
    w += acc / static_cast<double>(n - 1);
  }
  w /= static_cast<double>(m);

  double b = 0.0;
  for (std::size_t j = 0; j < m; ++j) b += (means[j] - grand) * (means[j] - grand);
  b *= static_cast<double>(n) / static_cast<double>(m - 1);

  if (w < 1e-30) return 1.0;
  const double n_d = static_cast<double>(n);
  const double v_hat = (n_d - 1.0) / n_d * w + b / n_d;
  return std::sqrt(v_hat / w);
}

ScheduleResult segmented_schedule(std::span<const MeasurementRecord> records) {
  ScheduleResult out;
  const std::size_t blocks = records.size() / kProjectorCount;
  for (std::size_t bi = 0; bi < blocks; ++bi) {
    auto span = records.subspan(bi * kProjectorCount, kProjectorCount);
    std::string missing;
    if (!full_projector_coverage(span, &missing)) {
      std::ostringstream msg;
      msg << "segmented window " << bi << " skipped: bad coverage at " << missing;
      out.warnings.push_back(msg.str());
      continue;
    }
    out.windows.push_back(make_window(static_cast<int>(bi), span));
  }
  return out;
}

ScheduleResult sliding_schedule(std::span<const MeasurementRecord> records) {
  ScheduleResult out;
  if (records.size() < static_cast<std::size_t>(kProjectorCount)) return out;
  for (std::size_t end = kProjectorCount; end <= records.size(); ++end) {
    auto span = records.subspan(end - kProjectorCount, kProjectorCount);
    std::string missing;
    if (!full_projector_coverage(span, &missing)) {
      std::ostringstream msg;
      msg << "sliding window at record " << end - kProjectorCount
          << " skipped: bad coverage at " << missing;
      out.warnings.push_back(msg.str());
      continue;
    }
    out.windows.push_back(
        make_window(static_cast<int>(end - kProjectorCount), span));
  }
  return out;
}

std::uint64_t window_seed(std::uint64_t base_seed, const Window& w, int chain) {
  Fnv1a h;
  h.add_u64(base_seed);
  h.add_u64(static_cast<std::uint64_t>(chain));
  for (const auto& r : w.records) {
    h.add_u64(static_cast<std::uint64_t>(r.projector));
    h.add_u64(static_cast<std::uint64_t>(r.counts));
    h.add_double(r.start_s);
    h.add_double(r.tau_s);
  }
  return h.value();
}

TomogramResult run_tomography(const Window& w, const DensityMatrix& rho_in,
                              const McmcSettings& settings, std::uint64_t base_seed) {
  const int chains = std::max(1, settings.chains);
  McmcSettings per_chain = settings;
  per_chain.retained =
      std::max<std::int64_t>(1, settings.retained / chains);
  const double k0 = k0_estimate(w.records);

  std::vector<PosteriorSample> pool;
  std::vector<std::vector<double>> f_chains;
  double acc_sum = 0.0;
  bool zero_acc = false;
  for (int c = 0; c < chains; ++c) {
    Rng rng(window_seed(base_seed, w, c));
    ChainResult chain = pcn_sample(w.records, rho_in, k0, per_chain, rng);
    acc_sum += chain.acceptance_rate;
    zero_acc = zero_acc || chain.zero_accepted;
    std::vector<double> f;
    f.reserve(chain.samples.size());
    const Mat id = Mat::Identity(2, 2);
    for (const auto& s : chain.samples) {
      f.push_back(process_fidelity_kraus(s.channel, id));
    }
    f_chains.push_back(std::move(f));
    pool.insert(pool.end(), std::make_move_iterator(chain.samples.begin()),
                std::make_move_iterator(chain.samples.end()));
  }
  if (pool.empty()) throw SingularityError("posterior retained no samples");

  const Mat id = Mat::Identity(2, 2);
  const FidelityStats fq = fidelity_posterior(pool, id);
  double purity = 0.0;
  for (const auto& s : pool) purity += choi_purity(choi(s.channel));
  purity /= static_cast<double>(pool.size());

  double rhat = std::numeric_limits<double>::quiet_NaN();
  if (chains >= 2) {
    std::size_t min_len = f_chains.front().size();
    for (const auto& f : f_chains) min_len = std::min(min_len, f.size());
    if (min_len >= 10) {
      for (auto& f : f_chains) f.resize(min_len);
      rhat = gelman_rubin(f_chains);
    }
  }

  TomogramResult out;
  out.window_id = w.id;
  out.start_s = w.start_s;
  out.end_s = w.end_s;
  out.choi_mean = bayes_mean_choi(pool).mat();
  out.fq_mean = fq.mean;
  out.fq_std = fq.std_dev;
  out.purity_mean = purity;
  out.n_samples = static_cast<int>(pool.size());
  out.acceptance_rate = acc_sum / static_cast<double>(chains);
  out.rhat = rhat;
  out.zero_accepted = zero_acc;
  return out;
}

DensityMatrix assumed_input_state() {
  return DensityMatrix::pure(bell_psi_plus());
}

}  // namespace qlink
