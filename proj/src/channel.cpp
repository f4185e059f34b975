#include "qlink/channel.hpp"

#include <cmath>
#include <numbers>

namespace qlink {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double clamp_unit(double x, const char* what) {
  if (x < 0.0) {
    if (x < -tol::clamp) throw DomainError(std::string(what) + ": negative value");
    return 0.0;
  }
  if (x > 1.0) {
    if (x - 1.0 > tol::clamp) throw DomainError(std::string(what) + ": value above 1");
    return 1.0;
  }
  return x;
}

// column-stacked along the input index: w[d*m + i] = A(i, m)
Vec kraus_vec(const Mat& a) {
  const int d = static_cast<int>(a.rows());
  Vec w(d * d);
  for (int m = 0; m < d; ++m)
    for (int i = 0; i < d; ++i) w(d * m + i) = a(i, m);
  return w;
}

double gauge_objective(const Mat& phi_last, const UnitaryParams& p) {
  const Mat v = unitary_from_params(p);
  Vec u(4);
  const double s = 1.0 / std::numbers::sqrt2;
  for (int m = 0; m < 2; ++m)
    for (int i = 0; i < 2; ++i) u(2 * m + i) = std::conj(v(m, i)) * s;
  return (u.adjoint() * phi_last * u)(0, 0).real();
}

}  // namespace

KrausChannel::KrausChannel(std::vector<Mat> ops) : ops_(std::move(ops)) {
  if (ops_.empty()) throw DomainError("KrausChannel: no operators");
  const Eigen::Index d = ops_.front().rows();
  if (d == 0 || ops_.front().cols() != d)
    throw DomainError("KrausChannel: operators must be square");
  if (static_cast<Eigen::Index>(ops_.size()) > d * d)
    throw DomainError("KrausChannel: more than d^2 operators");
  Mat s = Mat::Zero(d, d);
  for (const Mat& a : ops_) {
    if (a.rows() != d || a.cols() != d)
      throw DomainError("KrausChannel: mixed operator dimensions");
    s += a.adjoint() * a;
  }
  s -= Mat::Identity(d, d);
  if (s.cwiseAbs().maxCoeff() > tol::structural)
    throw DomainError("KrausChannel: operators do not resolve the identity");
}

KrausChannel KrausChannel::identity(int dim) {
  std::vector<Mat> ops;
  ops.push_back(Mat::Identity(dim, dim));
  return KrausChannel(std::move(ops));
}

ChoiMatrix::ChoiMatrix(Mat m) : mat_(std::move(m)) {
  const Eigen::Index n = mat_.rows();
  dim_ = static_cast<int>(std::llround(std::sqrt(static_cast<double>(n))));
  if (mat_.cols() != n || static_cast<Eigen::Index>(dim_) * dim_ != n)
    throw DomainError("ChoiMatrix: needs a d^2 x d^2 matrix");
  if (!is_hermitian(mat_, tol::structural))
    throw DomainError("ChoiMatrix: not Hermitian");
  if (std::abs(mat_.trace().real() - 1.0) > tol::structural ||
      std::abs(mat_.trace().imag()) > tol::structural)
    throw DomainError("ChoiMatrix: trace is not 1");
  Eigen::SelfAdjointEigenSolver<Mat> es(mat_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol::clamp)
    throw DomainError("ChoiMatrix: negative eigenvalue");
  // partial trace over the output slot must give I/d
  Mat red = Mat::Zero(dim_, dim_);
  for (int m = 0; m < dim_; ++m)
    for (int n2 = 0; n2 < dim_; ++n2)
      for (int i = 0; i < dim_; ++i) red(m, n2) += mat_(dim_ * m + i, dim_ * n2 + i);
  red -= Mat::Identity(dim_, dim_) / dim_;
  if (red.cwiseAbs().maxCoeff() > tol::trace_preserve)
    throw DomainError("ChoiMatrix: reduced input state is not maximally mixed");
}

DensityMatrix apply(const KrausChannel& ch, const DensityMatrix& rho) {
  if (ch.dim() != rho.dim()) throw DomainError("apply: dimension mismatch");
  Mat out = Mat::Zero(rho.dim(), rho.dim());
  for (const Mat& a : ch.ops()) out += a * rho.mat() * a.adjoint();
  return DensityMatrix(std::move(out));
}

DensityMatrix extend_apply(const KrausChannel& ch, const DensityMatrix& rho_ab) {
  if (rho_ab.dim() != ch.dim() * ch.dim())
    throw DomainError("extend_apply: state dimension must be d^2");
  const Mat eye = Mat::Identity(ch.dim(), ch.dim());
  Mat out = Mat::Zero(rho_ab.dim(), rho_ab.dim());
  for (const Mat& a : ch.ops()) {
    Mat ext = tensor(eye, a);
    out += ext * rho_ab.mat() * ext.adjoint();
  }
  return DensityMatrix(std::move(out));
}

double measurement_probability(const KrausChannel& ch, const DensityMatrix& rho_ab,
                               const PureState& phi) {
  if (phi.dim() != rho_ab.dim())
    throw DomainError("measurement_probability: projector dimension mismatch");
  const DensityMatrix out = extend_apply(ch, rho_ab);
  return clamp_unit(state_fidelity(phi, out), "measurement_probability");
}

ChoiMatrix choi(const KrausChannel& ch) {
  const int d = ch.dim();
  Mat m = Mat::Zero(d * d, d * d);
  for (const Mat& a : ch.ops()) {
    const Vec w = kraus_vec(a);
    m += w * w.adjoint();
  }
  return ChoiMatrix(m / d);
}

KrausChannel kraus_from_choi(const ChoiMatrix& c, double cutoff) {
  const int d = c.dim();
  Eigen::SelfAdjointEigenSolver<Mat> es(c.mat());
  std::vector<Mat> ops;
  for (int r = 0; r < d * d; ++r) {
    const double mu = es.eigenvalues()(r);
    if (mu <= cutoff) continue;
    const double scale = std::sqrt(mu * d);
    Mat a(d, d);
    for (int m = 0; m < d; ++m)
      for (int i = 0; i < d; ++i) a(i, m) = scale * es.eigenvectors()(d * m + i, r);
    ops.push_back(std::move(a));
  }
  return KrausChannel(std::move(ops));
}

double process_fidelity_unitary(const Mat& u, const Mat& target) {
  if (u.rows() != u.cols() || u.rows() != target.rows() || target.rows() != target.cols())
    throw DomainError("process_fidelity_unitary: dimension mismatch");
  if (!is_unitary(u, 1e-8) || !is_unitary(target, 1e-8))
    throw DomainError("process_fidelity_unitary: inputs must be unitary");
  const double d = static_cast<double>(u.rows());
  return std::norm((target.adjoint() * u).trace()) / (d * d);
}

double process_fidelity_kraus(const KrausChannel& ch, const Mat& target) {
  if (target.rows() != ch.dim() || target.cols() != ch.dim())
    throw DomainError("process_fidelity_kraus: dimension mismatch");
  if (!is_unitary(target, 1e-8))
    throw DomainError("process_fidelity_kraus: target must be unitary");
  const double d = static_cast<double>(ch.dim());
  double f = 0.0;
  for (const Mat& a : ch.ops()) f += std::norm((target.adjoint() * a).trace());
  return clamp_unit(f / (d * d), "process_fidelity_kraus");
}

double choi_fidelity_to_unitary(const ChoiMatrix& c, const Mat& target) {
  const int d = c.dim();
  if (target.rows() != d || target.cols() != d)
    throw DomainError("choi_fidelity_to_unitary: dimension mismatch");
  if (!is_unitary(target, 1e-8))
    throw DomainError("choi_fidelity_to_unitary: target must be unitary");
  const Vec w = kraus_vec(target) / std::sqrt(static_cast<double>(d));
  return clamp_unit((w.adjoint() * c.mat() * w)(0, 0).real(), "choi_fidelity_to_unitary");
}

double choi_purity(const ChoiMatrix& c) {
  return c.mat().squaredNorm();  // Tr(M^2) = ||M||_F^2 for Hermitian M
}

KrausChannel compose(const KrausChannel& outer, const KrausChannel& inner) {
  if (outer.dim() != inner.dim()) throw DomainError("compose: dimension mismatch");
  const int d = outer.dim();
  std::vector<Mat> prods;
  prods.reserve(outer.rank() * inner.rank());
  for (const Mat& b : outer.ops())
    for (const Mat& a : inner.ops()) prods.push_back(b * a);
  if (static_cast<int>(prods.size()) <= d * d) return KrausChannel(std::move(prods));
  // too many operators: rebuild a minimal set through the process matrix
  Mat m = Mat::Zero(d * d, d * d);
  for (const Mat& a : prods) {
    const Vec w = kraus_vec(a);
    m += w * w.adjoint();
  }
  return kraus_from_choi(ChoiMatrix(m / d));
}

KrausChannel depolarizing(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("depolarizing: p outside [0, 1]");
  std::vector<Mat> ops;
  ops.push_back(std::sqrt(1.0 - 0.75 * p) * Mat::Identity(2, 2));
  if (p > 0.0) {
    const double s = 0.5 * std::sqrt(p);
    ops.push_back(s * pauli_x());
    ops.push_back(s * pauli_y());
    ops.push_back(s * pauli_z());
  }
  return KrausChannel(std::move(ops));
}

GaugeResult gauge_fix(const std::vector<ChoiMatrix>& series) {
  if (series.empty()) throw DomainError("gauge_fix: empty series");
  const Mat& last = series.back().mat();
  if (series.back().dim() != 2)
    throw DomainError("gauge_fix: only single-qubit processes supported");

  // coarse 16^3 grid; theta includes both range ends so exact solutions at the
  // boundary are hit exactly
  UnitaryParams best;
  double best_val = -1.0;
  for (int it = 0; it < 16; ++it) {
    const double theta = std::numbers::pi * it / 15.0;
    for (int ip = 0; ip < 16; ++ip) {
      const double psi = kTwoPi * ip / 16.0;
      for (int il = 0; il < 16; ++il) {
        const double lam = kTwoPi * il / 16.0;
        const UnitaryParams p{theta, psi, lam};
        const double val = gauge_objective(last, p);
        if (val > best_val) {
          best_val = val;
          best = p;
        }
      }
    }
  }

  // coordinate descent with step halving
  double step = kTwoPi / 16.0;
  while (step >= 1e-7) {
    bool improved = false;
    for (int coord = 0; coord < 3; ++coord) {
      for (double dir : {+1.0, -1.0}) {
        UnitaryParams cand = best;
        double* x = coord == 0 ? &cand.theta : coord == 1 ? &cand.psi : &cand.lam;
        *x += dir * step;
        if (coord == 0) {
          if (*x < 0.0) *x = 0.0;
          if (*x > std::numbers::pi) *x = std::numbers::pi;
        } else {
          *x = std::fmod(*x + kTwoPi, kTwoPi);
        }
        const double val = gauge_objective(last, cand);
        if (val > best_val) {
          best_val = val;
          best = cand;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }

  GaugeResult out;
  out.v_params = best;
  out.v = unitary_from_params(best);
  out.objective = best_val;
  const Mat ext = tensor(Mat::Identity(2, 2), out.v);
  out.corrected.reserve(series.size());
  for (const ChoiMatrix& c : series)
    out.corrected.emplace_back(ext * c.mat() * ext.adjoint());
  return out;
}

}  // namespace qlink
