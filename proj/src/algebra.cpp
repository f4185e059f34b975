#include "qlink/algebra.hpp"

#include <cmath>
#include <numbers>

namespace qlink {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;  // fmod can land exactly on 2pi
  return a;
}

}  // namespace

bool is_hermitian(const Mat& m, double eps) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= eps;
}

bool is_unitary(const Mat& m, double eps) {
  if (m.rows() != m.cols()) return false;
  Mat d = m.adjoint() * m;
  d -= Mat::Identity(m.rows(), m.cols());
  return d.cwiseAbs().maxCoeff() <= eps;
}

bool is_positive_semidefinite(const Mat& m, double eps) {
  if (!is_hermitian(m, eps)) return false;
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -eps;
}

Mat pauli_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Mat pauli_y() {
  Mat m(2, 2);
  m << Cplx(0, 0), Cplx(0, -1), Cplx(0, 1), Cplx(0, 0);
  return m;
}

Mat pauli_z() {
  Mat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Vec basis_ket(Basis b) {
  const double s = 1.0 / std::numbers::sqrt2;
  Vec v(2);
  switch (b) {
    case Basis::H: v << 1, 0; break;
    case Basis::V: v << 0, 1; break;
    case Basis::D: v << s, s; break;
    case Basis::A: v << s, -s; break;
    case Basis::R: v << Cplx(s, 0), Cplx(0, s); break;
    case Basis::L: v << Cplx(s, 0), Cplx(0, -s); break;
    default: throw DomainError("basis_ket: unknown basis label");
  }
  return v;
}

Mat unitary_from_params(const UnitaryParams& p) {
  if (!(p.theta >= 0.0 && p.theta <= std::numbers::pi))
    throw DomainError("unitary_from_params: theta outside [0, pi]");
  if (!(p.psi >= 0.0 && p.psi < kTwoPi))
    throw DomainError("unitary_from_params: psi outside [0, 2pi)");
  if (!(p.lam >= 0.0 && p.lam < kTwoPi))
    throw DomainError("unitary_from_params: lam outside [0, 2pi)");

  const double c = std::cos(0.5 * p.theta);
  const double s = std::sin(0.5 * p.theta);
  const Cplx epsi = std::polar(1.0, p.psi);
  const Cplx elam = std::polar(1.0, p.lam);
  Mat u(2, 2);
  u << Cplx(c, 0), -elam * s, epsi * s, epsi * elam * c;
  return u;
}

std::pair<UnitaryParams, double> params_from_unitary(const Mat& u) {
  if (u.rows() != 2 || u.cols() != 2)
    throw DomainError("params_from_unitary: need a 2x2 matrix");
  if (!is_unitary(u, 1e-8))
    throw DomainError("params_from_unitary: matrix is not unitary");

  const double ch = std::abs(u(0, 0));
  const double sh = std::abs(u(1, 0));
  // atan2 keeps theta well conditioned at both range ends
  const double theta = 2.0 * std::atan2(sh, ch);

  constexpr double kDegenerate = 1e-12;
  UnitaryParams p;
  double phase = 0.0;
  p.theta = theta;
  if (sh <= kDegenerate) {
    // diagonal: only psi + lam observable; fold into lam
    phase = std::arg(u(0, 0));
    p.theta = 0.0;
    p.psi = 0.0;
    p.lam = wrap_2pi(std::arg(u(1, 1)) - phase);
  } else if (ch <= kDegenerate) {
    // anti-diagonal: only psi - lam observable; convention psi = 0
    p.theta = std::numbers::pi;
    p.psi = 0.0;
    phase = std::arg(u(1, 0));
    p.lam = wrap_2pi(std::arg(-u(0, 1)) - phase);
  } else {
    phase = std::arg(u(0, 0));
    p.psi = wrap_2pi(std::arg(u(1, 0)) - phase);
    p.lam = wrap_2pi(std::arg(-u(0, 1)) - phase);
  }
  return {p, phase};
}

PureState::PureState(Vec amplitudes) : amps_(std::move(amplitudes)) {
  if (amps_.size() == 0) throw DomainError("PureState: empty amplitude vector");
  if (std::abs(amps_.norm() - 1.0) > tol::structural)
    throw DomainError("PureState: amplitudes are not unit norm");
}

DensityMatrix::DensityMatrix(Mat m) : mat_(std::move(m)) {
  if (mat_.rows() != mat_.cols() || mat_.rows() == 0)
    throw DomainError("DensityMatrix: need a square matrix");
  if (!is_hermitian(mat_, tol::structural))
    throw DomainError("DensityMatrix: not Hermitian");
  if (std::abs(mat_.trace().real() - 1.0) > tol::structural ||
      std::abs(mat_.trace().imag()) > tol::structural)
    throw DomainError("DensityMatrix: trace is not 1");
  Eigen::SelfAdjointEigenSolver<Mat> es(mat_, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  if (lo < -tol::clamp) throw DomainError("DensityMatrix: negative eigenvalue");
}

DensityMatrix DensityMatrix::pure(const PureState& s) {
  return DensityMatrix(s.amps() * s.amps().adjoint());
}

PureState bell_phi_plus() {
  const double s = 1.0 / std::numbers::sqrt2;
  Vec v = Vec::Zero(4);
  v(0) = s;  // HH
  v(3) = s;  // VV
  return PureState(v);
}

PureState bell_psi_plus() {
  const double s = 1.0 / std::numbers::sqrt2;
  Vec v = Vec::Zero(4);
  v(1) = s;  // HV
  v(2) = s;  // VH
  return PureState(v);
}

Mat tensor(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

PureState tensor(const PureState& a, const PureState& b) {
  Vec out(a.dim() * b.dim());
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < b.dim(); ++j) out(i * b.dim() + j) = a.amps()(i) * b.amps()(j);
  return PureState(std::move(out));
}

Mat herm_inv_sqrt(const Mat& m, double min_eig) {
  if (m.rows() != m.cols()) throw DomainError("herm_inv_sqrt: need a square matrix");
  if (!is_hermitian(m, tol::structural))
    throw DomainError("herm_inv_sqrt: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  const auto& ev = es.eigenvalues();
  if (ev.minCoeff() <= min_eig)
    throw SingularityError("herm_inv_sqrt: matrix is numerically singular");
  Eigen::VectorXd inv_sqrt = ev.array().sqrt().inverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();
}

double state_fidelity(const PureState& a, const PureState& b) {
  if (a.dim() != b.dim()) throw DomainError("state_fidelity: dimension mismatch");
  return std::norm(a.amps().dot(b.amps()));
}

double state_fidelity(const PureState& a, const DensityMatrix& rho) {
  if (a.dim() != rho.dim()) throw DomainError("state_fidelity: dimension mismatch");
  const Cplx v = (a.amps().adjoint() * rho.mat() * a.amps())(0, 0);
  return v.real();
}

}  // namespace qlink
