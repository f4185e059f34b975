#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>

#include "qlink/errors.hpp"

namespace qlink {

using Cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

namespace tol {
// Structural checks: hermiticity, unitarity, positivity, trace conditions.
inline constexpr double structural = 1e-10;
// Parameter/angle round trips.
inline constexpr double roundtrip = 1e-9;
// Largest negative probability/eigenvalue silently clamped to zero; anything
// worse is an error.
inline constexpr double clamp = 1e-12;
// Partial-trace condition on process matrices (slacker: estimator output).
inline constexpr double trace_preserve = 1e-8;
}  // namespace tol

// ---------------------------------------------------------------------------
// predicates

bool is_hermitian(const Mat& m, double eps = tol::structural);
bool is_unitary(const Mat& m, double eps = tol::structural);
bool is_positive_semidefinite(const Mat& m, double eps = tol::structural);

// ---------------------------------------------------------------------------
// fixed matrices and kets

Mat pauli_x();
Mat pauli_y();
Mat pauli_z();

enum class Basis { H = 0, V, D, A, R, L };

// |H> = (1,0), |V> = (0,1), |D/A> = (1,+-1)/sqrt2, |R/L> = (1,+-i)/sqrt2
Vec basis_ket(Basis b);

// ---------------------------------------------------------------------------
// parameterized single-qubit unitaries
//
//   U = [ cos(t/2)              -e^{i lam} sin(t/2)        ]
//       [ e^{i psi} sin(t/2)     e^{i (psi+lam)} cos(t/2)  ]

struct UnitaryParams {
  double theta = 0.0;  // [0, pi]
  double psi = 0.0;    // [0, 2pi)
  double lam = 0.0;    // [0, 2pi)
};

Mat unitary_from_params(const UnitaryParams& p);

// Inverse map for an arbitrary 2x2 unitary: parameters plus the global phase
// that was stripped. At theta = 0 or pi only one phase combination is
// observable; the convention is psi = 0 with the combination folded into lam.
std::pair<UnitaryParams, double> params_from_unitary(const Mat& u);

// ---------------------------------------------------------------------------
// states

class PureState {
 public:
  explicit PureState(Vec amplitudes);
  static PureState ket(Basis b) { return PureState(basis_ket(b)); }

  const Vec& amps() const noexcept { return amps_; }
  int dim() const noexcept { return static_cast<int>(amps_.size()); }

 private:
  Vec amps_;
};

class DensityMatrix {
 public:
  explicit DensityMatrix(Mat m);
  static DensityMatrix pure(const PureState& s);

  const Mat& mat() const noexcept { return mat_; }
  int dim() const noexcept { return static_cast<int>(mat_.rows()); }

 private:
  Mat mat_;
};

// Bell states in the (ancilla, transmitted) tensor ordering.
PureState bell_phi_plus();  // (|HH> + |VV>)/sqrt2
PureState bell_psi_plus();  // (|HV> + |VH>)/sqrt2

// ---------------------------------------------------------------------------
// operations

// Kronecker product; a's indices are most significant.
Mat tensor(const Mat& a, const Mat& b);
PureState tensor(const PureState& a, const PureState& b);

// M^{-1/2} for Hermitian positive definite M. Eigenvalues at or below
// `min_eig` raise SingularityError.
Mat herm_inv_sqrt(const Mat& m, double min_eig = 1e-12);

// |<psi|phi>|^2 for pure states, <psi|rho|psi> against a density matrix.
double state_fidelity(const PureState& a, const PureState& b);
double state_fidelity(const PureState& a, const DensityMatrix& rho);

}  // namespace qlink
