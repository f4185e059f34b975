#pragma once

#include <vector>

#include "qlink/algebra.hpp"

namespace qlink {

// Completely positive trace-preserving map in Kraus form; construction
// enforces sum A_k^dag A_k = I.
class KrausChannel {
 public:
  explicit KrausChannel(std::vector<Mat> ops);
  static KrausChannel identity(int dim = 2);

  const std::vector<Mat>& ops() const noexcept { return ops_; }
  int dim() const noexcept { return static_cast<int>(ops_.front().rows()); }
  int rank() const noexcept { return static_cast<int>(ops_.size()); }

 private:
  std::vector<Mat> ops_;
};

// Normalized process matrix (unit trace, Hermitian, PSD, reduced input state
// maximally mixed). Basis ordering (mi),(nj) with the input copy index most
// significant.
class ChoiMatrix {
 public:
  explicit ChoiMatrix(Mat m);

  const Mat& mat() const noexcept { return mat_; }
  // qubit dimension d; the stored matrix is d^2 x d^2
  int dim() const noexcept { return dim_; }

 private:
  Mat mat_;
  int dim_;
};

DensityMatrix apply(const KrausChannel& ch, const DensityMatrix& rho);

// (1 tensor E) acting on a two-qubit state; the channel hits the second slot.
DensityMatrix extend_apply(const KrausChannel& ch, const DensityMatrix& rho_ab);

// <phi|(1 tensor E)(rho_ab)|phi>, clamped into [0, 1] near the ends.
double measurement_probability(const KrausChannel& ch, const DensityMatrix& rho_ab,
                               const PureState& phi);

ChoiMatrix choi(const KrausChannel& ch);

// Minimal Kraus set from a process matrix; eigenvalues below `cutoff` are
// dropped.
KrausChannel kraus_from_choi(const ChoiMatrix& c, double cutoff = 1e-12);

// |Tr(T^dag U)|^2 / d^2 for a unitary channel U against unitary target T.
double process_fidelity_unitary(const Mat& u, const Mat& target);

// sum_k |Tr(T^dag A_k)|^2 / d^2.
double process_fidelity_kraus(const KrausChannel& ch, const Mat& target);

// <phi_T| Phi |phi_T> with |phi_T> = (1 tensor T)|phi+>; equals the Kraus
// form above when Phi is the channel's process matrix.
double choi_fidelity_to_unitary(const ChoiMatrix& c, const Mat& target);

double choi_purity(const ChoiMatrix& c);

// outer after inner; Kraus products, reduced back to at most d^2 operators.
KrausChannel compose(const KrausChannel& outer, const KrausChannel& inner);

// Kraus set {sqrt(1-3p/4) I, sqrt(p)/2 X, sqrt(p)/2 Y, sqrt(p)/2 Z}.
KrausChannel depolarizing(double p);

struct GaugeResult {
  std::vector<ChoiMatrix> corrected;
  Mat v;                   // single-qubit correction applied as (1 tensor V)
  UnitaryParams v_params;
  double objective;        // fidelity of the corrected last element to |phi+>
};

// Picks the V maximizing the last element's fidelity to the identity process
// and applies the same V across the whole series.
GaugeResult gauge_fix(const std::vector<ChoiMatrix>& series);

}  // namespace qlink
