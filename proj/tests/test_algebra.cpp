#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>

#include "qlink/algebra.hpp"
#include "qlink/rng.hpp"

using namespace qlink;

namespace {

constexpr double kPi = std::numbers::pi;
const Cplx kI{0.0, 1.0};

double max_abs_diff(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// wraps into [0, 2pi)
double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  return a < 0.0 ? a + 2.0 * kPi : a;
}

}  // namespace

TEST_CASE("basis kets") {
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(basis_ket(Basis::H)(0) == Cplx(1.0, 0.0));
  CHECK(basis_ket(Basis::H)(1) == Cplx(0.0, 0.0));
  CHECK(basis_ket(Basis::V)(1) == Cplx(1.0, 0.0));
  CHECK(std::abs(basis_ket(Basis::D)(0) - s) < 1e-15);
  CHECK(std::abs(basis_ket(Basis::A)(1) + s) < 1e-15);
  CHECK(std::abs(basis_ket(Basis::R)(1) - kI * s) < 1e-15);
  CHECK(std::abs(basis_ket(Basis::L)(1) + kI * s) < 1e-15);

  // D = (H + V)/sqrt2 and the usual orthogonal pairs
  Vec d = (basis_ket(Basis::H) + basis_ket(Basis::V)) / std::sqrt(2.0);
  CHECK((d - basis_ket(Basis::D)).norm() < 1e-15);
  CHECK(std::abs(basis_ket(Basis::H).dot(basis_ket(Basis::V))) < 1e-15);
  CHECK(std::abs(basis_ket(Basis::D).dot(basis_ket(Basis::A))) < 1e-15);
  CHECK(std::abs(basis_ket(Basis::R).dot(basis_ket(Basis::L))) < 1e-15);
}

TEST_CASE("pauli matrices") {
  const Mat id = Mat::Identity(2, 2);
  CHECK(max_abs_diff(pauli_x() * pauli_x(), id) < 1e-15);
  CHECK(max_abs_diff(pauli_y() * pauli_y(), id) < 1e-15);
  CHECK(max_abs_diff(pauli_z() * pauli_z(), id) < 1e-15);
  CHECK(max_abs_diff(pauli_x() * pauli_y(), kI * pauli_z()) < 1e-15);
  CHECK(pauli_y()(0, 1) == Cplx(0.0, -1.0));
  CHECK(pauli_z()(1, 1) == Cplx(-1.0, 0.0));
}

TEST_CASE("unitary_from_params matches the closed form") {
  const UnitaryParams p{1.1, 2.3, 0.7};
  const Mat u = unitary_from_params(p);
  const double c = std::cos(p.theta / 2.0), s = std::sin(p.theta / 2.0);
  CHECK(std::abs(u(0, 0) - c) < 1e-15);
  CHECK(std::abs(u(0, 1) + std::exp(kI * p.lam) * s) < 1e-15);
  CHECK(std::abs(u(1, 0) - std::exp(kI * p.psi) * s) < 1e-15);
  CHECK(std::abs(u(1, 1) - std::exp(kI * (p.psi + p.lam)) * c) < 1e-15);
  CHECK(is_unitary(u));
}

TEST_CASE("unitary_from_params rejects out-of-range angles") {
  CHECK_THROWS_AS(unitary_from_params({-0.1, 0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(unitary_from_params({3.2, 0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(unitary_from_params({1.0, 6.3, 0.0}), DomainError);
  CHECK_THROWS_AS(unitary_from_params({1.0, -0.1, 0.0}), DomainError);
  CHECK_THROWS_AS(unitary_from_params({1.0, 0.0, 6.3}), DomainError);
  // boundaries that are inside the range
  CHECK_NOTHROW(unitary_from_params({kPi, 0.0, 0.0}));
  CHECK_NOTHROW(unitary_from_params({0.0, 0.0, 0.0}));
}

TEST_CASE("params_from_unitary round trip with global phase") {
  Rng rng(11);
  double worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    UnitaryParams p;
    p.theta = 0.02 + (kPi - 0.04) * rng.uniform();
    p.psi = 2.0 * kPi * rng.uniform();
    p.lam = 2.0 * kPi * rng.uniform();
    const double phase = 2.0 * kPi * rng.uniform();
    const Mat u = std::exp(kI * phase) * unitary_from_params(p);
    const auto [q, ph] = params_from_unitary(u);
    const Mat back = std::exp(kI * ph) * unitary_from_params(q);
    worst = std::max(worst, max_abs_diff(back, u));
    CHECK(std::abs(q.theta - p.theta) < 1e-9);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("params_from_unitary degenerate branches") {
  SUBCASE("theta = 0 keeps the relative phase in lam") {
    Mat u = Mat::Zero(2, 2);
    u(0, 0) = std::exp(kI * 0.7);
    u(1, 1) = std::exp(kI * (0.7 + 1.3));
    const auto [p, ph] = params_from_unitary(u);
    CHECK(p.theta == doctest::Approx(0.0));
    CHECK(p.psi == doctest::Approx(0.0));
    CHECK(wrap_angle(p.lam) == doctest::Approx(1.3));
    CHECK(wrap_angle(ph) == doctest::Approx(0.7));
  }
  SUBCASE("theta = pi on the x flip") {
    const auto [p, ph] = params_from_unitary(pauli_x());
    CHECK(p.theta == doctest::Approx(kPi));
    CHECK(p.psi == doctest::Approx(0.0));
    CHECK(wrap_angle(p.lam) == doctest::Approx(kPi));
    const Mat back = std::exp(kI * ph) * unitary_from_params(p);
    CHECK(max_abs_diff(back, pauli_x()) < 1e-12);
  }
}

TEST_CASE("params_from_unitary validates its input") {
  Mat bad(2, 2);
  bad << 1.0, 0.0, 0.0, 0.5;
  CHECK_THROWS_AS(params_from_unitary(bad), DomainError);
  CHECK_THROWS_AS(params_from_unitary(Mat::Identity(3, 3)), DomainError);
}

TEST_CASE("pure states and density matrices validate") {
  Vec v(2);
  v << 1.0, 1.0;
  CHECK_THROWS_AS(PureState{v}, DomainError);

  Mat m(2, 2);
  m << 0.6, 0.5, 0.5, 0.4;  // trace one but indefinite
  CHECK_THROWS_AS(DensityMatrix{m}, DomainError);
  CHECK_THROWS_AS(DensityMatrix{Mat::Identity(2, 2)}, DomainError);
  Mat nh(2, 2);
  nh << 0.5, kI, kI, 0.5;
  CHECK_THROWS_AS(DensityMatrix{nh}, DomainError);

  const DensityMatrix rho = DensityMatrix::pure(PureState::ket(Basis::H));
  CHECK(std::abs(rho.mat()(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(rho.mat()(1, 1)) < 1e-15);
}

TEST_CASE("bell states and tensor ordering") {
  const double s = 1.0 / std::sqrt(2.0);
  const Vec phi = bell_phi_plus().amps();
  CHECK(std::abs(phi(0) - s) < 1e-15);
  CHECK(std::abs(phi(1)) < 1e-15);
  CHECK(std::abs(phi(2)) < 1e-15);
  CHECK(std::abs(phi(3) - s) < 1e-15);
  const Vec psi = bell_psi_plus().amps();
  CHECK(std::abs(psi(1) - s) < 1e-15);
  CHECK(std::abs(psi(2) - s) < 1e-15);

  // first factor occupies the most significant index
  const PureState hv = tensor(PureState::ket(Basis::H), PureState::ket(Basis::V));
  CHECK(std::abs(hv.amps()(1) - 1.0) < 1e-15);

  Mat a(2, 2), b(2, 2);
  a << 1.0, 2.0, 3.0, 4.0;
  b << 0.0, 1.0, 1.0, 0.0;
  const Mat t = tensor(a, b);
  CHECK(t.rows() == 4);
  CHECK(std::abs(t(0, 1) - 1.0) < 1e-15);
  CHECK(std::abs(t(0, 3) - 2.0) < 1e-15);
  CHECK(std::abs(t(3, 0) - 3.0) < 1e-15);
  CHECK(std::abs(t(2, 2)) < 1e-15);  // a(1,1) b(0,0) = 4 * 0
}

TEST_CASE("herm_inv_sqrt") {
  SUBCASE("diagonal closed form") {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = 4.0;
    m(1, 1) = 9.0;
    const Mat x = herm_inv_sqrt(m);
    CHECK(std::abs(x(0, 0) - 0.5) < 1e-14);
    CHECK(std::abs(x(1, 1) - 1.0 / 3.0) < 1e-14);
  }
  SUBCASE("random positive definite") {
    Rng rng(21);
    for (int i = 0; i < 20; ++i) {
      Mat r(2, 2);
      for (int k = 0; k < 4; ++k) r(k / 2, k % 2) = Cplx(rng.normal(), rng.normal());
      const Mat m = r.adjoint() * r + 0.1 * Mat::Identity(2, 2);
      const Mat x = herm_inv_sqrt(m);
      CHECK(max_abs_diff(x * m * x, Mat::Identity(2, 2)) < 1e-10);
    }
  }
  SUBCASE("errors") {
    Mat sing = Mat::Zero(2, 2);
    sing(0, 0) = 1.0;
    sing(1, 1) = 1e-13;
    CHECK_THROWS_AS(herm_inv_sqrt(sing), SingularityError);
    Mat nh(2, 2);
    nh << 1.0, 1.0, 0.0, 1.0;
    CHECK_THROWS_AS(herm_inv_sqrt(nh), DomainError);
    CHECK_THROWS_AS(herm_inv_sqrt(Mat::Identity(3, 2)), DomainError);
  }
}

TEST_CASE("state_fidelity") {
  CHECK(state_fidelity(PureState::ket(Basis::H), PureState::ket(Basis::D)) ==
        doctest::Approx(0.5));
  CHECK(state_fidelity(PureState::ket(Basis::R), PureState::ket(Basis::L)) ==
        doctest::Approx(0.0));
  CHECK(state_fidelity(PureState::ket(Basis::R), PureState::ket(Basis::R)) ==
        doctest::Approx(1.0));

  const DensityMatrix mixed{Mat::Identity(2, 2) * 0.5};
  CHECK(state_fidelity(PureState::ket(Basis::D), mixed) == doctest::Approx(0.5));

  CHECK_THROWS_AS(state_fidelity(PureState::ket(Basis::H), bell_phi_plus()),
                  DomainError);
}

TEST_CASE("structural predicates") {
  CHECK(is_unitary(pauli_y()));
  CHECK_FALSE(is_unitary(2.0 * Mat::Identity(2, 2)));
  CHECK(is_hermitian(pauli_z()));
  CHECK_FALSE(is_hermitian(kI * pauli_z()));
  CHECK(is_positive_semidefinite(Mat::Identity(2, 2)));
  CHECK_FALSE(is_positive_semidefinite(-pauli_z()));
}
