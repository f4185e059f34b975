#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "qlink/channel.hpp"
#include "qlink/rng.hpp"

using namespace qlink;

namespace {

double max_abs_diff(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

Mat random_unitary(Rng& rng) {
  UnitaryParams p;
  p.theta = std::numbers::pi * rng.uniform();
  p.psi = 2.0 * std::numbers::pi * rng.uniform();
  p.lam = 2.0 * std::numbers::pi * rng.uniform();
  return unitary_from_params(p);
}

}  // namespace

TEST_CASE("KrausChannel construction enforces trace preservation") {
  CHECK_THROWS_AS(KrausChannel{std::vector<Mat>{}}, DomainError);
  CHECK_THROWS_AS(KrausChannel{std::vector<Mat>{0.9 * Mat::Identity(2, 2)}},
                  DomainError);
  const Mat fifth = Mat::Identity(2, 2) / std::sqrt(5.0);
  CHECK_THROWS_AS(KrausChannel{std::vector<Mat>(5, fifth)}, DomainError);
  CHECK_THROWS_AS(KrausChannel{std::vector<Mat>{Mat::Identity(2, 3)}}, DomainError);

  const KrausChannel id = KrausChannel::identity();
  CHECK(id.rank() == 1);
  CHECK(id.dim() == 2);
}

TEST_CASE("depolarizing channel acts as the analytic map") {
  const double p = 0.3;
  const KrausChannel ch = depolarizing(p);
  CHECK(ch.rank() == 4);
  const DensityMatrix out = apply(ch, DensityMatrix::pure(PureState::ket(Basis::H)));
  CHECK(out.mat()(0, 0).real() == doctest::Approx(1.0 - p / 2.0));
  CHECK(out.mat()(1, 1).real() == doctest::Approx(p / 2.0));
  CHECK(std::abs(out.mat()(0, 1)) < 1e-14);

  CHECK(depolarizing(0.0).rank() == 1);
  CHECK_THROWS_AS(depolarizing(-0.1), DomainError);
  CHECK_THROWS_AS(depolarizing(1.1), DomainError);
}

TEST_CASE("choi of the identity is the maximally entangled projector") {
  const ChoiMatrix c = choi(KrausChannel::identity());
  const Vec phi = bell_phi_plus().amps();
  const Mat proj = phi * phi.adjoint();
  CHECK(max_abs_diff(c.mat(), proj) < 1e-14);
}

TEST_CASE("ChoiMatrix validation") {
  CHECK_THROWS_AS(ChoiMatrix{Mat::Identity(4, 4)}, DomainError);  // trace 4
  Mat herm_bad = Mat::Zero(4, 4);
  herm_bad(0, 1) = Cplx(0.0, 1.0);
  herm_bad(0, 0) = 1.0;
  CHECK_THROWS_AS(ChoiMatrix{herm_bad}, DomainError);
  // unit trace and PSD, but the reduced input state is |H><H|, not I/2
  Mat pinned = Mat::Zero(4, 4);
  pinned(0, 0) = 1.0;
  CHECK_THROWS_AS(ChoiMatrix{pinned}, DomainError);
  CHECK_NOTHROW(ChoiMatrix{Mat::Identity(4, 4) * 0.25});
}

TEST_CASE("choi and kraus_from_choi round trip") {
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    const KrausChannel ch =
        compose(depolarizing(0.25 * rng.uniform()),
                KrausChannel{std::vector<Mat>{random_unitary(rng)}});
    const ChoiMatrix c = choi(ch);
    const KrausChannel back = kraus_from_choi(c);
    CHECK(back.rank() <= 4);
    CHECK(max_abs_diff(choi(back).mat(), c.mat()) < 1e-10);
  }
}

TEST_CASE("process fidelities") {
  Rng rng(32);
  const Mat u = random_unitary(rng);
  CHECK(process_fidelity_unitary(u, u) == doctest::Approx(1.0));
  CHECK(process_fidelity_unitary(pauli_x(), Mat::Identity(2, 2)) ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(process_fidelity_unitary(2.0 * u, u), DomainError);

  const double p = 0.17;
  CHECK(process_fidelity_kraus(depolarizing(p), Mat::Identity(2, 2)) ==
        doctest::Approx(1.0 - 0.75 * p));
  CHECK(choi_fidelity_to_unitary(choi(depolarizing(p)), Mat::Identity(2, 2)) ==
        doctest::Approx(1.0 - 0.75 * p));
}

TEST_CASE("kraus and choi fidelity forms agree on random channels") {
  Rng rng(33);
  for (int i = 0; i < 50; ++i) {
    const Mat target = random_unitary(rng);
    const KrausChannel ch =
        compose(depolarizing(rng.uniform() * 0.5),
                KrausChannel{std::vector<Mat>{random_unitary(rng)}});
    const double a = process_fidelity_kraus(ch, target);
    const double b = choi_fidelity_to_unitary(choi(ch), target);
    CHECK(std::abs(a - b) < 1e-12);
  }
}

TEST_CASE("choi_purity of the depolarizing family") {
  const double p = 0.0409;
  const double expect =
      (1.0 - 0.75 * p) * (1.0 - 0.75 * p) + 3.0 * (p / 4.0) * (p / 4.0);
  CHECK(choi_purity(choi(depolarizing(p))) == doctest::Approx(expect));
  CHECK(choi_purity(choi(KrausChannel::identity())) == doctest::Approx(1.0));
}

TEST_CASE("compose reduces and matches the analytic composition") {
  const KrausChannel both = compose(depolarizing(0.3), depolarizing(0.2));
  CHECK(both.rank() <= 4);
  const double p_eff = 1.0 - 0.7 * 0.8;
  CHECK(max_abs_diff(choi(both).mat(), choi(depolarizing(p_eff)).mat()) < 1e-12);

  Rng rng(34);
  const Mat u = random_unitary(rng);
  const KrausChannel after_u =
      compose(depolarizing(0.12), KrausChannel{std::vector<Mat>{u}});
  CHECK(process_fidelity_kraus(after_u, u) == doctest::Approx(1.0 - 0.75 * 0.12));
}

TEST_CASE("measurement_probability") {
  const DensityMatrix rho = DensityMatrix::pure(bell_phi_plus());
  const KrausChannel id = KrausChannel::identity();
  CHECK(measurement_probability(id, rho, bell_phi_plus()) == doctest::Approx(1.0));
  CHECK(measurement_probability(id, rho, bell_psi_plus()) == doctest::Approx(0.0));
  const double p = 0.2;
  CHECK(measurement_probability(depolarizing(p), rho, bell_phi_plus()) ==
        doctest::Approx(1.0 - 0.75 * p));
}

TEST_CASE("extend_apply hits the second slot only") {
  // x on the transmitted qubit maps |phi+> onto |psi+>
  const KrausChannel flip{std::vector<Mat>{pauli_x()}};
  const DensityMatrix out = extend_apply(flip, DensityMatrix::pure(bell_phi_plus()));
  const Vec psi = bell_psi_plus().amps();
  CHECK(max_abs_diff(out.mat(), psi * psi.adjoint()) < 1e-14);
}

TEST_CASE("gauge_fix recovers a unitary misalignment") {
  // the misalignment sits after the channel on the receive side, so every
  // element of the series carries w as a left factor
  const Mat w = unitary_from_params({1.2, 0.8, 5.7});
  const KrausChannel cw{std::vector<Mat>{w}};
  const KrausChannel cwx{std::vector<Mat>{w * pauli_x()}};
  const std::vector<ChoiMatrix> series{choi(cwx), choi(cw)};

  const GaugeResult g = gauge_fix(series);
  CHECK(g.objective > 1.0 - 1e-9);
  CHECK(is_unitary(g.v, 1e-8));
  // the same correction applies across the series, so the first element
  // becomes the x flip
  CHECK(choi_fidelity_to_unitary(series[1], Mat::Identity(2, 2)) < 0.999);
  const ChoiMatrix fixed_last(g.corrected[1].mat());
  const ChoiMatrix fixed_first(g.corrected[0].mat());
  CHECK(choi_fidelity_to_unitary(fixed_last, Mat::Identity(2, 2)) > 1.0 - 1e-6);
  CHECK(choi_fidelity_to_unitary(fixed_first, pauli_x()) > 1.0 - 1e-6);

  CHECK_THROWS_AS(gauge_fix(std::vector<ChoiMatrix>{}), DomainError);
  CHECK_THROWS_AS(gauge_fix(std::vector<ChoiMatrix>{choi(KrausChannel::identity(4))}),
                  DomainError);
}
