#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qmt/born.hpp"
#include "qmt/noise.hpp"
#include "qmt/povm.hpp"

using namespace qmt;

namespace {

DensityMatrix<double> ket0() {
  ComplexMatrix<double> m(2, 2);
  m << 1, 0, 0, 0;
  return DensityMatrix<double>(m);
}

DensityMatrix<double> ket1() {
  ComplexMatrix<double> m(2, 2);
  m << 0, 0, 0, 1;
  return DensityMatrix<double>(m);
}

DensityMatrix<double> ket_plus() {
  ComplexMatrix<double> m(2, 2);
  m << 0.5, 0.5, 0.5, 0.5;
  return DensityMatrix<double>(m);
}

}  // namespace

TEST_CASE("depolarizing") {
  const auto rho = ket0();
  CHECK((depolarizing(rho, 0.0).matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((depolarizing(rho, 1.0).matrix() - ComplexMatrix<double>::Identity(2, 2) / 2.0)
            .cwiseAbs()
            .maxCoeff() < 1e-15);
  const auto half = depolarizing(rho, 0.5);
  CHECK(half.matrix()(0, 0).real() == doctest::Approx(0.75));
  CHECK(half.matrix()(1, 1).real() == doctest::Approx(0.25));
  CHECK_THROWS_AS(depolarizing(rho, 1.5), std::invalid_argument);
}

TEST_CASE("amplitude_damping") {
  CHECK((amplitude_damping(ket1(), 1.0).matrix() - ket0().matrix()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((amplitude_damping(ket_plus(), 0.0).matrix() - ket_plus().matrix()).cwiseAbs().maxCoeff() <
        1e-15);
  const auto out = amplitude_damping(ket1(), 0.36);
  CHECK(out.matrix()(0, 0).real() == doctest::Approx(0.36).epsilon(1e-12));
  CHECK(out.matrix()(1, 1).real() == doctest::Approx(0.64).epsilon(1e-12));
  CHECK(std::abs(out.matrix()(0, 1)) < 1e-15);
}

TEST_CASE("phase_damping") {
  SUBCASE("diagonal states are fixed points") {
    for (double p : {0.0, 0.3, 0.7, 1.0}) {
      const auto out = phase_damping(ket1(), p);
      CHECK((out.matrix() - ket1().matrix()).cwiseAbs().maxCoeff() < 1e-15);
    }
  }
  SUBCASE("full dephasing sends |+x> to the maximally mixed state") {
    const auto out = phase_damping(ket_plus(), 1.0);
    CHECK((out.matrix() - ComplexMatrix<double>::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("off-diagonal scale is sqrt(1-p)") {
    const auto out = phase_damping(ket_plus(), 0.19);
    CHECK(out.matrix()(0, 1).real() == doctest::Approx(0.5 * 0.9).epsilon(1e-12));
  }
}

TEST_CASE("channels preserve trace and positivity on random inputs") {
  Rng rng(101);
  for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    for (int rep = 0; rep < 100; ++rep) {
      const auto rho = random_density_matrix<double>(2, rng);
      for (int which = 0; which < 3; ++which) {
        const auto out = incoherent_channel(rho, p, which);
        CHECK(out.op().trace() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(out.op().min_eigenvalue() > -1e-12);
      }
    }
  }
}

TEST_CASE("incoherent_mixture") {
  const auto ens = pauli_eigenstate_ensemble<double>();
  SUBCASE("p=0 leaves the ensemble unchanged") {
    Rng rng(5);
    const auto out = incoherent_mixture(ens, 0.0, rng);
    for (Eigen::Index j = 0; j < ens.size(); ++j)
      CHECK((out.state(j).matrix() - ens.state(j).matrix()).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("fixed seed reproduces the channel choices") {
    Rng a(6), b(6);
    const auto oa = incoherent_mixture(ens, 0.1, a);
    const auto ob = incoherent_mixture(ens, 0.1, b);
    for (Eigen::Index j = 0; j < ens.size(); ++j)
      CHECK((oa.state(j).matrix() - ob.state(j).matrix()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("labels are preserved") {
    Rng rng(7);
    const auto out = incoherent_mixture(ens, 0.1, rng);
    CHECK(out.label(0) == "+x");
    CHECK(out.label(5) == "-z");
  }
}

TEST_CASE("random_unitary_near_identity") {
  SUBCASE("eps=0 gives the identity") {
    Rng rng(8);
    const auto u = random_unitary_near_identity<double>(0.0, rng);
    CHECK((u - ComplexMatrix<double>::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("draws are unitary within 1e-12") {
    Rng rng(9);
    for (int rep = 0; rep < 200; ++rep) {
      const auto u = random_unitary_near_identity<double>(0.3, rng);
      CHECK((u * u.adjoint() - ComplexMatrix<double>::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("eps=0.01 rotations move pure states by less than the oracle bound") {
    // Worst case over (U, rho) is sin(arccos(cos(2 pi eps) cos(eps pi/2)))
    // ~= 0.0648 at eps = 0.01; Monte-Carlo over 1e5 joint draws observed a
    // max of 0.0642 and a mean of 0.026.
    Rng rng(10);
    double worst = 0.0, acc = 0.0;
    const int n = 1000;
    for (int rep = 0; rep < n; ++rep) {
      const auto u = random_unitary_near_identity<double>(0.01, rng);
      const auto rho = random_density_matrix<double>(2, rng);
      // purify direction: use a random pure state instead
      ComplexVector<double> v(2);
      v << rng.complex_normal(), rng.complex_normal();
      const auto pure = DensityMatrix<double>::pure(v);
      const HermitianOperator<double> rotated((u * pure.matrix() * u.adjoint()).eval());
      const double t = trace_distance(rotated, pure.op());
      worst = std::max(worst, t);
      acc += t;
      (void)rho;
    }
    CHECK(worst < 0.065);
    CHECK(acc / n == doctest::Approx(0.026).epsilon(0.25));
  }
  CHECK_THROWS_AS(([] {
                    Rng rng(11);
                    return random_unitary_near_identity<double>(1.0, rng);
                  }()),
                  std::invalid_argument);
}

TEST_CASE("coherent_noise") {
  const auto ens = pauli_eigenstate_ensemble<double>();
  SUBCASE("eps=0 is the identity") {
    Rng rng(12);
    const auto out = coherent_noise(ens, 0.0, rng);
    for (Eigen::Index j = 0; j < ens.size(); ++j)
      CHECK((out.state(j).matrix() - ens.state(j).matrix()).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("purity and spectra are preserved") {
    Rng rng(13);
    const auto out = coherent_noise(ens, 0.2, rng);
    for (Eigen::Index j = 0; j < ens.size(); ++j) {
      CHECK(out.state(j).purity() == doctest::Approx(ens.state(j).purity()).epsilon(1e-10));
      const auto ev_in = ens.state(j).op().eigenvalues();
      const auto ev_out = out.state(j).op().eigenvalues();
      CHECK((ev_in - ev_out).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("fixed seed snapshot") {
    Rng a(14), b(14);
    const auto oa = coherent_noise(ens, 0.05, a);
    const auto ob = coherent_noise(ens, 0.05, b);
    for (Eigen::Index j = 0; j < ens.size(); ++j)
      CHECK((oa.state(j).matrix() - ob.state(j).matrix()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("targeted_noise") {
  const auto ens = pauli_eigenstate_ensemble<double>();
  SUBCASE("empty target list is the identity") {
    Rng rng(15);
    NoiseSpec spec{NoiseKind::incoherent_mixture, 0.3, 0};
    const auto out = targeted_noise(ens, {}, spec, rng);
    for (Eigen::Index j = 0; j < ens.size(); ++j)
      CHECK((out.state(j).matrix() - ens.state(j).matrix()).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("incoherent noise touches only the targeted states") {
    Rng rng(16);
    NoiseSpec spec{NoiseKind::incoherent_mixture, 0.1, 0};
    const auto out = targeted_noise(ens, {"+x", "-x"}, spec, rng);
    for (Eigen::Index j = 0; j < ens.size(); ++j) {
      const double moved = (out.state(j).matrix() - ens.state(j).matrix()).cwiseAbs().maxCoeff();
      if (ens.label(j) == "+x" || ens.label(j) == "-x")
        CHECK(moved > 1e-3);
      else
        CHECK(moved < 1e-15);
    }
  }
  SUBCASE("coherent noise on -z only") {
    Rng rng(17);
    NoiseSpec spec{NoiseKind::coherent_rotation, 0.01, 0};
    const auto out = targeted_noise(ens, {"-z"}, spec, rng);
    for (Eigen::Index j = 0; j < ens.size(); ++j) {
      const double moved = (out.state(j).matrix() - ens.state(j).matrix()).cwiseAbs().maxCoeff();
      if (ens.label(j) == "-z")
        CHECK(moved > 0.0);
      else
        CHECK(moved < 1e-15);
    }
  }
  SUBCASE("unknown labels are rejected") {
    Rng rng(18);
    NoiseSpec spec{NoiseKind::none, 0.0, 0};
    CHECK_THROWS_AS(targeted_noise(ens, {"nope"}, spec, rng), std::invalid_argument);
  }
}

TEST_CASE("uniform channel on states against adjoint channel on effects is a gauge identity") {
  // Tr(U rho U^dagger Pi) = Tr(rho U^dagger Pi U): rotating every state and
  // counter-rotating every effect leaves the Born table unchanged.
  Rng rng(19);
  const auto povm = sic_povm<double>();
  const auto ens = pauli_eigenstate_ensemble<double>();
  const auto u = random_unitary_near_identity<double>(0.4, rng);

  std::vector<DensityMatrix<double>> rotated_states;
  for (Eigen::Index j = 0; j < ens.size(); ++j)
    rotated_states.emplace_back((u * ens.state(j).matrix() * u.adjoint()).eval());
  StateEnsemble<double> rotated(std::move(rotated_states));

  std::vector<HermitianOperator<double>> counter_effects;
  for (const auto& e : povm.effects())
    counter_effects.emplace_back((u * e.matrix() * u.adjoint()).eval());
  Povm<double> rotated_povm(std::move(counter_effects));

  const auto base = born_probabilities(rotated, povm);
  const auto gauge = born_probabilities(ens, Povm<double>(rotated_povm.effects()));
  // (U rho U^+, Pi) vs (rho, U^+ Pi U): second table needs the adjoint map.
  std::vector<HermitianOperator<double>> adj_effects;
  for (const auto& e : povm.effects())
    adj_effects.emplace_back((u.adjoint() * e.matrix() * u).eval());
  const auto gauge2 = born_probabilities(ens, Povm<double>(std::move(adj_effects)));
  CHECK((base - gauge2).cwiseAbs().maxCoeff() < 1e-10);
  (void)gauge;
}
