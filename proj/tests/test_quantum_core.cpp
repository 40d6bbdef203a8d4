#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qmt/born.hpp"
#include "qmt/povm.hpp"
#include "qmt/rng.hpp"
#include "qmt/states.hpp"

using namespace qmt;

TEST_CASE("HermitianOperator symmetrizes and rejects non-Hermitian input") {
  ComplexMatrix<double> ok(2, 2);
  ok << std::complex<double>(1, 0), std::complex<double>(0.5, 0.25),
      std::complex<double>(0.5, -0.25), std::complex<double>(-2, 0);
  CHECK_NOTHROW(HermitianOperator<double>(ok));

  ComplexMatrix<double> bad = ok;
  bad(0, 1) += std::complex<double>(1e-6, 0);
  CHECK_THROWS_AS(HermitianOperator<double>{bad}, std::invalid_argument);

  ComplexMatrix<double> tiny = ok;
  tiny(0, 1) += std::complex<double>(0, 1e-14);  // below tolerance, symmetrized away
  const HermitianOperator<double> h(tiny);
  CHECK((h.matrix() - h.matrix().adjoint()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sic_povm reproduces the tetrahedral effects") {
  const auto povm = sic_povm<double>();
  REQUIRE(povm.outcomes() == 4);

  SUBCASE("first effect is diag(1/2, 0)") {
    ComplexMatrix<double> expected(2, 2);
    expected << 0.5, 0.0, 0.0, 0.0;
    CHECK((povm.effect(0).matrix() - expected).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("effects sum to the identity exactly") {
    ComplexMatrix<double> sum = ComplexMatrix<double>::Zero(2, 2);
    for (const auto& e : povm.effects()) sum += e.matrix();
    CHECK((sum - ComplexMatrix<double>::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("each effect has trace 1/2") {
    for (const auto& e : povm.effects()) CHECK(e.trace() == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("pairwise overlaps are symmetric: Tr(Pi_k Pi_l) = 1/12 for k != l") {
    for (Eigen::Index k = 0; k < 4; ++k)
      for (Eigen::Index l = 0; l < 4; ++l) {
        const double overlap = real_inner(povm.effect(k).matrix(), povm.effect(l).matrix());
        CHECK(overlap == doctest::Approx(k == l ? 0.25 : 1.0 / 12.0).epsilon(1e-12));
      }
  }
  CHECK(povm.informationally_complete());
}

TEST_CASE("born_probabilities") {
  const auto povm = sic_povm<double>();

  SUBCASE("maximally mixed state gives the flat distribution on the SIC") {
    StateEnsemble<double> ens({DensityMatrix<double>::maximally_mixed(2)});
    const auto p = born_probabilities(ens, povm);
    for (Eigen::Index k = 0; k < 4; ++k) CHECK(p(0, k) == doctest::Approx(0.25).epsilon(1e-14));
  }

  SUBCASE("|0><0| against the projective z measurement gives (1, 0)") {
    ComplexMatrix<double> p0(2, 2), p1(2, 2);
    p0 << 1, 0, 0, 0;
    p1 << 0, 0, 0, 1;
    Povm<double> proj({HermitianOperator<double>(p0), HermitianOperator<double>(p1)});
    StateEnsemble<double> ens({DensityMatrix<double>(p0)});
    const auto p = born_probabilities(ens, proj);
    CHECK(p(0, 0) == doctest::Approx(1.0));
    CHECK(p(0, 1) == doctest::Approx(0.0));
  }

  SUBCASE("|+x> row against the SIC matches the hand computation") {
    const auto ens = pauli_eigenstate_ensemble<double>();
    const auto p = born_probabilities(ens, povm);
    const double rt2 = std::sqrt(2.0);
    const Eigen::Index jx = ens.index_of_label("+x");
    CHECK(p(jx, 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p(jx, 1) == doctest::Approx(0.25 + rt2 / 6.0).epsilon(1e-12));
    CHECK(p(jx, 2) == doctest::Approx(0.25 - rt2 / 12.0).epsilon(1e-12));
    CHECK(p(jx, 3) == doctest::Approx(0.25 - rt2 / 12.0).epsilon(1e-12));
  }

  SUBCASE("rows sum to one for random ensembles and random POVMs") {
    Rng rng(21);
    for (int rep = 0; rep < 10; ++rep) {
      const Eigen::Index d = 2 + rep % 3;
      auto povm_r = random_povm<double>(d, d * d, rng);
      auto ens = random_ic_ensemble<double>(d, d * d, rng);
      const auto p = born_probabilities(ens, povm_r);
      for (Eigen::Index j = 0; j < p.rows(); ++j)
        CHECK(p.row(j).sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  SUBCASE("dimension mismatch is rejected") {
    Rng rng(3);
    auto ens3 = random_ic_ensemble<double>(3, 9, rng);
    CHECK_THROWS_AS(born_probabilities(ens3, povm), std::invalid_argument);
  }
}

TEST_CASE("pauli_eigenstate_ensemble") {
  const auto ens = pauli_eigenstate_ensemble<double>();
  REQUIRE(ens.size() == 6);
  ComplexMatrix<double> plus_z(2, 2), plus_x(2, 2);
  plus_z << 1, 0, 0, 0;
  plus_x << 0.5, 0.5, 0.5, 0.5;
  CHECK((ens.state(ens.index_of_label("+z")).matrix() - plus_z).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((ens.state(ens.index_of_label("+x")).matrix() - plus_x).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(ens.gram_rank() == 4);
  CHECK(ens.informationally_complete());
}

TEST_CASE("random_density_matrix") {
  SUBCASE("fixed seed reproduces the same matrix") {
    Rng a(17), b(17);
    const auto ra = random_density_matrix<double>(2, a);
    const auto rb = random_density_matrix<double>(2, b);
    CHECK((ra.matrix() - rb.matrix()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("samples satisfy the type invariants") {
    Rng rng(18);
    for (int rep = 0; rep < 1000; ++rep) {
      const auto rho = random_density_matrix<double>(2 + rep % 3, rng);
      CHECK(rho.op().trace() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(rho.op().min_eigenvalue() > -1e-9);
    }
  }
  SUBCASE("mean purity matches the Hilbert-Schmidt value 2d/(d^2+1)") {
    // Pinned from an independent Monte-Carlo oracle (2e5 numpy samples):
    // 0.8000 +- 0.0003 for d = 2.
    Rng rng(19);
    double acc = 0.0;
    const int n = 10000;
    for (int rep = 0; rep < n; ++rep) acc += random_density_matrix<double>(2, rng).purity();
    CHECK(acc / n == doctest::Approx(0.80).epsilon(0.0125));
  }
}

TEST_CASE("random_ic_ensemble") {
  Rng rng(23);
  SUBCASE("d=2, N=4 gives Gram rank 4") {
    const auto ens = random_ic_ensemble<double>(2, 4, rng);
    CHECK(ens.gram_rank() == 4);
  }
  SUBCASE("too few states is a precondition error") {
    CHECK_THROWS_AS(random_ic_ensemble<double>(2, 3, rng), std::invalid_argument);
  }
  SUBCASE("d=3, N=9 gives Gram rank 9") {
    const auto ens = random_ic_ensemble<double>(3, 9, rng);
    CHECK(ens.gram_rank() == 9);
  }
}

TEST_CASE("random_povm") {
  Rng rng(29);
  SUBCASE("effects sum to identity within 1e-10") {
    for (int rep = 0; rep < 20; ++rep) {
      const auto povm = random_povm<double>(2 + rep % 2, 4, rng);
      ComplexMatrix<double> sum = ComplexMatrix<double>::Zero(povm.dim(), povm.dim());
      for (const auto& e : povm.effects()) sum += e.matrix();
      CHECK((sum - ComplexMatrix<double>::Identity(povm.dim(), povm.dim())).cwiseAbs().maxCoeff() <
            1e-10);
    }
  }
  SUBCASE("m=1 is rejected") { CHECK_THROWS_AS(random_povm<double>(2, 1, rng), std::invalid_argument); }
  SUBCASE("fixed seed reproduces the same effects") {
    Rng a(31), b(31);
    const auto pa = random_povm<double>(2, 4, a);
    const auto pb = random_povm<double>(2, 4, b);
    for (Eigen::Index k = 0; k < 4; ++k)
      CHECK((pa.effect(k).matrix() - pb.effect(k).matrix()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("invariants hold over many seeded draws") {
    Rng r2(37);
    for (int rep = 0; rep < 1000; ++rep) {
      const auto povm = random_povm<double>(2, 3 + rep % 3, r2);
      for (const auto& e : povm.effects()) CHECK(e.min_eigenvalue() > -1e-9);
    }
  }
}

TEST_CASE("trace_distance") {
  ComplexMatrix<double> p0(2, 2), p1(2, 2);
  p0 << 1, 0, 0, 0;
  p1 << 0, 0, 0, 1;
  const HermitianOperator<double> h0(p0), h1(p1);
  CHECK(trace_distance(h0, h1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(trace_distance(h0, h0) == doctest::Approx(0.0));
  const HermitianOperator<double> mixed(ComplexMatrix<double>::Identity(2, 2) / 2.0);
  CHECK(trace_distance(mixed, h0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(trace_distance(h0, HermitianOperator<double>::identity(3)), std::invalid_argument);

  SUBCASE("symmetry and triangle inequality on random triples") {
    Rng rng(41);
    for (int rep = 0; rep < 50; ++rep) {
      const auto a = random_density_matrix<double>(2, rng).op();
      const auto b = random_density_matrix<double>(2, rng).op();
      const auto c = random_density_matrix<double>(2, rng).op();
      CHECK(trace_distance(a, b) == doctest::Approx(trace_distance(b, a)).epsilon(1e-12));
      CHECK(trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-10);
    }
  }
}
