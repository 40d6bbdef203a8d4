#pragma once

#include <stdexcept>
#include <vector>

#include "qmt/hermitian.hpp"
#include "qmt/rng.hpp"

namespace qmt {

/// Ordered list of m effects: every effect positive semidefinite (eigenvalues
/// >= -eig_tol) and summing to the identity within entrywise sum_tol.
template <typename Scalar>
class Povm {
 public:
  Povm(std::vector<HermitianOperator<Scalar>> effects, Scalar eig_tol = Scalar(1e-9),
       Scalar sum_tol = Scalar(1e-8))
      : effects_(std::move(effects)) {
    if (effects_.empty()) throw std::invalid_argument("Povm: needs at least one effect");
    const Eigen::Index d = effects_.front().dim();
    ComplexMatrix<Scalar> sum = ComplexMatrix<Scalar>::Zero(d, d);
    for (const auto& e : effects_) {
      if (e.dim() != d) throw std::invalid_argument("Povm: effects have mixed dimensions");
      if (e.min_eigenvalue() < -eig_tol)
        throw std::invalid_argument("Povm: effect has a negative eigenvalue beyond tolerance");
      sum += e.matrix();
    }
    const Scalar dev = (sum - ComplexMatrix<Scalar>::Identity(d, d)).cwiseAbs().maxCoeff();
    if (dev > sum_tol)
      throw std::invalid_argument("Povm: effects do not sum to the identity (deviation " +
                                  std::to_string(static_cast<double>(dev)) + ")");
  }

  Eigen::Index dim() const { return effects_.front().dim(); }
  Eigen::Index outcomes() const { return static_cast<Eigen::Index>(effects_.size()); }
  const HermitianOperator<Scalar>& effect(Eigen::Index k) const { return effects_.at(k); }
  const std::vector<HermitianOperator<Scalar>>& effects() const { return effects_; }

  /// The effects span the full operator space (rank d^2 of the stacked real
  /// coordinate matrix, relative singular-value threshold `tol`).
  bool informationally_complete(Scalar tol = Scalar(1e-8)) const {
    const Eigen::Index d = dim();
    if (outcomes() < d * d) return false;
    RealMatrix<Scalar> coords(outcomes(), d * d);
    for (Eigen::Index k = 0; k < outcomes(); ++k) coords.row(k) = svec(effects_[k].matrix()).transpose();
    Eigen::JacobiSVD<RealMatrix<Scalar>> svd(coords);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] >= tol * sv[0]) ++rank;
    return rank == d * d;
  }

 private:
  std::vector<HermitianOperator<Scalar>> effects_;
};

/// Qubit SIC-POVM: four effects (I + n_k . sigma)/4 with tetrahedral unit
/// vectors n_1 = (0,0,1), n_2 = (2 sqrt2/3, 0, -1/3),
/// n_{3,4} = (-sqrt2/3, +-sqrt(2/3), -1/3).
template <typename Scalar = double>
Povm<Scalar> sic_povm() {
  const Scalar rt2 = std::sqrt(Scalar(2));
  const Scalar rt23 = std::sqrt(Scalar(2) / Scalar(3));
  const Scalar third = Scalar(1) / Scalar(3);
  const std::array<std::array<Scalar, 3>, 4> axes = {{
      {Scalar(0), Scalar(0), Scalar(1)},
      {Scalar(2) * rt2 * third, Scalar(0), -third},
      {-rt2 * third, rt23, -third},
      {-rt2 * third, -rt23, -third},
  }};
  const ComplexMatrix<Scalar> sx = pauli_x<Scalar>(), sy = pauli_y<Scalar>(), sz = pauli_z<Scalar>();
  std::vector<HermitianOperator<Scalar>> effects;
  effects.reserve(4);
  for (const auto& n : axes) {
    ComplexMatrix<Scalar> e =
        (ComplexMatrix<Scalar>::Identity(2, 2) + n[0] * sx + n[1] * sy + n[2] * sz) / Scalar(4);
    effects.emplace_back(e);
  }
  return Povm<Scalar>(std::move(effects));
}

/// Random m-outcome POVM in dimension d: A_k = G_k G_k^dagger with Ginibre
/// G_k, then Pi_k = S^{-1/2} A_k S^{-1/2} where S = sum_k A_k. Completeness
/// holds by construction; a near-singular S is resampled.
template <typename Scalar = double>
Povm<Scalar> random_povm(Eigen::Index d, Eigen::Index m, Rng& rng) {
  if (d < 1) throw std::invalid_argument("random_povm: d must be >= 1");
  if (m < 2) throw std::invalid_argument("random_povm: m must be >= 2");
  using C = std::complex<Scalar>;
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<ComplexMatrix<Scalar>> raw(m);
    ComplexMatrix<Scalar> total = ComplexMatrix<Scalar>::Zero(d, d);
    for (Eigen::Index k = 0; k < m; ++k) {
      ComplexMatrix<Scalar> g(d, d);
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
          const auto z = rng.complex_normal();
          g(i, j) = C(static_cast<Scalar>(z.real()), static_cast<Scalar>(z.imag()));
        }
      raw[k] = g * g.adjoint();
      total += raw[k];
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es(total);
    if (es.eigenvalues().minCoeff() < Scalar(1e-12) * es.eigenvalues().maxCoeff()) continue;
    const ComplexMatrix<Scalar> inv_sqrt =
        es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
        es.eigenvectors().adjoint();
    std::vector<HermitianOperator<Scalar>> effects;
    effects.reserve(m);
    for (Eigen::Index k = 0; k < m; ++k)
      effects.emplace_back((inv_sqrt * raw[k] * inv_sqrt).eval(), Scalar(1e-10));
    return Povm<Scalar>(std::move(effects));
  }
  throw std::runtime_error("random_povm: could not draw a nonsingular normalizer");
}

}  // namespace qmt
