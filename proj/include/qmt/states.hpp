#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmt/hermitian.hpp"
#include "qmt/rng.hpp"

namespace qmt {

/// Unit-trace positive semidefinite Hermitian operator.
template <typename Scalar>
class DensityMatrix {
 public:
  DensityMatrix() = default;

  explicit DensityMatrix(HermitianOperator<Scalar> op, Scalar tol = Scalar(1e-9)) : op_(std::move(op)) {
    if (std::abs(op_.trace() - Scalar(1)) > tol)
      throw std::invalid_argument("DensityMatrix: trace must be 1");
    if (op_.min_eigenvalue() < -tol)
      throw std::invalid_argument("DensityMatrix: negative eigenvalue beyond tolerance");
  }

  explicit DensityMatrix(const ComplexMatrix<Scalar>& m, Scalar tol = Scalar(1e-9))
      : DensityMatrix(HermitianOperator<Scalar>(m), tol) {}

  Eigen::Index dim() const { return op_.dim(); }
  const HermitianOperator<Scalar>& op() const { return op_; }
  const ComplexMatrix<Scalar>& matrix() const { return op_.matrix(); }

  Scalar purity() const { return (matrix() * matrix()).trace().real(); }

  static DensityMatrix maximally_mixed(Eigen::Index d) {
    return DensityMatrix(HermitianOperator<Scalar>(ComplexMatrix<Scalar>::Identity(d, d) / Scalar(d)));
  }

  /// Pure state |v><v| from a (not necessarily normalized) vector.
  static DensityMatrix pure(const ComplexVector<Scalar>& v) {
    const Scalar n2 = v.squaredNorm();
    if (n2 <= Scalar(0)) throw std::invalid_argument("DensityMatrix::pure: zero vector");
    return DensityMatrix(HermitianOperator<Scalar>((v * v.adjoint() / n2).eval()));
  }

 private:
  HermitianOperator<Scalar> op_;
};

/// Ordered list of N input states sharing one dimension, with optional labels.
/// `require_ic` checks that the states span the full d^2-dimensional operator
/// space (Gram rank d^2, relative singular-value threshold 1e-8).
template <typename Scalar>
class StateEnsemble {
 public:
  StateEnsemble(std::vector<DensityMatrix<Scalar>> states,
                std::optional<std::vector<std::string>> labels = std::nullopt, bool require_ic = false)
      : states_(std::move(states)), labels_(std::move(labels)) {
    if (states_.empty()) throw std::invalid_argument("StateEnsemble: needs at least one state");
    const Eigen::Index d = states_.front().dim();
    for (const auto& s : states_)
      if (s.dim() != d) throw std::invalid_argument("StateEnsemble: states have mixed dimensions");
    if (labels_ && static_cast<Eigen::Index>(labels_->size()) != size())
      throw std::invalid_argument("StateEnsemble: label count mismatch");
    if (require_ic && !informationally_complete())
      throw std::invalid_argument("StateEnsemble: states are not informationally complete");
  }

  Eigen::Index dim() const { return states_.front().dim(); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(states_.size()); }
  const DensityMatrix<Scalar>& state(Eigen::Index j) const { return states_.at(j); }
  const std::vector<DensityMatrix<Scalar>>& states() const { return states_; }
  const std::optional<std::vector<std::string>>& labels() const { return labels_; }

  std::string label(Eigen::Index j) const {
    if (labels_) return labels_->at(j);
    return "state" + std::to_string(j);
  }

  Eigen::Index index_of_label(const std::string& lab) const {
    for (Eigen::Index j = 0; j < size(); ++j)
      if (label(j) == lab) return j;
    throw std::invalid_argument("StateEnsemble: unknown label '" + lab + "'");
  }

  /// Stacked real coordinates of the states, one row per state.
  RealMatrix<Scalar> coordinate_matrix() const {
    const Eigen::Index d = dim();
    RealMatrix<Scalar> coords(size(), d * d);
    for (Eigen::Index j = 0; j < size(); ++j) coords.row(j) = svec(states_[j].matrix()).transpose();
    return coords;
  }

  Eigen::Index gram_rank(Scalar tol = Scalar(1e-8)) const {
    Eigen::JacobiSVD<RealMatrix<Scalar>> svd(coordinate_matrix());
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] >= tol * sv[0]) ++rank;
    return rank;
  }

  bool informationally_complete(Scalar tol = Scalar(1e-8)) const {
    return size() >= dim() * dim() && gram_rank(tol) == dim() * dim();
  }

 private:
  std::vector<DensityMatrix<Scalar>> states_;
  std::optional<std::vector<std::string>> labels_;
};

/// The six Pauli eigenstates |+-x>, |+-y>, |+-z| with matching labels.
template <typename Scalar = double>
StateEnsemble<Scalar> pauli_eigenstate_ensemble() {
  using C = std::complex<Scalar>;
  const Scalar h = Scalar(1) / Scalar(2);
  auto make = [](std::initializer_list<C> entries) {
    ComplexMatrix<Scalar> m(2, 2);
    auto it = entries.begin();
    m(0, 0) = *it++;
    m(0, 1) = *it++;
    m(1, 0) = *it++;
    m(1, 1) = *it++;
    return DensityMatrix<Scalar>(m);
  };
  std::vector<DensityMatrix<Scalar>> states = {
      make({C(h), C(h), C(h), C(h)}),            // |+x>
      make({C(h), C(-h), C(-h), C(h)}),          // |-x>
      make({C(h), C(0, -h), C(0, h), C(h)}),     // |+y>
      make({C(h), C(0, h), C(0, -h), C(h)}),     // |-y>
      make({C(1), C(0), C(0), C(0)}),            // |+z>
      make({C(0), C(0), C(0), C(1)}),            // |-z>
  };
  std::vector<std::string> labels = {"+x", "-x", "+y", "-y", "+z", "-z"};
  return StateEnsemble<Scalar>(std::move(states), std::move(labels), /*require_ic=*/true);
}

/// Hilbert-Schmidt-distributed random density matrix: rho = G G^dagger
/// normalized to unit trace, G a d x d matrix of iid standard complex
/// Gaussians (Ginibre).
template <typename Scalar = double>
DensityMatrix<Scalar> random_density_matrix(Eigen::Index d, Rng& rng) {
  if (d < 2) throw std::invalid_argument("random_density_matrix: d must be >= 2");
  using C = std::complex<Scalar>;
  ComplexMatrix<Scalar> g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto z = rng.complex_normal();
      g(i, j) = C(static_cast<Scalar>(z.real()), static_cast<Scalar>(z.imag()));
    }
  ComplexMatrix<Scalar> a = g * g.adjoint();
  a /= a.trace().real();
  return DensityMatrix<Scalar>(HermitianOperator<Scalar>(a), Scalar(1e-9));
}

/// Draws N random states until the set passes the informational-completeness
/// rank check; the whole set is resampled on failure.
template <typename Scalar = double>
StateEnsemble<Scalar> random_ic_ensemble(Eigen::Index d, Eigen::Index n, Rng& rng, int max_attempts = 100) {
  if (n < d * d)
    throw std::invalid_argument("random_ic_ensemble: need at least d^2 states");
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<DensityMatrix<Scalar>> states;
    states.reserve(n);
    for (Eigen::Index j = 0; j < n; ++j) states.push_back(random_density_matrix<Scalar>(d, rng));
    StateEnsemble<Scalar> ens(std::move(states));
    if (ens.informationally_complete()) return ens;
  }
  throw std::runtime_error("random_ic_ensemble: failed to generate an IC set");
}

}  // namespace qmt
