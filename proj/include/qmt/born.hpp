#pragma once

#include <stdexcept>

#include "qmt/povm.hpp"
#include "qmt/states.hpp"

namespace qmt {

/// Outcome probabilities p_jk = Tr(rho_j Pi_k), one row per state. Each row
/// must sum to 1 within 1e-9 and entries must lie in [-1e-9, 1 + 1e-9];
/// entries are clamped to [0, 1] afterwards.
template <typename Scalar>
RealMatrix<Scalar> born_probabilities(const StateEnsemble<Scalar>& states, const Povm<Scalar>& povm) {
  if (states.dim() != povm.dim())
    throw std::invalid_argument("born_probabilities: dimension mismatch");
  const Eigen::Index n = states.size();
  const Eigen::Index m = povm.outcomes();
  RealMatrix<Scalar> p(n, m);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < m; ++k)
      p(j, k) = (states.state(j).matrix() * povm.effect(k).matrix()).trace().real();
  constexpr Scalar tol = Scalar(1e-9);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::abs(p.row(j).sum() - Scalar(1)) > tol)
      throw std::runtime_error("born_probabilities: row does not sum to 1");
    for (Eigen::Index k = 0; k < m; ++k) {
      if (p(j, k) < -tol || p(j, k) > Scalar(1) + tol)
        throw std::runtime_error("born_probabilities: probability out of range");
      p(j, k) = std::min(std::max(p(j, k), Scalar(0)), Scalar(1));
    }
  }
  return p;
}

}  // namespace qmt
