#pragma once

#include <stdexcept>

#include "qmt/hermitian.hpp"

namespace qmt::conic {

/// Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of a Hermitian H.
/// H is PSD iff the embedding is PSD; the embedding's spectrum is that of H
/// with every eigenvalue doubled in multiplicity.
template <typename Scalar>
RealMatrix<Scalar> hermitian_to_real_embedding(const ComplexMatrix<Scalar>& h) {
  if (h.rows() != h.cols()) throw std::invalid_argument("hermitian_to_real_embedding: square input required");
  const Scalar scale = std::max(Scalar(1), h.cwiseAbs().maxCoeff());
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale)
    throw std::invalid_argument("hermitian_to_real_embedding: input is not Hermitian");
  const Eigen::Index d = h.rows();
  RealMatrix<Scalar> out(2 * d, 2 * d);
  out.topLeftCorner(d, d) = h.real();
  out.topRightCorner(d, d) = -h.imag();
  out.bottomLeftCorner(d, d) = h.imag();
  out.bottomRightCorner(d, d) = h.real();
  return out;
}

/// Recovers H from its real embedding, averaging the redundant copies.
template <typename Scalar>
ComplexMatrix<Scalar> real_embedding_to_hermitian(const RealMatrix<Scalar>& m) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0)
    throw std::invalid_argument("real_embedding_to_hermitian: even-dimensional square input required");
  const Eigen::Index d = m.rows() / 2;
  RealMatrix<Scalar> re = (m.topLeftCorner(d, d) + m.bottomRightCorner(d, d)) / Scalar(2);
  RealMatrix<Scalar> im = (m.bottomLeftCorner(d, d) - m.topRightCorner(d, d)) / Scalar(2);
  ComplexMatrix<Scalar> h(d, d);
  h.real() = re;
  h.imag() = im;
  return ((h + h.adjoint()) / Scalar(2)).eval();
}

}  // namespace qmt::conic
