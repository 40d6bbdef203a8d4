#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qmt {

template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using RealMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using RealVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Derived>
auto adjoint_of(const Eigen::MatrixBase<Derived>& m) {
  return m.adjoint().eval();
}

/// d x d complex Hermitian matrix, the base numeric object for states and
/// effects. Construction symmetrizes (A + A^dagger)/2 and rejects inputs whose
/// asymmetry exceeds `tol` relative to max(1, max |entry|).
template <typename Scalar>
class HermitianOperator {
 public:
  using Complex = std::complex<Scalar>;
  using Matrix = ComplexMatrix<Scalar>;

  HermitianOperator() = default;

  explicit HermitianOperator(const Matrix& entries, Scalar tol = Scalar(1e-12)) {
    if (entries.rows() != entries.cols() || entries.rows() == 0)
      throw std::invalid_argument("HermitianOperator: matrix must be square and non-empty");
    const Scalar scale = std::max(Scalar(1), entries.cwiseAbs().maxCoeff());
    const Scalar asym = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
    if (asym > tol * scale)
      throw std::invalid_argument("HermitianOperator: input is not Hermitian (asymmetry " +
                                  std::to_string(static_cast<double>(asym)) + ")");
    mat_ = ((entries + entries.adjoint()) / Scalar(2)).eval();
  }

  static HermitianOperator identity(Eigen::Index d) { return HermitianOperator(Matrix::Identity(d, d)); }
  static HermitianOperator zero(Eigen::Index d) { return HermitianOperator(Matrix::Zero(d, d)); }

  Eigen::Index dim() const { return mat_.rows(); }
  const Matrix& matrix() const { return mat_; }

  Scalar trace() const { return mat_.trace().real(); }

  RealVector<Scalar> eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(mat_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

  Scalar min_eigenvalue() const { return eigenvalues().minCoeff(); }

  friend HermitianOperator operator+(const HermitianOperator& a, const HermitianOperator& b) {
    return HermitianOperator(a.mat_ + b.mat_);
  }
  friend HermitianOperator operator-(const HermitianOperator& a, const HermitianOperator& b) {
    return HermitianOperator(a.mat_ - b.mat_);
  }
  friend HermitianOperator operator*(Scalar c, const HermitianOperator& a) {
    return HermitianOperator(c * a.mat_);
  }

 private:
  Matrix mat_;
};

/// Tr(A B) for Hermitian A, B; real by symmetry.
template <typename Scalar>
Scalar real_inner(const ComplexMatrix<Scalar>& a, const ComplexMatrix<Scalar>& b) {
  return (a * b).trace().real();
}

template <typename Scalar = double>
ComplexMatrix<Scalar> pauli_x() {
  ComplexMatrix<Scalar> m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

template <typename Scalar = double>
ComplexMatrix<Scalar> pauli_y() {
  using C = std::complex<Scalar>;
  ComplexMatrix<Scalar> m(2, 2);
  m << C(0, 0), C(0, -1), C(0, 1), C(0, 0);
  return m;
}

template <typename Scalar = double>
ComplexMatrix<Scalar> pauli_z() {
  ComplexMatrix<Scalar> m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

/// Real coordinates of a Hermitian matrix in an orthonormal basis of the
/// Hermitian d x d space (dimension d^2). Layout, column-major over the lower
/// triangle: diagonal entry (j,j), then sqrt(2) Re(i,j), sqrt(2) Im(i,j) for
/// i > j. Satisfies dot(svec(A), svec(B)) == Tr(A B).
template <typename Scalar>
RealVector<Scalar> svec(const ComplexMatrix<Scalar>& h) {
  const Eigen::Index d = h.rows();
  const Scalar rt2 = std::sqrt(Scalar(2));
  RealVector<Scalar> v(d * d);
  Eigen::Index t = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    v[t++] = h(j, j).real();
    for (Eigen::Index i = j + 1; i < d; ++i) {
      v[t++] = rt2 * h(i, j).real();
      v[t++] = rt2 * h(i, j).imag();
    }
  }
  return v;
}

/// Inverse of svec; always returns an exactly Hermitian matrix.
template <typename Scalar>
ComplexMatrix<Scalar> smat(const Eigen::Ref<const RealVector<Scalar>>& v, Eigen::Index d) {
  if (v.size() != d * d) throw std::invalid_argument("smat: coordinate size mismatch");
  using C = std::complex<Scalar>;
  const Scalar inv_rt2 = Scalar(1) / std::sqrt(Scalar(2));
  ComplexMatrix<Scalar> h(d, d);
  Eigen::Index t = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    h(j, j) = C(v[t++], 0);
    for (Eigen::Index i = j + 1; i < d; ++i) {
      const Scalar re = v[t++] * inv_rt2;
      const Scalar im = v[t++] * inv_rt2;
      h(i, j) = C(re, im);
      h(j, i) = C(re, -im);
    }
  }
  return h;
}

/// Trace distance (1/2) sum |eig(A - B)|.
template <typename Scalar>
Scalar trace_distance(const HermitianOperator<Scalar>& a, const HermitianOperator<Scalar>& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("trace_distance: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es(a.matrix() - b.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum() / Scalar(2);
}

}  // namespace qmt
