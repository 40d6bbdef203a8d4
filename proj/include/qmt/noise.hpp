#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qmt/rng.hpp"
#include "qmt/states.hpp"

namespace qmt {

enum class NoiseKind { none, incoherent_mixture, coherent_rotation };

/// State-preparation noise configuration. `strength` is p in [0,1] for the
/// incoherent mixture and the coherent magnitude eps in [0,1) for rotations.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double strength = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    switch (kind) {
      case NoiseKind::none:
        break;
      case NoiseKind::incoherent_mixture:
        if (strength < 0.0 || strength > 1.0)
          throw std::invalid_argument("NoiseSpec: incoherent strength must be in [0, 1]");
        break;
      case NoiseKind::coherent_rotation:
        if (strength < 0.0 || strength >= 1.0)
          throw std::invalid_argument("NoiseSpec: coherent strength must be in [0, 1)");
        break;
    }
  }
};

namespace detail {
template <typename Scalar>
void check_qubit_channel(const DensityMatrix<Scalar>& rho, Scalar p) {
  if (rho.dim() != 2) throw std::invalid_argument("noise channel: defined for qubits only");
  if (p < Scalar(0) || p > Scalar(1)) throw std::invalid_argument("noise channel: p must be in [0, 1]");
}
}  // namespace detail

/// (1 - p) rho + (p/2) I.
template <typename Scalar>
DensityMatrix<Scalar> depolarizing(const DensityMatrix<Scalar>& rho, Scalar p) {
  detail::check_qubit_channel(rho, p);
  ComplexMatrix<Scalar> out =
      (Scalar(1) - p) * rho.matrix() + (p / Scalar(2)) * ComplexMatrix<Scalar>::Identity(2, 2);
  return DensityMatrix<Scalar>(out);
}

/// Kraus pair K0 = diag(1, sqrt(1-p)), K1 = [[0, sqrt(p)], [0, 0]].
template <typename Scalar>
DensityMatrix<Scalar> amplitude_damping(const DensityMatrix<Scalar>& rho, Scalar p) {
  detail::check_qubit_channel(rho, p);
  using C = std::complex<Scalar>;
  ComplexMatrix<Scalar> k0(2, 2), k1(2, 2);
  k0 << C(1), C(0), C(0), C(std::sqrt(Scalar(1) - p));
  k1 << C(0), C(std::sqrt(p)), C(0), C(0);
  ComplexMatrix<Scalar> out = k0 * rho.matrix() * k0.adjoint() + k1 * rho.matrix() * k1.adjoint();
  return DensityMatrix<Scalar>(out);
}

/// Kraus pair E0 = diag(1, sqrt(1-p)), E1 = diag(0, sqrt(p)): diagonal kept,
/// off-diagonal scaled by sqrt(1-p).
template <typename Scalar>
DensityMatrix<Scalar> phase_damping(const DensityMatrix<Scalar>& rho, Scalar p) {
  detail::check_qubit_channel(rho, p);
  using C = std::complex<Scalar>;
  ComplexMatrix<Scalar> e0(2, 2), e1(2, 2);
  e0 << C(1), C(0), C(0), C(std::sqrt(Scalar(1) - p));
  e1 << C(0), C(0), C(0), C(std::sqrt(p));
  ComplexMatrix<Scalar> out = e0 * rho.matrix() * e0.adjoint() + e1 * rho.matrix() * e1.adjoint();
  return DensityMatrix<Scalar>(out);
}

/// Applies one of {depolarizing, amplitude damping, phase damping} at strength
/// p to a single state, chosen by the 3-outcome variable x.
template <typename Scalar>
DensityMatrix<Scalar> incoherent_channel(const DensityMatrix<Scalar>& rho, Scalar p, int x) {
  switch (x) {
    case 0:
      return depolarizing(rho, p);
    case 1:
      return amplitude_damping(rho, p);
    case 2:
      return phase_damping(rho, p);
    default:
      throw std::invalid_argument("incoherent_channel: x must be 0, 1 or 2");
  }
}

/// For each state independently draws X uniform over {0,1,2} and applies the
/// corresponding incoherent channel at strength p.
template <typename Scalar>
StateEnsemble<Scalar> incoherent_mixture(const StateEnsemble<Scalar>& ensemble, Scalar p, Rng& rng) {
  std::vector<DensityMatrix<Scalar>> out;
  out.reserve(ensemble.size());
  for (Eigen::Index j = 0; j < ensemble.size(); ++j) {
    const int x = static_cast<int>(rng.uniform_index(3));
    out.push_back(incoherent_channel(ensemble.state(j), p, x));
  }
  return StateEnsemble<Scalar>(std::move(out), ensemble.labels());
}

/// Random single-qubit rotation close to the identity. Angles psi, vphi are
/// sampled uniformly on [0, 2pi], zeta uniformly on [0, 1] with
/// phi = arcsin(sqrt(zeta)); psi and phi are then scaled by eps (vphi is not)
/// and the rotation is
///   [[e^{i psi} cos phi, -e^{-i vphi} sin phi],
///    [e^{i vphi} sin phi, e^{-i psi} cos phi]].
template <typename Scalar = double>
ComplexMatrix<Scalar> random_unitary_near_identity(Scalar eps, Rng& rng) {
  if (eps < Scalar(0) || eps >= Scalar(1))
    throw std::invalid_argument("random_unitary_near_identity: eps must be in [0, 1)");
  using C = std::complex<Scalar>;
  const Scalar two_pi = Scalar(2) * static_cast<Scalar>(EIGEN_PI);
  const Scalar psi = eps * static_cast<Scalar>(rng.uniform(0.0, 1.0)) * two_pi;
  const Scalar vphi = static_cast<Scalar>(rng.uniform(0.0, 1.0)) * two_pi;
  const Scalar zeta = static_cast<Scalar>(rng.uniform01());
  const Scalar phi = eps * std::asin(std::sqrt(zeta));
  ComplexMatrix<Scalar> u(2, 2);
  u(0, 0) = std::polar(std::cos(phi), psi);
  u(0, 1) = -std::polar(std::sin(phi), -vphi);
  u(1, 0) = std::polar(std::sin(phi), vphi);
  u(1, 1) = std::polar(std::cos(phi), -psi);
  return u;
}

/// Conjugates every state by an independently drawn near-identity rotation.
template <typename Scalar>
StateEnsemble<Scalar> coherent_noise(const StateEnsemble<Scalar>& ensemble, Scalar eps, Rng& rng) {
  if (ensemble.dim() != 2) throw std::invalid_argument("coherent_noise: defined for qubits only");
  std::vector<DensityMatrix<Scalar>> out;
  out.reserve(ensemble.size());
  for (Eigen::Index j = 0; j < ensemble.size(); ++j) {
    const ComplexMatrix<Scalar> u = random_unitary_near_identity<Scalar>(eps, rng);
    out.emplace_back((u * ensemble.state(j).matrix() * u.adjoint()).eval());
  }
  return StateEnsemble<Scalar>(std::move(out), ensemble.labels());
}

/// Applies the spec's noise to every ensemble state.
template <typename Scalar>
StateEnsemble<Scalar> apply_noise(const StateEnsemble<Scalar>& ensemble, const NoiseSpec& spec, Rng& rng) {
  spec.validate();
  switch (spec.kind) {
    case NoiseKind::none:
      return ensemble;
    case NoiseKind::incoherent_mixture:
      return incoherent_mixture(ensemble, static_cast<Scalar>(spec.strength), rng);
    case NoiseKind::coherent_rotation:
      return coherent_noise(ensemble, static_cast<Scalar>(spec.strength), rng);
  }
  throw std::logic_error("apply_noise: unreachable");
}

/// Applies the spec's channel/rotation to the listed states only; all other
/// states pass through untouched. Unknown labels are rejected.
template <typename Scalar>
StateEnsemble<Scalar> targeted_noise(const StateEnsemble<Scalar>& ensemble,
                                     const std::vector<std::string>& targets, const NoiseSpec& spec,
                                     Rng& rng) {
  spec.validate();
  std::vector<bool> hit(ensemble.size(), false);
  for (const auto& t : targets) hit[ensemble.index_of_label(t)] = true;
  std::vector<DensityMatrix<Scalar>> out;
  out.reserve(ensemble.size());
  for (Eigen::Index j = 0; j < ensemble.size(); ++j) {
    if (!hit[j] || spec.kind == NoiseKind::none) {
      out.push_back(ensemble.state(j));
      continue;
    }
    if (spec.kind == NoiseKind::incoherent_mixture) {
      const int x = static_cast<int>(rng.uniform_index(3));
      out.push_back(incoherent_channel(ensemble.state(j), static_cast<Scalar>(spec.strength), x));
    } else {
      const ComplexMatrix<Scalar> u = random_unitary_near_identity<Scalar>(static_cast<Scalar>(spec.strength), rng);
      out.emplace_back((u * ensemble.state(j).matrix() * u.adjoint()).eval());
    }
  }
  return StateEnsemble<Scalar>(std::move(out), ensemble.labels());
}

}  // namespace qmt
