#pragma once

#include <stdexcept>

#include "qmt/born.hpp"
#include "qmt/rng.hpp"

namespace qmt {

/// Empirical outcome table of a finite-shot experiment. `counts` is N x m with
/// every row summing to `shots_per_state`; `frequencies` is counts divided by
/// shots_per_state, so frequency rows sum to exactly 1. Tables produced by
/// exact_frequencies carry no counts (total_shots == 0) and hold Born
/// probabilities directly.
template <typename Scalar>
struct FrequencyTable {
  CountMatrix counts;
  std::int64_t shots_per_state = 0;
  std::int64_t total_shots = 0;
  RealMatrix<Scalar> frequencies;

  Eigen::Index states() const { return frequencies.rows(); }
  Eigen::Index outcomes() const { return frequencies.cols(); }
  bool exact() const { return total_shots == 0; }
};

namespace detail {

/// Multinomial draw by chained binomials; each binomial is sampled as a
/// Bernoulli count so the result is exact for any n.
inline Eigen::VectorX<std::int64_t> multinomial(Rng& rng, std::int64_t n, const Eigen::VectorXd& p) {
  const Eigen::Index m = p.size();
  Eigen::VectorX<std::int64_t> counts = Eigen::VectorX<std::int64_t>::Zero(m);
  std::int64_t remaining = n;
  double mass = 1.0;
  for (Eigen::Index k = 0; k + 1 < m && remaining > 0; ++k) {
    const double q = mass > 0.0 ? std::min(1.0, std::max(0.0, p[k] / mass)) : 1.0;
    std::int64_t c = 0;
    for (std::int64_t t = 0; t < remaining; ++t)
      if (rng.bernoulli(q)) ++c;
    counts[k] = c;
    remaining -= c;
    mass -= p[k];
  }
  counts[m - 1] += remaining;
  return counts;
}

}  // namespace detail

/// Simulates total_shots measurement runs split evenly over the states: each
/// row is one multinomial draw with total_shots/N trials over the Born row.
/// total_shots must be divisible by N. Rows whose Born sum drifts from 1 by
/// less than 1e-9 are renormalized before sampling.
template <typename Scalar>
FrequencyTable<Scalar> sample_frequencies(const StateEnsemble<Scalar>& states, const Povm<Scalar>& povm,
                                          std::int64_t total_shots, Rng& rng) {
  const Eigen::Index n = states.size();
  if (total_shots <= 0) throw std::invalid_argument("sample_frequencies: total_shots must be positive");
  if (total_shots % n != 0)
    throw std::invalid_argument("sample_frequencies: total_shots must be divisible by the number of states");
  const RealMatrix<Scalar> p = born_probabilities(states, povm);
  const std::int64_t per_state = total_shots / n;
  FrequencyTable<Scalar> table;
  table.shots_per_state = per_state;
  table.total_shots = total_shots;
  table.counts.resize(n, p.cols());
  table.frequencies.resize(n, p.cols());
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd row = p.row(j).template cast<double>();
    row /= row.sum();
    const auto counts = detail::multinomial(rng, per_state, row);
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      table.counts(j, k) = counts[k];
      table.frequencies(j, k) = Scalar(counts[k]) / Scalar(per_state);
    }
  }
  return table;
}

/// Infinite-shot idealization: frequencies equal Born probabilities, counts
/// are left empty.
template <typename Scalar>
FrequencyTable<Scalar> exact_frequencies(const StateEnsemble<Scalar>& states, const Povm<Scalar>& povm) {
  FrequencyTable<Scalar> table;
  table.frequencies = born_probabilities(states, povm);
  table.counts.resize(0, 0);
  table.shots_per_state = 0;
  table.total_shots = 0;
  return table;
}

}  // namespace qmt
