#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmt/conic/program.hpp"
#include "qmt/povm.hpp"
#include "qmt/sampling.hpp"
#include "qmt/states.hpp"

namespace qmt {

/// Output of a tomography fit. delta_star is set by the uniform-perturbation
/// fits (measurement- and state-side), delta_matrix/per_state_delta by the
/// per-entry fit, objective by least squares and log-MLE. residual_table is
/// always recomputed from the returned operators, never taken from solver
/// internals.
template <typename Scalar>
struct FitReport {
  std::string estimator;
  conic::SolveStatus solver_status = conic::SolveStatus::numerical_failure;
  conic::SolverStats<Scalar> solver_stats;

  std::optional<Povm<Scalar>> fitted_povm;
  std::optional<StateEnsemble<Scalar>> fitted_states;
  std::optional<Scalar> delta_star;
  std::optional<RealMatrix<Scalar>> delta_matrix;
  std::optional<RealVector<Scalar>> per_state_delta;
  std::optional<Scalar> objective;
  RealMatrix<Scalar> residual_table;

  bool ok() const {
    return solver_status == conic::SolveStatus::optimal ||
           solver_status == conic::SolveStatus::near_optimal;
  }
};

namespace detail {

template <typename Scalar>
void check_fit_inputs(const FrequencyTable<Scalar>& freqs, const StateEnsemble<Scalar>& states,
                      bool require_ic) {
  if (freqs.states() != states.size())
    throw std::invalid_argument("fit: frequency table row count does not match the ensemble");
  if (require_ic && !states.informationally_complete())
    throw std::invalid_argument("fit: state ensemble is not informationally complete");
}

/// Completeness sum_k Pi_k = I as d^2 real equality rows over the orthonormal
/// coordinate basis of the Hermitian space; all effects stay symmetric in the
/// formulation.
template <typename Scalar>
void add_completeness_rows(conic::OperatorProgram<Scalar>& prog,
                           const std::vector<Eigen::Index>& effect_vars, Eigen::Index d) {
  for (Eigen::Index u = 0; u < d * d; ++u) {
    RealVector<Scalar> coords = RealVector<Scalar>::Zero(d * d);
    coords[u] = Scalar(1);
    const ComplexMatrix<Scalar> basis = smat<Scalar>(coords, d);
    typename conic::OperatorProgram<Scalar>::Constraint cons;
    for (const auto var : effect_vars) cons.operator_terms.push_back({var, basis});
    cons.sense = conic::Sense::equal;
    cons.rhs = basis.trace().real();
    prog.add_constraint(std::move(cons));
  }
}

template <typename Scalar>
std::optional<Povm<Scalar>> extract_povm(const conic::SolveResult<Scalar>& res, Eigen::Index m,
                                         Scalar tol) {
  if (!res.ok()) return std::nullopt;
  std::vector<HermitianOperator<Scalar>> effects;
  effects.reserve(m);
  try {
    for (Eigen::Index k = 0; k < m; ++k)
      effects.emplace_back(res.operator_values.at("Pi" + std::to_string(k)));
    return Povm<Scalar>(std::move(effects), tol, tol * Scalar(10));
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

template <typename Scalar>
RealMatrix<Scalar> residuals_vs_povm(const RealMatrix<Scalar>& freqs,
                                     const StateEnsemble<Scalar>& states, const Povm<Scalar>& povm) {
  RealMatrix<Scalar> r(freqs.rows(), freqs.cols());
  for (Eigen::Index j = 0; j < freqs.rows(); ++j)
    for (Eigen::Index k = 0; k < freqs.cols(); ++k)
      r(j, k) = freqs(j, k) - (states.state(j).matrix() * povm.effect(k).matrix()).trace().real();
  return r;
}

}  // namespace detail

/// Pseudo-inverse reconstruction of each effect from Tr(rho_j Pi_k) = f_jk.
/// Exact when the frequencies are exact Born probabilities of some operator
/// set; no positivity is enforced, so effects may be non-physical.
template <typename Scalar>
std::vector<HermitianOperator<Scalar>> linear_inversion(const FrequencyTable<Scalar>& freqs,
                                                        const StateEnsemble<Scalar>& states) {
  if (freqs.states() != states.size())
    throw std::invalid_argument("linear_inversion: table/ensemble size mismatch");
  const Eigen::Index d = states.dim();
  const RealMatrix<Scalar> coords = states.coordinate_matrix();
  Eigen::CompleteOrthogonalDecomposition<RealMatrix<Scalar>> cod(coords);
  cod.setThreshold(Scalar(1e-8));
  if (cod.rank() < d * d)
    throw std::invalid_argument("linear_inversion: ensemble is rank deficient");
  std::vector<HermitianOperator<Scalar>> effects;
  effects.reserve(freqs.outcomes());
  for (Eigen::Index k = 0; k < freqs.outcomes(); ++k) {
    const RealVector<Scalar> sol = cod.solve(freqs.frequencies.col(k));
    effects.emplace_back(smat<Scalar>(sol, d));
  }
  return effects;
}

/// Uniform-perturbation fit: minimize delta subject to
/// f_jk - delta <= Tr(rho_j Pi_k) <= f_jk + delta over valid POVMs.
template <typename Scalar>
FitReport<Scalar> fit_single_delta(const FrequencyTable<Scalar>& freqs,
                                   const StateEnsemble<Scalar>& states,
                                   const conic::SolveOptions<Scalar>& options = {},
                                   bool require_ic = true) {
  detail::check_fit_inputs(freqs, states, require_ic);
  const Eigen::Index d = states.dim();
  const Eigen::Index m = freqs.outcomes();

  conic::OperatorProgram<Scalar> prog;
  std::vector<Eigen::Index> effects;
  for (Eigen::Index k = 0; k < m; ++k) effects.push_back(prog.add_psd_variable("Pi" + std::to_string(k), d));
  const auto delta = prog.add_scalar_variable("delta", Scalar(0));
  for (Eigen::Index j = 0; j < states.size(); ++j)
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto& rho = states.state(j).matrix();
      prog.add_constraint({{effects[k], rho}}, {{delta, Scalar(-1)}}, conic::Sense::less_equal,
                          freqs.frequencies(j, k));
      prog.add_constraint({{effects[k], rho}}, {{delta, Scalar(1)}}, conic::Sense::greater_equal,
                          freqs.frequencies(j, k));
    }
  detail::add_completeness_rows(prog, effects, d);
  prog.set_objective({}, {{delta, Scalar(1)}});

  const auto res = conic::solve(prog, options);
  FitReport<Scalar> report;
  report.estimator = "single_delta";
  report.solver_status = res.status;
  report.solver_stats = res.stats;
  report.fitted_povm = detail::extract_povm(res, m, Scalar(10) * options.feas_tol);
  if (!report.fitted_povm) {
    report.solver_status = res.ok() ? conic::SolveStatus::numerical_failure : res.status;
    return report;
  }
  report.delta_star = res.scalar_values.at("delta");
  report.residual_table = detail::residuals_vs_povm(freqs.frequencies, states, *report.fitted_povm);
  return report;
}

/// Per-entry perturbation fit: minimize sum_jk delta_jk with one bracket per
/// table entry. per_state_delta is the per-state mean over outcomes, the
/// diagnostic for localized preparation noise.
template <typename Scalar>
FitReport<Scalar> fit_many_deltas(const FrequencyTable<Scalar>& freqs,
                                  const StateEnsemble<Scalar>& states,
                                  const conic::SolveOptions<Scalar>& options = {},
                                  bool require_ic = true) {
  detail::check_fit_inputs(freqs, states, require_ic);
  const Eigen::Index d = states.dim();
  const Eigen::Index m = freqs.outcomes();
  const Eigen::Index n = states.size();

  conic::OperatorProgram<Scalar> prog;
  std::vector<Eigen::Index> effects;
  for (Eigen::Index k = 0; k < m; ++k) effects.push_back(prog.add_psd_variable("Pi" + std::to_string(k), d));
  std::vector<typename conic::OperatorProgram<Scalar>::ScalarTerm> objective;
  std::vector<std::vector<Eigen::Index>> delta_vars(n, std::vector<Eigen::Index>(m));
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto var = prog.add_scalar_variable(
          "delta" + std::to_string(j) + "_" + std::to_string(k), Scalar(0));
      delta_vars[j][k] = var;
      objective.push_back({var, Scalar(1)});
      const auto& rho = states.state(j).matrix();
      prog.add_constraint({{effects[k], rho}}, {{var, Scalar(-1)}}, conic::Sense::less_equal,
                          freqs.frequencies(j, k));
      prog.add_constraint({{effects[k], rho}}, {{var, Scalar(1)}}, conic::Sense::greater_equal,
                          freqs.frequencies(j, k));
    }
  detail::add_completeness_rows(prog, effects, d);
  prog.set_objective({}, std::move(objective));

  const auto res = conic::solve(prog, options);
  FitReport<Scalar> report;
  report.estimator = "many_deltas";
  report.solver_status = res.status;
  report.solver_stats = res.stats;
  report.fitted_povm = detail::extract_povm(res, m, Scalar(10) * options.feas_tol);
  if (!report.fitted_povm) {
    report.solver_status = res.ok() ? conic::SolveStatus::numerical_failure : res.status;
    return report;
  }
  RealMatrix<Scalar> dm(n, m);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < m; ++k)
      dm(j, k) = res.scalar_values.at("delta" + std::to_string(j) + "_" + std::to_string(k));
  report.delta_matrix = dm;
  report.per_state_delta = dm.rowwise().mean();
  report.objective = res.objective_value;
  report.residual_table = detail::residuals_vs_povm(freqs.frequencies, states, *report.fitted_povm);
  return report;
}

/// Least-squares fit: minimize sum_jk (f_jk - Tr(rho_j Pi_k))^2 over valid
/// POVMs, as a quadratic-objective conic program with one free residual
/// variable per table entry.
template <typename Scalar>
conic::SolveOptions<Scalar> least_squares_options() {
  // The quadratic objective needs a tighter gap than the default 1e-8 so that
  // a zero-residual optimum is reported as ~1e-10 rather than ~1e-8.
  conic::SolveOptions<Scalar> o;
  o.feas_tol = Scalar(1e-9);
  o.opt_tol = Scalar(1e-12);
  return o;
}

template <typename Scalar>
FitReport<Scalar> fit_least_squares(const FrequencyTable<Scalar>& freqs,
                                    const StateEnsemble<Scalar>& states,
                                    const conic::SolveOptions<Scalar>& options = least_squares_options<Scalar>(),
                                    bool require_ic = true) {
  detail::check_fit_inputs(freqs, states, require_ic);
  const Eigen::Index d = states.dim();
  const Eigen::Index m = freqs.outcomes();
  const Eigen::Index n = states.size();

  conic::OperatorProgram<Scalar> prog;
  std::vector<Eigen::Index> effects;
  for (Eigen::Index k = 0; k < m; ++k) effects.push_back(prog.add_psd_variable("Pi" + std::to_string(k), d));
  std::vector<typename conic::OperatorProgram<Scalar>::ScalarTerm> quad;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto r = prog.add_scalar_variable("r" + std::to_string(j) + "_" + std::to_string(k),
                                              std::nullopt);
      quad.push_back({r, Scalar(1)});
      // r_jk + Tr(rho_j Pi_k) = f_jk
      prog.add_constraint({{effects[k], states.state(j).matrix()}}, {{r, Scalar(1)}},
                          conic::Sense::equal, freqs.frequencies(j, k));
    }
  detail::add_completeness_rows(prog, effects, d);
  prog.set_objective({}, {}, std::move(quad));

  const auto res = conic::solve(prog, options);
  FitReport<Scalar> report;
  report.estimator = "least_squares";
  report.solver_status = res.status;
  report.solver_stats = res.stats;
  report.fitted_povm = detail::extract_povm(res, m, Scalar(10) * options.feas_tol);
  if (!report.fitted_povm) {
    report.solver_status = res.ok() ? conic::SolveStatus::numerical_failure : res.status;
    return report;
  }
  report.residual_table = detail::residuals_vs_povm(freqs.frequencies, states, *report.fitted_povm);
  report.objective = report.residual_table.array().square().sum();
  return report;
}

/// State-side fit with a known POVM: minimize delta subject to
/// f_jk - delta <= Tr(rho_j Pi_k) <= f_jk + delta over density matrices.
template <typename Scalar>
FitReport<Scalar> fit_states_qst(const FrequencyTable<Scalar>& freqs, const Povm<Scalar>& povm,
                                 const conic::SolveOptions<Scalar>& options = {},
                                 bool require_ic = true) {
  if (freqs.outcomes() != povm.outcomes())
    throw std::invalid_argument("fit_states_qst: table column count does not match the POVM");
  if (require_ic && !povm.informationally_complete())
    throw std::invalid_argument("fit_states_qst: POVM is not informationally complete");
  const Eigen::Index d = povm.dim();
  const Eigen::Index n = freqs.states();

  conic::OperatorProgram<Scalar> prog;
  std::vector<Eigen::Index> state_vars;
  for (Eigen::Index j = 0; j < n; ++j) state_vars.push_back(prog.add_psd_variable("rho" + std::to_string(j), d));
  const auto delta = prog.add_scalar_variable("delta", Scalar(0));
  for (Eigen::Index j = 0; j < n; ++j) {
    prog.add_constraint({{state_vars[j], ComplexMatrix<Scalar>::Identity(d, d)}}, {},
                        conic::Sense::equal, Scalar(1));
    for (Eigen::Index k = 0; k < freqs.outcomes(); ++k) {
      const auto& eff = povm.effect(k).matrix();
      prog.add_constraint({{state_vars[j], eff}}, {{delta, Scalar(-1)}}, conic::Sense::less_equal,
                          freqs.frequencies(j, k));
      prog.add_constraint({{state_vars[j], eff}}, {{delta, Scalar(1)}}, conic::Sense::greater_equal,
                          freqs.frequencies(j, k));
    }
  }
  prog.set_objective({}, {{delta, Scalar(1)}});

  const auto res = conic::solve(prog, options);
  FitReport<Scalar> report;
  report.estimator = "states_qst";
  report.solver_status = res.status;
  report.solver_stats = res.stats;
  if (!res.ok()) return report;
  try {
    std::vector<DensityMatrix<Scalar>> fitted;
    fitted.reserve(n);
    for (Eigen::Index j = 0; j < n; ++j)
      fitted.emplace_back(HermitianOperator<Scalar>(res.operator_values.at("rho" + std::to_string(j))),
                          Scalar(10) * options.feas_tol);
    report.fitted_states = StateEnsemble<Scalar>(std::move(fitted));
  } catch (const std::invalid_argument&) {
    report.solver_status = conic::SolveStatus::numerical_failure;
    return report;
  }
  report.delta_star = res.scalar_values.at("delta");
  report.residual_table.resize(n, freqs.outcomes());
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < freqs.outcomes(); ++k)
      report.residual_table(j, k) =
          freqs.frequencies(j, k) -
          (report.fitted_states->state(j).matrix() * povm.effect(k).matrix()).trace().real();
  return report;
}

struct MleOptions {
  double stationarity_tol = 1e-7;
  int max_iter = 50000;
  int starts = 1;         // extra starts draw random POVMs
  std::uint64_t seed = 0;
};

namespace detail {

template <typename Scalar>
Scalar negative_log_likelihood(const RealMatrix<Scalar>& freqs, const StateEnsemble<Scalar>& states,
                               const std::vector<ComplexMatrix<Scalar>>& effects) {
  Scalar nll = Scalar(0);
  for (Eigen::Index j = 0; j < freqs.rows(); ++j)
    for (Eigen::Index k = 0; k < freqs.cols(); ++k) {
      const Scalar f = freqs(j, k);
      if (f <= Scalar(0)) continue;  // 0 log(.) = 0 by convention
      const Scalar pr = (states.state(j).matrix() * effects[k]).trace().real();
      if (pr <= Scalar(1e-12)) return std::numeric_limits<Scalar>::infinity();
      nll -= f * std::log(pr);
    }
  return nll;
}

/// One likelihood fixed-point sweep: Pi_k <- L^{-1} R_k Pi_k R_k L^{-1} with
/// R_k = sum_j (f_jk / p_jk) rho_j and L = (sum_k R_k Pi_k R_k)^{1/2}.
/// Positivity and completeness are preserved by construction.
template <typename Scalar>
bool mle_sweep(const RealMatrix<Scalar>& freqs, const StateEnsemble<Scalar>& states,
               const std::vector<ComplexMatrix<Scalar>>& effects,
               std::vector<ComplexMatrix<Scalar>>& next) {
  const Eigen::Index d = states.dim();
  const Eigen::Index m = freqs.cols();
  std::vector<ComplexMatrix<Scalar>> r(m, ComplexMatrix<Scalar>::Zero(d, d));
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index j = 0; j < freqs.rows(); ++j) {
      const Scalar f = freqs(j, k);
      if (f <= Scalar(0)) continue;
      const Scalar pr = (states.state(j).matrix() * effects[k]).trace().real();
      r[k] += (f / std::max(pr, Scalar(1e-300))) * states.state(j).matrix();
    }
  ComplexMatrix<Scalar> msum = ComplexMatrix<Scalar>::Zero(d, d);
  for (Eigen::Index k = 0; k < m; ++k) msum += r[k] * effects[k] * r[k];
  msum = ((msum + msum.adjoint()) / Scalar(2)).eval();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es(msum);
  const Scalar max_eig = es.eigenvalues().maxCoeff();
  if (!(max_eig > Scalar(0)) || es.eigenvalues().minCoeff() < Scalar(1e-14) * max_eig) return false;
  const ComplexMatrix<Scalar> lam_inv_sqrt = es.eigenvectors() *
                                             es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                                             es.eigenvectors().adjoint();
  next.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    next[k] = lam_inv_sqrt * r[k] * effects[k] * r[k] * lam_inv_sqrt;
    next[k] = ((next[k] + next[k].adjoint()) / Scalar(2)).eval();
  }
  return true;
}

template <typename Scalar>
struct MleRun {
  std::vector<ComplexMatrix<Scalar>> effects;
  Scalar nll = std::numeric_limits<Scalar>::infinity();
  bool converged = false;
  int iterations = 0;
};

template <typename Scalar>
MleRun<Scalar> run_mle(const RealMatrix<Scalar>& freqs, const StateEnsemble<Scalar>& states,
                       std::vector<ComplexMatrix<Scalar>> effects, const MleOptions& opts) {
  MleRun<Scalar> run;
  Scalar nll = negative_log_likelihood(freqs, states, effects);
  std::vector<ComplexMatrix<Scalar>> proposal;
  Scalar prev_step = std::numeric_limits<Scalar>::infinity();
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    if (!mle_sweep(freqs, states, effects, proposal)) break;
    Scalar step_size = Scalar(0);
    for (std::size_t k = 0; k < effects.size(); ++k)
      step_size = std::max(step_size, (proposal[k] - effects[k]).norm());
    Scalar next_nll = negative_log_likelihood(freqs, states, proposal);
    if (next_nll > nll + Scalar(1e-12) * std::max(Scalar(1), std::abs(nll))) {
      // Damped safeguard; the plain sweep is not guaranteed monotone.
      Scalar t = Scalar(0.5);
      bool accepted = false;
      for (int halvings = 0; halvings < 20; ++halvings, t /= Scalar(2)) {
        std::vector<ComplexMatrix<Scalar>> damped(effects.size());
        for (std::size_t k = 0; k < effects.size(); ++k)
          damped[k] = (Scalar(1) - t) * effects[k] + t * proposal[k];
        const Scalar damped_nll = negative_log_likelihood(freqs, states, damped);
        if (damped_nll <= nll) {
          proposal = std::move(damped);
          next_nll = damped_nll;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;  // no descent direction left at this scale
    }
    effects = std::move(proposal);
    proposal.clear();
    nll = next_nll;
    // Linear fixed-point convergence: distance to the fixed point is about
    // step * rho / (1 - rho) with contraction rate rho, so the raw step alone
    // underestimates the error when rho is close to 1.
    const Scalar rho = std::min(prev_step > Scalar(0) ? step_size / prev_step : Scalar(0),
                                Scalar(1) - Scalar(1e-6));
    const Scalar error_estimate = step_size * rho / (Scalar(1) - rho);
    prev_step = step_size;
    if (step_size < Scalar(opts.stationarity_tol) &&
        error_estimate < Scalar(opts.stationarity_tol)) {
      run.converged = true;
      ++iter;
      break;
    }
  }
  run.effects = std::move(effects);
  run.nll = nll;
  run.iterations = iter;
  return run;
}

}  // namespace detail

/// Maximum-likelihood fit: minimizes -sum_jk f_jk log Tr(rho_j Pi_k) over
/// valid POVMs by a positivity- and completeness-preserving fixed-point
/// iteration, with optional multi-start. Default start is the maximally mixed
/// POVM Pi_k = I/m.
template <typename Scalar>
FitReport<Scalar> fit_log_mle(const FrequencyTable<Scalar>& freqs, const StateEnsemble<Scalar>& states,
                              const MleOptions& opts = {}, bool require_ic = true) {
  detail::check_fit_inputs(freqs, states, require_ic);
  if ((freqs.frequencies.array() < Scalar(0)).any())
    throw std::invalid_argument("fit_log_mle: frequencies must be nonnegative");
  const Eigen::Index d = states.dim();
  const Eigen::Index m = freqs.outcomes();
  const auto t_start = std::chrono::steady_clock::now();

  detail::MleRun<Scalar> best;
  for (int start = 0; start < std::max(1, opts.starts); ++start) {
    std::vector<ComplexMatrix<Scalar>> init;
    if (start == 0) {
      init.assign(m, ComplexMatrix<Scalar>::Identity(d, d) / Scalar(m));
    } else {
      Rng rng(mix_seed(opts.seed + static_cast<std::uint64_t>(start)));
      const auto povm = random_povm<Scalar>(d, m, rng);
      for (const auto& e : povm.effects()) init.push_back(e.matrix());
    }
    auto run = detail::run_mle<Scalar>(freqs.frequencies, states, std::move(init), opts);
    if (run.nll < best.nll) best = std::move(run);
  }

  FitReport<Scalar> report;
  report.estimator = "log_mle";
  report.solver_stats.solve_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  report.solver_stats.iterations = best.iterations;
  if (best.effects.empty() || !std::isfinite(best.nll)) {
    report.solver_status = conic::SolveStatus::numerical_failure;
    return report;
  }
  report.solver_status =
      best.converged ? conic::SolveStatus::optimal : conic::SolveStatus::near_optimal;
  try {
    std::vector<HermitianOperator<Scalar>> effects;
    for (const auto& e : best.effects) effects.emplace_back(e);
    report.fitted_povm = Povm<Scalar>(std::move(effects), Scalar(1e-10), Scalar(1e-8));
  } catch (const std::invalid_argument&) {
    report.solver_status = conic::SolveStatus::numerical_failure;
    return report;
  }
  report.objective = best.nll;
  report.residual_table = detail::residuals_vs_povm(freqs.frequencies, states, *report.fitted_povm);
  return report;
}

}  // namespace qmt
