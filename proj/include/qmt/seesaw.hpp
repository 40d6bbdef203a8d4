#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qmt/estimators.hpp"

namespace qmt {

enum class SeesawSide { qmt, qst };

inline const char* to_string(SeesawSide s) { return s == SeesawSide::qmt ? "QMT" : "QST"; }

template <typename Scalar>
struct SeesawStep {
  int index = 0;
  SeesawSide side = SeesawSide::qmt;
  Scalar delta = Scalar(0);
  double solve_time_seconds = 0.0;
};

/// Full record of one see-saw run. Steps strictly alternate starting with the
/// measurement side; the delta sequence is non-increasing up to solver
/// tolerance. final_states/final_povm are the most recent iterates of each
/// side (the initial guess counts as the first state set).
template <typename Scalar>
struct SeesawTrace {
  std::vector<SeesawStep<Scalar>> steps;
  std::optional<StateEnsemble<Scalar>> final_states;
  std::optional<Povm<Scalar>> final_povm;
  bool converged = false;
  Scalar nu_delta = Scalar(0);

  Scalar initial_delta() const { return steps.empty() ? Scalar(0) : steps.front().delta; }
  Scalar final_delta() const { return steps.empty() ? Scalar(0) : steps.back().delta; }
};

/// Alternates the measurement-side and state-side fits on a fixed frequency
/// table until |delta_s - delta_{s-1}| < nu_delta or max_steps. The initial
/// state set is the best guess about the real preparation; it must be
/// informationally complete, and the table must have at least d^2 outcomes so
/// the state-side problem is well posed.
template <typename Scalar>
SeesawTrace<Scalar> run_seesaw(const FrequencyTable<Scalar>& freqs,
                               const StateEnsemble<Scalar>& initial_states,
                               Scalar nu_delta = Scalar(1e-7), int max_steps = 200,
                               const conic::SolveOptions<Scalar>& options = {}) {
  if (!initial_states.informationally_complete())
    throw std::invalid_argument("run_seesaw: initial states are not informationally complete");
  const Eigen::Index d = initial_states.dim();
  if (freqs.outcomes() < d * d)
    throw std::invalid_argument("run_seesaw: POVM cannot be informationally complete (m < d^2)");
  if (max_steps < 1) throw std::invalid_argument("run_seesaw: max_steps must be >= 1");

  SeesawTrace<Scalar> trace;
  trace.nu_delta = nu_delta;
  trace.final_states = initial_states;

  Scalar prev_delta = Scalar(0);
  for (int s = 0; s < max_steps; ++s) {
    const bool measurement_side = (s % 2 == 0);
    Scalar delta;
    double elapsed;
    if (measurement_side) {
      const auto report = fit_single_delta(freqs, *trace.final_states, options);
      if (!report.ok() || !report.delta_star) return trace;  // converged stays false
      trace.final_povm = report.fitted_povm;
      delta = *report.delta_star;
      elapsed = report.solver_stats.solve_time_seconds;
    } else {
      FitReport<Scalar> report;
      try {
        report = fit_states_qst(freqs, *trace.final_povm, options);
      } catch (const std::invalid_argument&) {
        return trace;  // fitted POVM degenerated below the IC rank
      }
      if (!report.ok() || !report.delta_star) return trace;
      trace.final_states = report.fitted_states;
      delta = *report.delta_star;
      elapsed = report.solver_stats.solve_time_seconds;
    }
    trace.steps.push_back({s, measurement_side ? SeesawSide::qmt : SeesawSide::qst, delta, elapsed});
    if (s > 0 && std::abs(delta - prev_delta) < nu_delta) {
      trace.converged = true;
      return trace;
    }
    prev_delta = delta;
  }
  return trace;
}

template <typename Scalar>
struct SeesawSummary {
  int total_steps = 0;
  Scalar delta_initial = Scalar(0);
  Scalar delta_final = Scalar(0);
  Scalar improvement_factor = Scalar(1);  // delta_initial / delta_final
  bool converged = false;
  std::vector<Scalar> delta_curve;
};

template <typename Scalar>
SeesawSummary<Scalar> seesaw_report(const SeesawTrace<Scalar>& trace) {
  if (trace.steps.empty()) throw std::invalid_argument("seesaw_report: empty trace");
  SeesawSummary<Scalar> s;
  s.total_steps = static_cast<int>(trace.steps.size());
  s.delta_initial = trace.initial_delta();
  s.delta_final = trace.final_delta();
  s.improvement_factor = s.delta_final > Scalar(0)
                             ? s.delta_initial / s.delta_final
                             : std::numeric_limits<Scalar>::infinity();
  s.converged = trace.converged;
  for (const auto& step : trace.steps) s.delta_curve.push_back(step.delta);
  return s;
}

}  // namespace qmt
