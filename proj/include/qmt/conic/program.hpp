#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmt/conic/ipm.hpp"
#include "qmt/hermitian.hpp"

namespace qmt::conic {

enum class Sense { less_equal, equal, greater_equal };

/// Operator-valued convex program: Hermitian PSD matrix variables, scalar
/// variables with optional lower bounds, linear trace constraints and a linear
/// (optionally diagonally quadratic) objective. This is the single abstraction
/// point over the numerical solver.
template <typename Scalar>
class OperatorProgram {
 public:
  struct OperatorTerm {
    Eigen::Index var;             // PSD variable index
    ComplexMatrix<Scalar> coeff;  // Hermitian F, contributes Tr(F X)
  };
  struct ScalarTerm {
    Eigen::Index var;
    Scalar coeff;
  };
  struct Constraint {
    std::vector<OperatorTerm> operator_terms;
    std::vector<ScalarTerm> scalar_terms;
    Sense sense = Sense::equal;
    Scalar rhs = Scalar(0);
  };

  Eigen::Index add_psd_variable(std::string name, Eigen::Index dim) {
    if (dim < 1) throw std::invalid_argument("add_psd_variable: dim must be positive");
    psd_names_.push_back(std::move(name));
    psd_dims_.push_back(dim);
    return static_cast<Eigen::Index>(psd_dims_.size()) - 1;
  }

  /// A scalar variable; pass a lower bound (e.g. 0) or std::nullopt for free.
  Eigen::Index add_scalar_variable(std::string name, std::optional<Scalar> lower_bound) {
    scalar_names_.push_back(std::move(name));
    scalar_lb_.push_back(lower_bound);
    return static_cast<Eigen::Index>(scalar_lb_.size()) - 1;
  }

  void add_constraint(Constraint cons) {
    for (auto& t : cons.operator_terms) {
      check_psd_index(t.var);
      validate_coefficient(t.var, t.coeff);
      t.coeff = ((t.coeff + t.coeff.adjoint()) / Scalar(2)).eval();
    }
    for (const auto& t : cons.scalar_terms) check_scalar_index(t.var);
    constraints_.push_back(std::move(cons));
  }

  /// Convenience: sum of Tr(F_i X_i) + sum c_j t_j  (sense)  rhs.
  void add_constraint(std::vector<OperatorTerm> ops, std::vector<ScalarTerm> scalars, Sense sense,
                      Scalar rhs) {
    add_constraint(Constraint{std::move(ops), std::move(scalars), sense, rhs});
  }

  void set_objective(std::vector<OperatorTerm> ops, std::vector<ScalarTerm> linear,
                     std::vector<ScalarTerm> quadratic = {}) {
    for (auto& t : ops) {
      check_psd_index(t.var);
      validate_coefficient(t.var, t.coeff);
      t.coeff = ((t.coeff + t.coeff.adjoint()) / Scalar(2)).eval();
    }
    for (const auto& t : linear) check_scalar_index(t.var);
    for (const auto& t : quadratic) {
      check_scalar_index(t.var);
      if (t.coeff < Scalar(0))
        throw std::invalid_argument("set_objective: quadratic weights must be nonnegative");
    }
    obj_ops_ = std::move(ops);
    obj_linear_ = std::move(linear);
    obj_quadratic_ = std::move(quadratic);
  }

  Eigen::Index psd_count() const { return static_cast<Eigen::Index>(psd_dims_.size()); }
  Eigen::Index scalar_count() const { return static_cast<Eigen::Index>(scalar_lb_.size()); }
  Eigen::Index psd_dim(Eigen::Index i) const { return psd_dims_.at(i); }
  const std::string& psd_name(Eigen::Index i) const { return psd_names_.at(i); }
  const std::string& scalar_name(Eigen::Index i) const { return scalar_names_.at(i); }

  Eigen::Index psd_offset(Eigen::Index i) const {
    Eigen::Index off = 0;
    for (Eigen::Index k = 0; k < i; ++k) off += psd_dims_[k] * psd_dims_[k];
    return off;
  }

  Eigen::Index scalar_offset(Eigen::Index i) const { return psd_offset(psd_count()) + i; }

  Eigen::Index num_vars() const { return psd_offset(psd_count()) + scalar_count(); }

  /// Lowers to the standard cone form consumed by the interior-point solver.
  ConeProblem<Scalar> lower() const {
    ConeProblem<Scalar> cp;
    cp.num_vars = num_vars();
    cp.cost = RealVector<Scalar>::Zero(cp.num_vars);
    for (const auto& t : obj_ops_)
      cp.cost.segment(psd_offset(t.var), psd_dims_[t.var] * psd_dims_[t.var]) += svec(t.coeff);
    for (const auto& t : obj_linear_) cp.cost[scalar_offset(t.var)] += t.coeff;
    if (!obj_quadratic_.empty()) {
      cp.quad_diag = RealVector<Scalar>::Zero(cp.num_vars);
      for (const auto& t : obj_quadratic_) cp.quad_diag[scalar_offset(t.var)] += Scalar(2) * t.coeff;
    }
    for (Eigen::Index i = 0; i < psd_count(); ++i)
      cp.psd_blocks.push_back({psd_offset(i), psd_dims_[i]});

    std::vector<Scalar> eq_rhs, ineq_rhs;
    for (const auto& cons : constraints_) {
      typename ConeProblem<Scalar>::SparseRow row;
      for (const auto& t : cons.operator_terms) {
        const RealVector<Scalar> v = svec(t.coeff);
        const Eigen::Index off = psd_offset(t.var);
        for (Eigen::Index k = 0; k < v.size(); ++k)
          if (v[k] != Scalar(0)) row.emplace_back(off + k, v[k]);
      }
      for (const auto& t : cons.scalar_terms)
        if (t.coeff != Scalar(0)) row.emplace_back(scalar_offset(t.var), t.coeff);
      switch (cons.sense) {
        case Sense::equal:
          cp.eq_rows.push_back(std::move(row));
          eq_rhs.push_back(cons.rhs);
          break;
        case Sense::less_equal:
          cp.ineq_rows.push_back(std::move(row));
          ineq_rhs.push_back(cons.rhs);
          break;
        case Sense::greater_equal: {
          for (auto& [idx, val] : row) val = -val;
          cp.ineq_rows.push_back(std::move(row));
          ineq_rhs.push_back(-cons.rhs);
          break;
        }
      }
    }
    for (Eigen::Index i = 0; i < scalar_count(); ++i) {
      if (!scalar_lb_[i]) continue;
      typename ConeProblem<Scalar>::SparseRow row{{scalar_offset(i), Scalar(-1)}};
      cp.ineq_rows.push_back(std::move(row));
      ineq_rhs.push_back(-*scalar_lb_[i]);
    }
    cp.eq_rhs = Eigen::Map<const RealVector<Scalar>>(eq_rhs.data(), static_cast<Eigen::Index>(eq_rhs.size()));
    cp.ineq_rhs =
        Eigen::Map<const RealVector<Scalar>>(ineq_rhs.data(), static_cast<Eigen::Index>(ineq_rhs.size()));
    return cp;
  }

  const std::vector<Constraint>& constraints() const { return constraints_; }

  /// Sparse-triplet text dump of the lowered problem, for external
  /// cross-checking. One record per line; see README for the format.
  void dump(std::ostream& os) const {
    const ConeProblem<Scalar> cp = lower();
    os << "CONEPROBLEM v1\n";
    os << "DIMS nvars " << cp.num_vars << " eq " << cp.eq_rows.size() << " ineq "
       << cp.ineq_rows.size() << "\n";
    for (Eigen::Index i = 0; i < psd_count(); ++i)
      os << "PSDVAR " << i << " " << psd_names_[i] << " dim " << psd_dims_[i] << " offset "
         << psd_offset(i) << "\n";
    for (Eigen::Index i = 0; i < scalar_count(); ++i) {
      os << "SCALARVAR " << i << " " << scalar_names_[i] << " offset " << scalar_offset(i);
      if (scalar_lb_[i])
        os << " lb " << *scalar_lb_[i] << "\n";
      else
        os << " free\n";
    }
    for (Eigen::Index k = 0; k < cp.cost.size(); ++k)
      if (cp.cost[k] != Scalar(0)) os << "OBJ " << k << " " << cp.cost[k] << "\n";
    if (cp.quad_diag.size() > 0)
      for (Eigen::Index k = 0; k < cp.quad_diag.size(); ++k)
        if (cp.quad_diag[k] != Scalar(0)) os << "OBJQ " << k << " " << cp.quad_diag[k] << "\n";
    for (std::size_t r = 0; r < cp.eq_rows.size(); ++r) {
      for (const auto& [idx, val] : cp.eq_rows[r]) os << "EQ " << r << " " << idx << " " << val << "\n";
      os << "EQRHS " << r << " " << cp.eq_rhs[static_cast<Eigen::Index>(r)] << "\n";
    }
    for (std::size_t r = 0; r < cp.ineq_rows.size(); ++r) {
      for (const auto& [idx, val] : cp.ineq_rows[r]) os << "LE " << r << " " << idx << " " << val << "\n";
      os << "LERHS " << r << " " << cp.ineq_rhs[static_cast<Eigen::Index>(r)] << "\n";
    }
  }

 private:
  void check_psd_index(Eigen::Index i) const {
    if (i < 0 || i >= psd_count()) throw std::invalid_argument("OperatorProgram: bad PSD variable index");
  }
  void check_scalar_index(Eigen::Index i) const {
    if (i < 0 || i >= scalar_count())
      throw std::invalid_argument("OperatorProgram: bad scalar variable index");
  }
  void validate_coefficient(Eigen::Index var, const ComplexMatrix<Scalar>& f) const {
    if (f.rows() != psd_dims_[var] || f.cols() != psd_dims_[var])
      throw std::invalid_argument("OperatorProgram: coefficient dimension mismatch");
    const Scalar scale = std::max(Scalar(1), f.cwiseAbs().maxCoeff());
    if ((f - f.adjoint()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale)
      throw std::invalid_argument("OperatorProgram: coefficient is not Hermitian");
  }

  std::vector<std::string> psd_names_;
  std::vector<Eigen::Index> psd_dims_;
  std::vector<std::string> scalar_names_;
  std::vector<std::optional<Scalar>> scalar_lb_;
  std::vector<Constraint> constraints_;
  std::vector<OperatorTerm> obj_ops_;
  std::vector<ScalarTerm> obj_linear_;
  std::vector<ScalarTerm> obj_quadratic_;
};

template <typename Scalar>
struct SolverStats {
  int iterations = 0;
  double solve_time_seconds = 0.0;
  Scalar primal_objective = Scalar(0);
  Scalar dual_objective = Scalar(0);
  Scalar duality_gap = Scalar(0);
  Scalar primal_residual = Scalar(0);
  Scalar dual_residual = Scalar(0);
  // Post-hoc feasibility, recomputed from the returned variable values
  // independently of the solver's own report.
  Scalar min_psd_eigenvalue = Scalar(0);
  Scalar max_equality_residual = Scalar(0);
  Scalar max_inequality_violation = Scalar(0);
  bool weak_duality_ok = true;
};

template <typename Scalar>
struct SolveResult {
  SolveStatus status = SolveStatus::numerical_failure;
  Scalar objective_value = Scalar(0);
  std::map<std::string, ComplexMatrix<Scalar>> operator_values;
  std::map<std::string, Scalar> scalar_values;
  SolverStats<Scalar> stats;

  bool ok() const { return status == SolveStatus::optimal || status == SolveStatus::near_optimal; }
};

/// Solves the program and re-verifies feasibility of the returned solution.
template <typename Scalar>
SolveResult<Scalar> solve(const OperatorProgram<Scalar>& program,
                          const SolveOptions<Scalar>& options = {}) {
  const ConeProblem<Scalar> cp = program.lower();
  const IpmResult<Scalar> ipm = solve_cone_problem(cp, options);

  SolveResult<Scalar> out;
  out.status = ipm.status;
  out.stats.iterations = ipm.iterations;
  out.stats.solve_time_seconds = ipm.solve_time_seconds;
  out.stats.primal_objective = ipm.primal_objective;
  out.stats.dual_objective = ipm.dual_objective;
  out.stats.duality_gap = ipm.duality_gap;
  out.stats.primal_residual = ipm.primal_residual;
  out.stats.dual_residual = ipm.dual_residual;
  out.objective_value = ipm.primal_objective;
  if (ipm.x.size() != cp.num_vars) return out;

  for (Eigen::Index i = 0; i < program.psd_count(); ++i) {
    const Eigen::Index d = program.psd_dim(i);
    out.operator_values[program.psd_name(i)] =
        smat<Scalar>(ipm.x.segment(program.psd_offset(i), d * d), d);
  }
  for (Eigen::Index i = 0; i < program.scalar_count(); ++i)
    out.scalar_values[program.scalar_name(i)] = ipm.x[program.scalar_offset(i)];

  // Post-hoc verification on the extracted values.
  Scalar min_eig = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index i = 0; i < program.psd_count(); ++i) {
    const auto& m = out.operator_values.at(program.psd_name(i));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es(m, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  if (program.psd_count() == 0) min_eig = Scalar(0);
  Scalar max_eq = Scalar(0), max_ineq = Scalar(0);
  for (std::size_t r = 0; r < cp.eq_rows.size(); ++r) {
    Scalar acc = -cp.eq_rhs[static_cast<Eigen::Index>(r)];
    for (const auto& [idx, val] : cp.eq_rows[r]) acc += val * ipm.x[idx];
    max_eq = std::max(max_eq, std::abs(acc));
  }
  for (std::size_t r = 0; r < cp.ineq_rows.size(); ++r) {
    Scalar acc = -cp.ineq_rhs[static_cast<Eigen::Index>(r)];
    for (const auto& [idx, val] : cp.ineq_rows[r]) acc += val * ipm.x[idx];
    max_ineq = std::max(max_ineq, acc);
  }
  out.stats.min_psd_eigenvalue = min_eig;
  out.stats.max_equality_residual = max_eq;
  out.stats.max_inequality_violation = max_ineq;
  out.stats.weak_duality_ok =
      out.stats.primal_objective >= out.stats.dual_objective - options.opt_tol;

  if (out.status == SolveStatus::optimal) {
    const Scalar worst = std::max({-min_eig, max_eq, max_ineq});
    if (worst > Scalar(1000) * options.feas_tol)
      out.status = SolveStatus::numerical_failure;
    else if (worst > Scalar(10) * options.feas_tol)
      out.status = SolveStatus::near_optimal;
  }
  return out;
}

}  // namespace qmt::conic
