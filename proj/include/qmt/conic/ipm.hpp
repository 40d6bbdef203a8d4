#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qmt/hermitian.hpp"

namespace qmt::conic {

enum class SolveStatus { optimal, near_optimal, infeasible, numerical_failure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal:
      return "optimal";
    case SolveStatus::near_optimal:
      return "near_optimal";
    case SolveStatus::infeasible:
      return "infeasible";
    case SolveStatus::numerical_failure:
      return "numerical_failure";
  }
  return "unknown";
}

template <typename Scalar>
struct SolveOptions {
  Scalar feas_tol = Scalar(1e-8);
  Scalar opt_tol = Scalar(1e-8);
  int max_iter = 100;
  int refinement = 1;
};

/// Lowered standard form
///   minimize    (1/2) x' diag(quad_diag) x + cost' x
///   subject to  eq_rows . x  = eq_rhs
///               ineq_rows . x + u = ineq_rhs,  u >= 0
///               smat(x[offset : offset + d^2]) >= 0   for each PSD block.
/// Each PSD block owns a disjoint contiguous run of svec coordinates of x.
template <typename Scalar>
struct ConeProblem {
  using SparseRow = std::vector<std::pair<Eigen::Index, Scalar>>;

  struct PsdBlock {
    Eigen::Index offset = 0;
    Eigen::Index dim = 0;
  };

  Eigen::Index num_vars = 0;
  RealVector<Scalar> cost;
  RealVector<Scalar> quad_diag;  // empty means zero
  std::vector<SparseRow> eq_rows;
  RealVector<Scalar> eq_rhs;
  std::vector<SparseRow> ineq_rows;
  RealVector<Scalar> ineq_rhs;
  std::vector<PsdBlock> psd_blocks;

  Eigen::Index cone_dim() const {
    Eigen::Index s = static_cast<Eigen::Index>(ineq_rows.size());
    for (const auto& b : psd_blocks) s += b.dim * b.dim;
    return s;
  }

  /// Rank degree of the cone; drives the centering parameter.
  Scalar cone_degree() const {
    Scalar nu = static_cast<Scalar>(ineq_rows.size());
    for (const auto& b : psd_blocks) nu += static_cast<Scalar>(b.dim);
    return nu;
  }
};

template <typename Scalar>
struct IpmResult {
  SolveStatus status = SolveStatus::numerical_failure;
  RealVector<Scalar> x;
  RealVector<Scalar> y;
  RealVector<Scalar> z;
  RealVector<Scalar> s;
  Scalar primal_objective = Scalar(0);
  Scalar dual_objective = Scalar(0);
  Scalar duality_gap = Scalar(0);
  Scalar primal_residual = Scalar(0);
  Scalar dual_residual = Scalar(0);
  int iterations = 0;
  double solve_time_seconds = 0.0;
};

namespace detail {

template <typename Scalar>
struct ConeOps {
  const ConeProblem<Scalar>& prob;
  Eigen::Index l;  // orthant size

  explicit ConeOps(const ConeProblem<Scalar>& p)
      : prob(p), l(static_cast<Eigen::Index>(p.ineq_rows.size())) {}

  // G x: orthant rows, then -x over each PSD block's coordinates.
  RealVector<Scalar> apply_G(const RealVector<Scalar>& x) const {
    RealVector<Scalar> out(prob.cone_dim());
    for (Eigen::Index r = 0; r < l; ++r) {
      Scalar acc = Scalar(0);
      for (const auto& [idx, val] : prob.ineq_rows[r]) acc += val * x[idx];
      out[r] = acc;
    }
    Eigen::Index off = l;
    for (const auto& b : prob.psd_blocks) {
      out.segment(off, b.dim * b.dim) = -x.segment(b.offset, b.dim * b.dim);
      off += b.dim * b.dim;
    }
    return out;
  }

  RealVector<Scalar> apply_Gt(const RealVector<Scalar>& v) const {
    RealVector<Scalar> out = RealVector<Scalar>::Zero(prob.num_vars);
    for (Eigen::Index r = 0; r < l; ++r)
      for (const auto& [idx, val] : prob.ineq_rows[r]) out[idx] += val * v[r];
    Eigen::Index off = l;
    for (const auto& b : prob.psd_blocks) {
      out.segment(b.offset, b.dim * b.dim) -= v.segment(off, b.dim * b.dim);
      off += b.dim * b.dim;
    }
    return out;
  }

  RealVector<Scalar> apply_A(const RealVector<Scalar>& x) const {
    RealVector<Scalar> out(static_cast<Eigen::Index>(prob.eq_rows.size()));
    for (std::size_t r = 0; r < prob.eq_rows.size(); ++r) {
      Scalar acc = Scalar(0);
      for (const auto& [idx, val] : prob.eq_rows[r]) acc += val * x[idx];
      out[static_cast<Eigen::Index>(r)] = acc;
    }
    return out;
  }

  RealVector<Scalar> apply_At(const RealVector<Scalar>& y) const {
    RealVector<Scalar> out = RealVector<Scalar>::Zero(prob.num_vars);
    for (std::size_t r = 0; r < prob.eq_rows.size(); ++r)
      for (const auto& [idx, val] : prob.eq_rows[r]) out[idx] += val * y[static_cast<Eigen::Index>(r)];
    return out;
  }

  RealVector<Scalar> h_vector() const {
    RealVector<Scalar> h = RealVector<Scalar>::Zero(prob.cone_dim());
    h.head(l) = prob.ineq_rhs;
    return h;
  }
};

/// Nesterov-Todd scaling: diagonal w on the orthant; per Hermitian PSD block a
/// factor R with scaled point lambda = R^{-1} S R^{-H} = R^H Z R (diagonal).
template <typename Scalar>
struct Scaling {
  RealVector<Scalar> w;
  RealVector<Scalar> lam_orth;
  struct Block {
    ComplexMatrix<Scalar> R, Rinv;
    ComplexMatrix<Scalar> Wm, Wm_inv;  // R R^H and its inverse
    RealVector<Scalar> lam;
  };
  std::vector<Block> blocks;
};

template <typename Scalar>
ComplexMatrix<Scalar> psd_cholesky(const ComplexMatrix<Scalar>& m) {
  Eigen::LLT<ComplexMatrix<Scalar>> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Clamp tiny/negative eigenvalues and retry; keeps late iterations alive.
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es(m);
  const Scalar floor_val = std::max(Scalar(1e-14), Scalar(1e-14) * es.eigenvalues().maxCoeff());
  RealVector<Scalar> ev = es.eigenvalues().cwiseMax(floor_val);
  ComplexMatrix<Scalar> fixed = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  Eigen::LLT<ComplexMatrix<Scalar>> llt2(fixed);
  if (llt2.info() != Eigen::Success) throw std::runtime_error("ipm: cone block factorization failed");
  return llt2.matrixL();
}

template <typename Scalar>
Scaling<Scalar> compute_scaling(const ConeOps<Scalar>& ops, const RealVector<Scalar>& s,
                                const RealVector<Scalar>& z) {
  Scaling<Scalar> sc;
  const Eigen::Index l = ops.l;
  sc.w.resize(l);
  sc.lam_orth.resize(l);
  for (Eigen::Index i = 0; i < l; ++i) {
    sc.w[i] = std::sqrt(s[i] / z[i]);
    sc.lam_orth[i] = std::sqrt(s[i] * z[i]);
  }
  Eigen::Index off = l;
  for (const auto& blk : ops.prob.psd_blocks) {
    const Eigen::Index d = blk.dim;
    const ComplexMatrix<Scalar> S = smat<Scalar>(s.segment(off, d * d), d);
    const ComplexMatrix<Scalar> Z = smat<Scalar>(z.segment(off, d * d), d);
    const ComplexMatrix<Scalar> Ls = psd_cholesky(S);
    const ComplexMatrix<Scalar> Lz = psd_cholesky(Z);
    Eigen::JacobiSVD<ComplexMatrix<Scalar>> svd(Lz.adjoint() * Ls,
                                                Eigen::ComputeFullU | Eigen::ComputeFullV);
    typename Scaling<Scalar>::Block b;
    b.lam = svd.singularValues();
    const RealVector<Scalar> inv_sqrt = b.lam.cwiseSqrt().cwiseInverse();
    b.R = Ls * svd.matrixV() * inv_sqrt.asDiagonal();
    b.Rinv = inv_sqrt.asDiagonal() * svd.matrixU().adjoint() * Lz.adjoint();
    b.Wm = b.R * b.R.adjoint();
    b.Wm_inv = b.Rinv.adjoint() * b.Rinv;
    sc.blocks.push_back(std::move(b));
    off += d * d;
  }
  return sc;
}

/// Largest step t with lambda + t * dir inside the cone; directions are given
/// in the NT-scaled frame.
template <typename Scalar>
Scalar max_step_scaled(const Scaling<Scalar>& sc, const RealVector<Scalar>& dir_orth,
                       const std::vector<ComplexMatrix<Scalar>>& dir_blocks) {
  Scalar bound = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index i = 0; i < dir_orth.size(); ++i)
    if (dir_orth[i] < Scalar(0)) bound = std::min(bound, -sc.lam_orth[i] / dir_orth[i]);
  for (std::size_t b = 0; b < sc.blocks.size(); ++b) {
    const auto& lam = sc.blocks[b].lam;
    const RealVector<Scalar> inv_sqrt = lam.cwiseSqrt().cwiseInverse();
    const ComplexMatrix<Scalar> m = inv_sqrt.asDiagonal() * dir_blocks[b] * inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es(m, Eigen::EigenvaluesOnly);
    const Scalar mn = es.eigenvalues().minCoeff();
    if (mn < Scalar(0)) bound = std::min(bound, -Scalar(1) / mn);
  }
  return bound;
}

/// Mehrotra right-hand side lambda \ (sigma mu e - lambda o lambda - cross),
/// kept in the scaled frame (orthant entries + block matrices).
template <typename Scalar>
struct ScaledRhs {
  RealVector<Scalar> orth;
  std::vector<ComplexMatrix<Scalar>> blocks;
};

}  // namespace detail

/// Primal-dual path-following interior-point solver with Nesterov-Todd scaling
/// and Mehrotra predictor-corrector steps. Deterministic for fixed inputs.
template <typename Scalar>
IpmResult<Scalar> solve_cone_problem(const ConeProblem<Scalar>& prob,
                                     const SolveOptions<Scalar>& opts = {}) {
  using Vec = RealVector<Scalar>;
  using Mat = RealMatrix<Scalar>;
  using CMat = ComplexMatrix<Scalar>;
  const auto t_start = std::chrono::steady_clock::now();

  detail::ConeOps<Scalar> ops(prob);
  const Eigen::Index n = prob.num_vars;
  const Eigen::Index p = static_cast<Eigen::Index>(prob.eq_rows.size());
  const Eigen::Index l = ops.l;
  const Eigen::Index cd = prob.cone_dim();
  const Scalar nu = prob.cone_degree();
  if (cd == 0) throw std::invalid_argument("ipm: problem has no cone constraints");
  if (prob.cost.size() != n) throw std::invalid_argument("ipm: cost size mismatch");

  const Vec h = ops.h_vector();
  const Vec& c = prob.cost;
  const bool has_quad = prob.quad_diag.size() > 0;
  auto apply_P = [&](const Vec& x) -> Vec {
    if (!has_quad) return Vec::Zero(n);
    return prob.quad_diag.cwiseProduct(x);
  };

  IpmResult<Scalar> res;
  res.x = Vec::Zero(n);
  res.y = Vec::Zero(p);

  Eigen::LLT<Mat> H_llt;
  Mat H_inv_At;
  Eigen::LLT<Mat> schur_llt;

  auto factorize = [&](const detail::Scaling<Scalar>& sc) {
    Mat H = Mat::Zero(n, n);
    if (has_quad) H.diagonal() = prob.quad_diag;
    for (Eigen::Index r = 0; r < l; ++r) {
      const Scalar wi2 = Scalar(1) / (sc.w[r] * sc.w[r]);
      for (const auto& [i1, v1] : prob.ineq_rows[r])
        for (const auto& [i2, v2] : prob.ineq_rows[r]) H(i1, i2) += wi2 * v1 * v2;
    }
    for (std::size_t b = 0; b < prob.psd_blocks.size(); ++b) {
      const auto& blk = prob.psd_blocks[b];
      const Eigen::Index d = blk.dim;
      const CMat& Wi = sc.blocks[b].Wm_inv;
      for (Eigen::Index t = 0; t < d * d; ++t) {
        Vec e = Vec::Zero(d * d);
        e[t] = Scalar(1);
        const CMat Et = smat<Scalar>(e, d);
        H.col(blk.offset + t).segment(blk.offset, d * d) += svec<Scalar>((Wi * Et * Wi).eval());
      }
    }
    Scalar ridge = Scalar(0);
    const Scalar base = std::max(Scalar(1), H.trace() / Scalar(n));
    for (int attempt = 0;; ++attempt) {
      Mat Hr = H;
      if (ridge > Scalar(0)) Hr.diagonal().array() += ridge;
      H_llt.compute(Hr);
      if (H_llt.info() == Eigen::Success) break;
      if (attempt >= 4) throw std::runtime_error("ipm: KKT factorization failed");
      ridge = (ridge == Scalar(0)) ? Scalar(1e-14) * base : ridge * Scalar(100);
    }
    if (p > 0) {
      Mat At(n, p);
      At.setZero();
      for (Eigen::Index r = 0; r < p; ++r)
        for (const auto& [idx, val] : prob.eq_rows[r]) At(idx, r) = val;
      H_inv_At = H_llt.solve(At);
      Mat schur = At.transpose() * H_inv_At;
      Scalar sridge = Scalar(0);
      const Scalar sbase = std::max(Scalar(1), schur.trace() / Scalar(p));
      for (int attempt = 0;; ++attempt) {
        Mat Sr = schur;
        if (sridge > Scalar(0)) Sr.diagonal().array() += sridge;
        schur_llt.compute(Sr);
        if (schur_llt.info() == Eigen::Success) break;
        if (attempt >= 4) throw std::runtime_error("ipm: Schur factorization failed");
        sridge = (sridge == Scalar(0)) ? Scalar(1e-14) * sbase : sridge * Scalar(100);
      }
    }
  };

  auto apply_WtW_inv = [&](const detail::Scaling<Scalar>& sc, const Vec& v) -> Vec {
    Vec out(cd);
    for (Eigen::Index i = 0; i < l; ++i) out[i] = v[i] / (sc.w[i] * sc.w[i]);
    Eigen::Index off = l;
    for (std::size_t b = 0; b < prob.psd_blocks.size(); ++b) {
      const Eigen::Index d = prob.psd_blocks[b].dim;
      const CMat V = smat<Scalar>(v.segment(off, d * d), d);
      out.segment(off, d * d) =
          svec<Scalar>((sc.blocks[b].Wm_inv * V * sc.blocks[b].Wm_inv).eval());
      off += d * d;
    }
    return out;
  };

  auto apply_WtW = [&](const detail::Scaling<Scalar>& sc, const Vec& v) -> Vec {
    Vec out(cd);
    for (Eigen::Index i = 0; i < l; ++i) out[i] = v[i] * sc.w[i] * sc.w[i];
    Eigen::Index off = l;
    for (std::size_t b = 0; b < prob.psd_blocks.size(); ++b) {
      const Eigen::Index d = prob.psd_blocks[b].dim;
      const CMat V = smat<Scalar>(v.segment(off, d * d), d);
      out.segment(off, d * d) = svec<Scalar>((sc.blocks[b].Wm * V * sc.blocks[b].Wm).eval());
      off += d * d;
    }
    return out;
  };

  // Reduced Newton system:
  //   P dx + A' dy + G' dz = bx,  A dx = by,  G dx - W'W dz = bG.
  auto solve_kkt_once = [&](const detail::Scaling<Scalar>& sc, const Vec& bx, const Vec& by,
                            const Vec& bG, Vec& dx, Vec& dy, Vec& dz) {
    const Vec r1 = bx + ops.apply_Gt(apply_WtW_inv(sc, bG));
    if (p > 0) {
      const Vec hr1 = H_llt.solve(r1);
      const Vec rhs_y = ops.apply_A(hr1) - by;
      dy = schur_llt.solve(rhs_y);
      dx = hr1 - H_inv_At * dy;
    } else {
      dy.resize(0);
      dx = H_llt.solve(r1);
    }
    dz = apply_WtW_inv(sc, ops.apply_G(dx) - bG);
  };

  auto solve_kkt = [&](const detail::Scaling<Scalar>& sc, const Vec& bx, const Vec& by,
                       const Vec& bG, Vec& dx, Vec& dy, Vec& dz) {
    solve_kkt_once(sc, bx, by, bG, dx, dy, dz);
    for (int it = 0; it < opts.refinement; ++it) {
      const Vec ex = bx - (apply_P(dx) + ops.apply_At(dy) + ops.apply_Gt(dz));
      const Vec ey = by - ops.apply_A(dx);
      const Vec eG = bG - (ops.apply_G(dx) - apply_WtW(sc, dz));
      Vec cx, cy, cz;
      solve_kkt_once(sc, ex, ey, eG, cx, cy, cz);
      dx += cx;
      if (p > 0) dy += cy;
      dz += cz;
    }
  };

  // W' applied to a scaled-frame rhs.
  auto apply_Wt_scaled = [&](const detail::Scaling<Scalar>& sc,
                             const detail::ScaledRhs<Scalar>& r) -> Vec {
    Vec out(cd);
    for (Eigen::Index i = 0; i < l; ++i) out[i] = sc.w[i] * r.orth[i];
    Eigen::Index off = l;
    for (std::size_t b = 0; b < prob.psd_blocks.size(); ++b) {
      const Eigen::Index d = prob.psd_blocks[b].dim;
      out.segment(off, d * d) =
          svec<Scalar>((sc.blocks[b].R * r.blocks[b] * sc.blocks[b].R.adjoint()).eval());
      off += d * d;
    }
    return out;
  };

  auto scaled_dirs = [&](const detail::Scaling<Scalar>& sc, const Vec& ds, const Vec& dz,
                         Vec& us_orth, Vec& uz_orth, std::vector<CMat>& us_blk,
                         std::vector<CMat>& uz_blk) {
    us_orth.resize(l);
    uz_orth.resize(l);
    for (Eigen::Index i = 0; i < l; ++i) {
      us_orth[i] = ds[i] / sc.w[i];
      uz_orth[i] = dz[i] * sc.w[i];
    }
    us_blk.clear();
    uz_blk.clear();
    Eigen::Index off = l;
    for (std::size_t b = 0; b < prob.psd_blocks.size(); ++b) {
      const Eigen::Index d = prob.psd_blocks[b].dim;
      const CMat DS = smat<Scalar>(ds.segment(off, d * d), d);
      const CMat DZ = smat<Scalar>(dz.segment(off, d * d), d);
      us_blk.push_back(sc.blocks[b].Rinv * DS * sc.blocks[b].Rinv.adjoint());
      uz_blk.push_back(sc.blocks[b].R.adjoint() * DZ * sc.blocks[b].R);
      off += d * d;
    }
  };

  // ---- initialization: solve the W = I system with rhs (-c, b, h), take the
  // primal slack h - Gx and dual z = Gx - h, and shift both into the cone.
  {
    detail::Scaling<Scalar> sc0;
    sc0.w = Vec::Ones(l);
    sc0.lam_orth = Vec::Ones(l);
    for (const auto& blk : prob.psd_blocks) {
      typename detail::Scaling<Scalar>::Block b;
      b.R = b.Rinv = b.Wm = b.Wm_inv = CMat::Identity(blk.dim, blk.dim);
      b.lam = Vec::Ones(blk.dim);
      sc0.blocks.push_back(std::move(b));
    }
    factorize(sc0);
    Vec dx, dy, dz;
    solve_kkt(sc0, -c, prob.eq_rhs, h, dx, dy, dz);
    res.x = dx;
    res.y = dy;
    Vec z0 = ops.apply_G(res.x) - h;
    Vec s0 = -z0;
    auto cone_shift = [&](Vec& v) {
      Scalar min_eig = std::numeric_limits<Scalar>::infinity();
      if (l > 0) min_eig = std::min(min_eig, v.head(l).minCoeff());
      Eigen::Index off = l;
      for (const auto& blk : prob.psd_blocks) {
        Eigen::SelfAdjointEigenSolver<CMat> es(
            smat<Scalar>(v.segment(off, blk.dim * blk.dim), blk.dim), Eigen::EigenvaluesOnly);
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
        off += blk.dim * blk.dim;
      }
      if (!(min_eig > Scalar(0))) {
        const Scalar shift = Scalar(1) - min_eig;
        v.head(l).array() += shift;
        Eigen::Index o = l;
        for (const auto& blk : prob.psd_blocks) {
          Eigen::Index t = 0;
          for (Eigen::Index j = 0; j < blk.dim; ++j) {
            v[o + t] += shift;  // diagonal svec coordinates
            t += 1 + 2 * (blk.dim - j - 1);
          }
          o += blk.dim * blk.dim;
        }
      }
    };
    cone_shift(s0);
    cone_shift(z0);
    res.s = s0;
    res.z = z0;
  }

  const Scalar norm_c = std::max(Scalar(1), c.norm());
  const Scalar norm_b = std::max(Scalar(1), prob.eq_rhs.norm());
  const Scalar norm_h = std::max(Scalar(1), h.norm());

  Scalar best_score = std::numeric_limits<Scalar>::infinity();
  IpmResult<Scalar> best = res;
  best.primal_residual = best.dual_residual = best.duality_gap =
      std::numeric_limits<Scalar>::infinity();
  int stall_count = 0;

  auto finish = [&](IpmResult<Scalar>& out) -> IpmResult<Scalar> {
    out.solve_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
  };

  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    const Vec rx = apply_P(res.x) + c + ops.apply_At(res.y) + ops.apply_Gt(res.z);
    const Vec ry = ops.apply_A(res.x) - prob.eq_rhs;
    const Vec rz = ops.apply_G(res.x) + res.s - h;
    const Scalar gap = res.s.dot(res.z);
    const Scalar xPx = has_quad ? res.x.dot(prob.quad_diag.cwiseProduct(res.x)) : Scalar(0);
    const Scalar pcost = Scalar(0.5) * xPx + c.dot(res.x);
    const Scalar dcost = -Scalar(0.5) * xPx - prob.eq_rhs.dot(res.y) - h.dot(res.z);
    const Scalar pres = std::max(ry.norm() / norm_b, rz.norm() / norm_h);
    const Scalar dres = rx.norm() / norm_c;
    const Scalar relgap = std::abs(gap) / std::max(Scalar(1), std::abs(pcost));

    res.primal_objective = pcost;
    res.dual_objective = dcost;
    res.duality_gap = gap;
    res.primal_residual = pres;
    res.dual_residual = dres;
    res.iterations = iter;

    if (!std::isfinite(pres) || !std::isfinite(dres) || !std::isfinite(gap)) break;

    const Scalar score = std::max({pres, dres, relgap});
    if (score < Scalar(0.9) * best_score) {
      best_score = score;
      best = res;
      stall_count = 0;
    } else if (score < best_score) {
      best_score = score;
      best = res;
      ++stall_count;
    } else {
      ++stall_count;
    }
    if (stall_count >= 14) break;

    if (pres <= opts.feas_tol && dres <= opts.feas_tol &&
        (std::abs(gap) <= opts.opt_tol || relgap <= opts.opt_tol)) {
      res.status = SolveStatus::optimal;
      return finish(res);
    }

    // Farkas-type primal infeasibility certificate: z in K, A'y + G'z ~ 0 and
    // b'y + h'z < 0. Feasible problems cannot produce this up to tolerance.
    {
      const Scalar cert = -(prob.eq_rhs.dot(res.y) + h.dot(res.z));
      if (cert > Scalar(0)) {
        const Scalar cert_res = (ops.apply_At(res.y) + ops.apply_Gt(res.z)).norm() / cert;
        if (cert_res <= opts.feas_tol) {
          res.status = SolveStatus::infeasible;
          return finish(res);
        }
      }
    }

    if (iter == opts.max_iter || gap <= Scalar(0)) break;

    detail::Scaling<Scalar> sc;
    try {
      sc = detail::compute_scaling(ops, res.s, res.z);
      factorize(sc);
    } catch (const std::runtime_error&) {
      break;
    }
    const Scalar mu = gap / nu;

    // Predictor. dsdiv = -lambda, and W'(-lambda) = -s, so bG = -rz + s.
    // ds is recovered from the linear row G dx + ds = -rz, which keeps the
    // cone residual contracting even when the scaled KKT system is poorly
    // conditioned near convergence.
    Vec dx_a, dy_a, dz_a;
    solve_kkt(sc, -rx, -ry, -rz + res.s, dx_a, dy_a, dz_a);
    const Vec ds_a = -rz - ops.apply_G(dx_a);

    Vec us_o, uz_o;
    std::vector<CMat> us_b, uz_b;
    scaled_dirs(sc, ds_a, dz_a, us_o, uz_o, us_b, uz_b);
    const Scalar alpha_aff =
        std::min(Scalar(1), std::min(detail::max_step_scaled(sc, us_o, us_b),
                                     detail::max_step_scaled(sc, uz_o, uz_b)));
    const Scalar gap_aff = (res.s + alpha_aff * ds_a).dot(res.z + alpha_aff * dz_a);
    const Scalar sigma =
        std::min(Scalar(1), std::pow(std::max(Scalar(0), gap_aff / gap), Scalar(3)));

    // Corrector: dsdiv = lambda \ (sigma mu e - lambda o lambda - us o uz).
    detail::ScaledRhs<Scalar> dsdiv;
    dsdiv.orth.resize(l);
    for (Eigen::Index i = 0; i < l; ++i)
      dsdiv.orth[i] =
          (sigma * mu - sc.lam_orth[i] * sc.lam_orth[i] - us_o[i] * uz_o[i]) / sc.lam_orth[i];
    for (std::size_t b = 0; b < prob.psd_blocks.size(); ++b) {
      const auto& lam = sc.blocks[b].lam;
      const Eigen::Index d = lam.size();
      CMat D = -Scalar(0.5) * (us_b[b] * uz_b[b] + uz_b[b] * us_b[b]);
      for (Eigen::Index i = 0; i < d; ++i) D(i, i) += sigma * mu - lam[i] * lam[i];
      CMat Dt(d, d);
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) Dt(i, j) = Scalar(2) * D(i, j) / (lam[i] + lam[j]);
      dsdiv.blocks.push_back(std::move(Dt));
    }

    Vec dx, dy, dz;
    solve_kkt(sc, -rx, -ry, -rz - apply_Wt_scaled(sc, dsdiv), dx, dy, dz);
    const Vec ds = -rz - ops.apply_G(dx);

    Vec us2_o, uz2_o;
    std::vector<CMat> us2_b, uz2_b;
    scaled_dirs(sc, ds, dz, us2_o, uz2_o, us2_b, uz2_b);
    const Scalar bound = std::min(detail::max_step_scaled(sc, us2_o, us2_b),
                                  detail::max_step_scaled(sc, uz2_o, uz2_b));
    const Scalar alpha = std::min(Scalar(1), Scalar(0.99) * bound);

    res.x += alpha * dx;
    if (p > 0) res.y += alpha * dy;
    res.z += alpha * dz;
    res.s += alpha * ds;
  }

  best.status = (best.primal_residual <= Scalar(100) * opts.feas_tol &&
                 best.dual_residual <= Scalar(100) * opts.feas_tol &&
                 best.duality_gap / std::max(Scalar(1), std::abs(best.primal_objective)) <=
                     Scalar(100) * opts.opt_tol)
                    ? SolveStatus::near_optimal
                    : SolveStatus::numerical_failure;
  return finish(best);
}

}  // namespace qmt::conic
