#pragma once
// Two-level dual optimisation: for fixed (Q, sigma~) the inner problem
// minimises J*(Q, sigma~, .) over B*(sigma~); the outer loop maximises the
// resulting value J~*(Q, sigma~) over the equilibrium-feasible set.
//
// J* is a weighted sum of node densities and B* is a product of node sets, so
// the inner problem splits into independent 9-dimensional problems.

#include <utility>
#include <vector>

#include "elastodual/conjugates.hpp"
#include "elastodual/feasibility.hpp"

namespace elastodual {

struct InnerResult {
  MatrixField z_star;
  double value = 0.0;
  int iterations = 0;  // largest per-node iteration count
  double proj_grad_norm = 0.0;
};

namespace detail {

inline double j_star_density(const Mat3& Q, const Mat3& sigma_tilde, const Mat3& z, double K,
                             const ComplianceTensor& Hbar, double cap) {
  return z.squaredNorm() / (2.0 * K) - gk_star_density(Q, sigma_tilde + z, K, Hbar, cap);
}

struct NodeSolve {
  Mat3 z;
  double value;
  int iterations;
  double pg_norm;
};

/// Damped Newton on one node density, with a projected-gradient step whenever the
/// Newton step cannot stay inside B*(sigma~).
inline NodeSolve inner_node(const Mat3& Q, const Mat3& s, const Mat3& z0, const ModelConfig& cfg) {
  const double K = cfg.K;
  const Tolerances& tol = cfg.tol;
  const double cap = tol.condition_cap;
  const double bound = b2_bound(K) * (1.0 - 1e-9);
  auto proj = [&](const Mat3& z) { return project_B_star_node(z, s, K, tol.projection_alternations); };
  auto f = [&](const Mat3& z) { return j_star_density(Q, s, z, K, cfg.compliance, cap); };
  auto feasible = [&](const Mat3& z) { return z.cwiseAbs().maxCoeff() <= bound && in_B_star_node(z, s, K); };

  Mat3 z = proj(z0);
  double fz = f(z);
  double t = K;
  double pg = 0.0;
  int it = 0;
  for (; it < tol.inner_max_iters; ++it) {
    const Mat3 g = j_star_density_grad_z(Q, s, z, K, cfg.compliance);
    pg = (z - proj(z - K * g)).norm() / K;
    if (pg < tol.inner_tol) break;

    bool moved = false;
    const Mat9 H = hessian_zz_exact_form(Q, shifted_matrix(s, z, K), K, cfg.compliance);
    const Eigen::LLT<Mat9> llt(H);
    if (llt.info() == Eigen::Success) {
      const Eigen::Matrix<double, 9, 1> gv = g.reshaped<Eigen::RowMajor>();
      const Eigen::Matrix<double, 9, 1> dv = -llt.solve(gv);
      const Mat3 d = dv.reshaped<Eigen::RowMajor>(3, 3);
      const double slope = gv.dot(dv);
      for (double a = 1.0; a > 1e-4; a *= 0.5) {
        const Mat3 zn = z + a * d;
        if (!feasible(zn)) continue;
        const double fn = f(zn);
        if (fn <= fz + 1e-4 * a * slope + 1e-15 * (1.0 + std::abs(fz))) {
          moved = (a * d).squaredNorm() > 0.0;
          z = zn;
          fz = fn;
          break;
        }
      }
    }
    if (!moved) {
      while (t > 1e-12 * K) {
        const Mat3 zn = proj(z - t * g);
        const Mat3 d = zn - z;
        const double fn = f(zn);
        if (fn <= fz + ddot(g, d) + d.squaredNorm() / (2.0 * t)) {
          moved = d.squaredNorm() > 0.0;
          z = zn;
          fz = fn;
          break;
        }
        t *= 0.5;
      }
      t = std::min(2.0 * t, 4.0 * K);
    }
    if (!moved) break;
  }
  return {z, fz, it, pg};
}

}  // namespace detail

/// Minimises z* -> J*(Q, sigma~, z*) over B*(sigma~) starting from z_init.
inline InnerResult inner_min_z(const MatrixField& Q, const MatrixField& sigma_tilde, const ModelConfig& cfg,
                               const MatrixField& z_init) {
  const Grid& grid = cfg.grid;
  InnerResult r;
  r.z_star.resize(grid.node_count());
  for (std::size_t id = 0; id < grid.node_count(); ++id) {
    detail::NodeSolve ns;
    try {
      ns = detail::inner_node(Q[id], sigma_tilde[id], z_init[id], cfg);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at node " + detail::node_label(grid, id));
    }
    r.z_star[id] = ns.z;
    r.value += grid.weight(id) * ns.value;
    r.iterations = std::max(r.iterations, ns.iterations);
    r.proj_grad_norm = std::max(r.proj_grad_norm, ns.pg_norm);
  }
  const HessianReport hr = hessian_zz(DualPoint{Q, sigma_tilde, r.z_star}, cfg);
  if (!(hr.global_min > 0.0)) throw NumericalError("Hessian check failed");
  return r;
}

struct DualSolveResult {
  DualPoint dual_point;
  double J_tilde_star = 0.0;
  int inner_iterations = 0;
  int outer_iterations = 0;
  FeasibilityReport feasibility;
  std::vector<std::pair<int, double>> ascent_trace;
  bool converged = false;
  bool no_feasible_ascent_step = false;
  std::string stop_reason;
};

namespace detail {

inline double field_dot(const MatrixField& a, const MatrixField& b) {
  double acc = 0.0;
  for (std::size_t id = 0; id < a.size(); ++id) acc += ddot(a[id], b[id]);
  return acc;
}

inline bool inside_A4(const MatrixField& Q, const MatrixField& sigma_tilde, double K) {
  return check_A4(Q, sigma_tilde, K).ok;
}

}  // namespace detail

/// Projected supergradient ascent on J~*; dual_init must satisfy A2-A4.
inline DualSolveResult outer_ascent(const ModelConfig& cfg, const DualPoint& dual_init, const EquilibriumOperator& op) {
  const Tolerances& tol = cfg.tol;
  DualSolveResult res;
  DualPoint x = dual_init;
  InnerResult in = inner_min_z(x.Q, x.sigma_tilde, cfg, x.z_star);
  x.z_star = in.z_star;
  double val = in.value;
  res.inner_iterations = in.iterations;
  res.ascent_trace.emplace_back(0, val);

  double t = -1.0;
  int quiet = 0;
  int it = 0;
  res.stop_reason = "max_iters";
  for (; it < tol.outer_max_iters; ++it) {
    DualPartials d = J_star_partials(x, cfg);
    for (Mat3& m : d.dsigma) m = sym(m);
    op.project_direction(d.dQ, d.dsigma);
    const double sq = detail::field_dot(d.dQ, d.dQ) + detail::field_dot(d.dsigma, d.dsigma);
    if (!(sq > 0.0)) {
      res.converged = true;
      res.stop_reason = "stationary";
      break;
    }
    if (t < 0.0) t = 0.01 * cfg.K / std::max(max_abs_entry(d.dQ), max_abs_entry(d.dsigma));
    const double t_min = 1e-14 * t;

    bool accepted = false;
    while (t > t_min) {
      DualPoint trial{x.Q, x.sigma_tilde, x.z_star};
      for (std::size_t id = 0; id < trial.Q.size(); ++id) {
        trial.Q[id] += t * d.dQ[id];
        trial.sigma_tilde[id] += t * d.dsigma[id];
      }
      if (detail::inside_A4(trial.Q, trial.sigma_tilde, cfg.K)) {
        try {
          const InnerResult tin = inner_min_z(trial.Q, trial.sigma_tilde, cfg, x.z_star);
          if (tin.value >= val + tol.armijo_slope * t * sq) {
            const double gain = tin.value - val;
            trial.z_star = tin.z_star;
            x = std::move(trial);
            val = tin.value;
            res.inner_iterations = std::max(res.inner_iterations, tin.iterations);
            res.ascent_trace.emplace_back(it + 1, val);
            accepted = true;
            quiet = (gain <= tol.outer_rel_tol * std::abs(val)) ? quiet + 1 : 0;
            break;
          }
        } catch (const NumericalError&) {
          // trial point outside the region where J* is defined; shrink
        }
      }
      t *= tol.step_shrink;
    }
    if (!accepted) {
      res.no_feasible_ascent_step = (res.ascent_trace.size() == 1);
      res.converged = true;
      res.stop_reason = "step_underflow";
      break;
    }
    if (quiet >= tol.outer_patience) {
      res.converged = true;
      res.stop_reason = "relative_tolerance";
      ++it;
      break;
    }
    t *= 2.0;
  }
  res.outer_iterations = it;
  res.dual_point = std::move(x);
  res.J_tilde_star = val;
  return res;
}

/// Pulls an arbitrary (Q, sigma~) onto A2, A3 and the A4 box by alternating Q-projection and clipping.
inline DualPoint prepare_dual_init(DualPoint dp, const ModelConfig& cfg, const EquilibriumOperator& op) {
  for (Mat3& m : dp.sigma_tilde) m = sym(m);
  const double sb = a4_sigma_bound(cfg.K) * (1.0 - 1e-6);
  const double qb = a4_q_bound(cfg.K) * (1.0 - 1e-6);
  for (int pass = 0; pass < 50; ++pass) {
    dp.Q = op.project_Q(dp.Q, dp.sigma_tilde, cfg.tol.projection_tol);
    const A4Check a4 = check_A4(dp.Q, dp.sigma_tilde, cfg.K);
    if (a4.ok) return dp;
    for (Mat3& m : dp.sigma_tilde) m = m.cwiseMax(-sb).cwiseMin(sb);
    for (Mat3& m : dp.Q) m = m.cwiseMax(-qb).cwiseMin(qb);
  }
  const A4Check a4 = check_A4(dp.Q, dp.sigma_tilde, cfg.K);
  std::ostringstream os;
  os << "initial dual point violates A4 with margin " << std::min(a4.sigma_margin, a4.q_margin);
  throw NumericalError(os.str());
}

/// Default initial point: the minimum-norm (Q, sigma~) meeting A2 and A3.
inline DualPoint default_dual_init(const ModelConfig& cfg, const EquilibriumOperator& op) {
  auto [Q, s] = op.minimum_norm_point();
  DualPoint dp{std::move(Q), std::move(s), MatrixField(cfg.grid.node_count(), Mat3::Zero())};
  return prepare_dual_init(std::move(dp), cfg, op);
}

inline DualSolveResult solve_dual(const ModelConfig& cfg, const std::optional<DualPoint>& init = std::nullopt,
                                  const SampledCheckOptions& checks = {}) {
  const EquilibriumOperator op(cfg.grid, cfg.loads);
  DualPoint start = init ? prepare_dual_init(*init, cfg, op) : default_dual_init(cfg, op);
  DualSolveResult res = outer_ascent(cfg, start, op);
  res.feasibility = feasibility_report(res.dual_point, cfg, nullptr, checks);
  return res;
}

}  // namespace elastodual
