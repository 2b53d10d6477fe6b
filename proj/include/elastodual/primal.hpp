#pragma once
////////////////////////////////////////////////////////////////////////////////
// primal.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//      Saint Venant-Kirchhoff primal problem on the grid.
//
//      With g = grad u the Green strain is e = (g + g^T + g^T g)/2 and the
//      stored energy density is W(g) = 1/2 H e : e.  The discrete functional
//
//          J(u) = sum_n w_n W(g_n) - sum_n w_n f_n . u_n - sum_{Gamma1} w_s fhat . u
//
//      is differentiated exactly: dW/dg = (I + g) S with S = H e, pulled back
//      through the transpose of the finite-difference gradient.
*/
////////////////////////////////////////////////////////////////////////////////

#include <cmath>
#include <limits>
#include <string>

#include "elastodual/grid.hpp"
#include "elastodual/model.hpp"

namespace elastodual {

inline constexpr double kC1Bound = 1.0 / 8.0;

struct EnergyBreakdown {
  double G = 0.0;
  double F_lambda2 = 0.0;
  double G_K = 0.0;
  double load_work_volume = 0.0;
  double load_work_surface = 0.0;
  double J = 0.0;
};

inline Mat3 green_strain_from_gradient(const Mat3& g) { return 0.5 * (g + g.transpose() + g.transpose() * g); }

/// S = H e for the isotropic law.
inline Mat3 svk_stress(const Mat3& e, const LameParams& lame) {
  return lame.lambda * e.trace() * Mat3::Identity() + 2.0 * lame.mu * e;
}

/// W(g) = lambda/2 (tr e)^2 + mu e:e, which equals 1/2 H e : e.
inline double svk_density(const Mat3& g, const LameParams& lame) {
  const Mat3 e = green_strain_from_gradient(g);
  const double tr = e.trace();
  return 0.5 * lame.lambda * tr * tr + lame.mu * ddot(e, e);
}

/// dW/dg = (I + g) S.
inline Mat3 svk_piola(const Mat3& g, const LameParams& lame) {
  return (Mat3::Identity() + g) * svk_stress(green_strain_from_gradient(g), lame);
}

/// W(g + d) - W(g) without cancellation against W(g).
inline double svk_density_change(const Mat3& g, const Mat3& d, const LameParams& lame) {
  const Mat3 e = green_strain_from_gradient(g);
  const Mat3 de = 0.5 * (d + d.transpose() + g.transpose() * d + d.transpose() * g + d.transpose() * d);
  const double dtr = de.trace();
  return 0.5 * lame.lambda * dtr * (2.0 * e.trace() + dtr) + lame.mu * ddot(de, 2.0 * e + de);
}

inline MatrixField green_strain(const VectorField& u, const Grid& grid) {
  MatrixField e = gradient(u, grid);
  for (Mat3& m : e) m = green_strain_from_gradient(m);
  return e;
}

inline MatrixField stress(const VectorField& u, const HookeTensor& H, const Grid& grid) {
  MatrixField s = green_strain(u, grid);
  for (Mat3& m : s) m = H.apply(m);
  return s;
}

inline void require_in_U(const VectorField& u, const Grid& grid) {
  if (u.size() != grid.node_count()) throw ValidationError("displacement field size does not match grid");
  for (std::size_t id = 0; id < grid.node_count(); ++id)
    if (grid.is_pinned(id) && !u[id].isZero(0.0))
      throw ValidationError("displacement is not zero on Gamma0 (node " + std::to_string(id) + ")");
}

inline double surface_work(const VectorField& u, const ModelConfig& cfg) {
  double acc = 0.0;
  for (Face f : kAllFaces) {
    if (cfg.grid.tag(f) != BoundaryTag::Gamma1) continue;
    const auto& nodes = cfg.grid.face_nodes(f);
    const auto& w = cfg.grid.face_weights(f);
    const auto& t = cfg.loads.traction[static_cast<int>(f)];
    for (std::size_t k = 0; k < nodes.size(); ++k) acc += w[k] * t[k].dot(u[nodes[k]]);
  }
  return acc;
}

inline double volume_work(const VectorField& u, const ModelConfig& cfg) {
  double acc = 0.0;
  for (std::size_t id = 0; id < cfg.grid.node_count(); ++id)
    acc += cfg.grid.weight(id) * cfg.loads.body[id].dot(u[id]);
  return acc;
}

inline EnergyBreakdown energy(const VectorField& u, const ModelConfig& cfg) {
  require_in_U(u, cfg.grid);
  const MatrixField g = gradient(u, cfg.grid);
  EnergyBreakdown e;
  for (std::size_t id = 0; id < cfg.grid.node_count(); ++id) {
    const double w = cfg.grid.weight(id);
    e.G += w * svk_density(g[id], cfg.lame);
    e.F_lambda2 += w * 0.5 * cfg.K * g[id].squaredNorm();
  }
  e.G_K = e.G + e.F_lambda2;
  e.load_work_volume = volume_work(u, cfg);
  e.load_work_surface = surface_work(u, cfg);
  e.J = e.G - e.load_work_volume - e.load_work_surface;
  return e;
}

/// Gradient of the (linear) load work with respect to the node values.
inline VectorField load_vector(const ModelConfig& cfg) {
  VectorField b(cfg.grid.node_count());
  for (std::size_t id = 0; id < cfg.grid.node_count(); ++id) b[id] = cfg.grid.weight(id) * cfg.loads.body[id];
  for (Face f : kAllFaces) {
    if (cfg.grid.tag(f) != BoundaryTag::Gamma1) continue;
    const auto& nodes = cfg.grid.face_nodes(f);
    const auto& w = cfg.grid.face_weights(f);
    const auto& t = cfg.loads.traction[static_cast<int>(f)];
    for (std::size_t k = 0; k < nodes.size(); ++k) b[nodes[k]] += w[k] * t[k];
  }
  return b;
}

inline void zero_pinned(VectorField& v, const Grid& grid) {
  for (std::size_t id = 0; id < grid.node_count(); ++id)
    if (grid.is_pinned(id)) v[id].setZero();
}

/// Exact gradient of energy(.).J with respect to the free node values; zero on Gamma0.
inline VectorField grad_J(const VectorField& u, const ModelConfig& cfg) {
  require_in_U(u, cfg.grid);
  MatrixField P = gradient(u, cfg.grid);
  for (std::size_t id = 0; id < cfg.grid.node_count(); ++id) P[id] = cfg.grid.weight(id) * svk_piola(P[id], cfg.lame);
  VectorField r = gradient_transpose(P, cfg.grid);
  const VectorField b = load_vector(cfg);
  for (std::size_t id = 0; id < r.size(); ++id) r[id] -= b[id];
  zero_pinned(r, cfg.grid);
  return r;
}

inline double c1_margin(const MatrixField& g) { return kC1Bound - max_abs_entry(g); }

struct PrimalResult {
  VectorField u;
  EnergyBreakdown energy;
  int iterations = 0;
  double grad_norm_inf = 0.0;
  double c1_margin = 0.0;
  bool converged = false;
};

namespace detail {

// Barrier on the open box |g_mi| < 1/8, normalised to vanish at g = 0.
inline double barrier_density(const Mat3& g) {
  double acc = 0.0;
  for (int k = 0; k < 9; ++k) acc -= std::log1p(-64.0 * g(k) * g(k));
  return acc;
}

inline Mat3 barrier_gradient(const Mat3& g) {
  Mat3 r;
  for (int k = 0; k < 9; ++k) r(k) = 128.0 * g(k) / (1.0 - 64.0 * g(k) * g(k));
  return r;
}

inline double barrier_change(const Mat3& g, const Mat3& d) {
  double acc = 0.0;
  for (int k = 0; k < 9; ++k) {
    const double a = 1.0 - 64.0 * g(k) * g(k);
    acc -= std::log1p(-64.0 * d(k) * (2.0 * g(k) + d(k)) / a);
  }
  return acc;
}

inline double inf_norm(const VectorField& v) { return max_abs_entry(v); }

}  // namespace detail

/// Barrier-augmented gradient descent with Armijo backtracking, iterates strictly inside C1.
inline PrimalResult solve_primal(const ModelConfig& cfg, const VectorField& u_init) {
  const Grid& grid = cfg.grid;
  const Tolerances& tol = cfg.tol;
  require_in_U(u_init, grid);
  if (!(c1_margin(gradient(u_init, grid)) > 0.0)) throw ValidationError("solve_primal: initial guess violates C1");

  const VectorField b = load_vector(cfg);
  PrimalResult res;
  res.u = u_init;

  auto full_gradient = [&](const MatrixField& g, double omega) {
    MatrixField P(g.size());
    for (std::size_t id = 0; id < g.size(); ++id) {
      Mat3 p = svk_piola(g[id], cfg.lame);
      if (omega > 0.0) p += omega * detail::barrier_gradient(g[id]);
      P[id] = grid.weight(id) * p;
    }
    VectorField r = gradient_transpose(P, grid);
    for (std::size_t id = 0; id < r.size(); ++id) r[id] -= b[id];
    zero_pinned(r, grid);
    return r;
  };

  // Change of J + omega*barrier along a step d, computed without cancellation.
  auto objective_change = [&](const MatrixField& g, const MatrixField& dg, const VectorField& du, double omega) {
    double acc = 0.0;
    for (std::size_t id = 0; id < g.size(); ++id) {
      double c = svk_density_change(g[id], dg[id], cfg.lame);
      if (omega > 0.0) c += omega * detail::barrier_change(g[id], dg[id]);
      acc += grid.weight(id) * c - b[id].dot(du[id]);
    }
    return acc;
  };

  MatrixField g = gradient(res.u, grid);
  int iters = 0;
  const int stages = std::max(tol.barrier_stages, 0);
  for (int stage = 0; stage <= stages; ++stage) {
    const bool last = (stage == stages);
    const double omega = last ? 0.0 : tol.barrier_weight * std::pow(tol.barrier_decay, stage);
    while (true) {
      const VectorField grad = full_gradient(g, omega);
      const double gnorm = detail::inf_norm(grad);
      if (gnorm < tol.grad_tol) break;
      if (iters >= tol.max_iters) {
        if (!last) break;
        res.iterations = iters;
        res.grad_norm_inf = gnorm;
        res.c1_margin = c1_margin(g);
        res.energy = energy(res.u, cfg);
        res.converged = false;
        return res;
      }
      double sq = 0.0;
      for (const Vec3& v : grad) sq += v.squaredNorm();
      VectorField du(grad.size());
      double t = tol.step_init;
      bool accepted = false;
      while (t > 1e-40) {
        for (std::size_t id = 0; id < du.size(); ++id) du[id] = -t * grad[id];
        const MatrixField dg = gradient(du, grid);
        bool inside = true;
        for (std::size_t id = 0; id < g.size() && inside; ++id)
          inside = ((g[id] + dg[id]).cwiseAbs().maxCoeff() < kC1Bound);
        if (inside && objective_change(g, dg, du, omega) <= -tol.armijo_slope * t * sq) {
          for (std::size_t id = 0; id < du.size(); ++id) res.u[id] += du[id];
          for (std::size_t id = 0; id < g.size(); ++id) g[id] += dg[id];
          accepted = true;
          break;
        }
        t *= tol.step_shrink;
      }
      if (!accepted) throw NumericalError("line search failed");
      ++iters;
    }
  }
  // refresh g from u to drop accumulated update round-off
  g = gradient(res.u, grid);
  res.c1_margin = c1_margin(g);
  if (!(res.c1_margin > 0.0)) throw NumericalError("left C1");
  res.iterations = iters;
  res.grad_norm_inf = detail::inf_norm(grad_J(res.u, cfg));
  res.energy = energy(res.u, cfg);
  res.converged = res.grad_norm_inf < tol.grad_tol;
  return res;
}

struct BvpResidual {
  double interior = 0.0;
  double traction = 0.0;
};

/// Strong-form residual of the boundary value problem:
/// div((I + g) sigma) + f on free nodes, (I + g) sigma n - fhat on free Gamma1 face nodes.
inline BvpResidual bvp_residual(const VectorField& u, const ModelConfig& cfg) {
  require_in_U(u, cfg.grid);
  const Grid& grid = cfg.grid;
  MatrixField P = gradient(u, grid);
  for (Mat3& m : P) m = svk_piola(m, cfg.lame);
  VectorField r = divergence(P, grid);
  for (std::size_t id = 0; id < r.size(); ++id) r[id] += cfg.loads.body[id];
  BvpResidual out;
  out.interior = free_l2_norm(r, grid);
  double acc = 0.0;
  for (Face f : kAllFaces) {
    if (grid.tag(f) != BoundaryTag::Gamma1) continue;
    const auto& nodes = grid.face_nodes(f);
    const auto& w = grid.face_weights(f);
    const Vec3 n = outward_normal(f);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (grid.is_pinned(nodes[k])) continue;
      acc += w[k] * (P[nodes[k]] * n - cfg.loads.traction[static_cast<int>(f)][k]).squaredNorm();
    }
  }
  out.traction = std::sqrt(acc);
  return out;
}

}  // namespace elastodual
