#pragma once
// Manufactured critical points, extremality residuals, recovery of u from a
// dual point and duality-gap reports.
//
// Manufactured displacements are discrete gradients of a separable discrete
// potential.  Difference operators along different axes commute, so the
// discrete displacement gradient of such a field is exactly symmetric.

#include <map>
#include <string>

#include <Eigen/Sparse>

#include "elastodual/dual_solver.hpp"
#include "elastodual/primal.hpp"

namespace elastodual {

// ---------------------------------------------------------------------------
// Presets

enum class Preset { Zero, SineBump, Ramp };

inline const char* preset_name(Preset p) {
  switch (p) {
    case Preset::Zero: return "zero";
    case Preset::SineBump: return "sine-bump";
    case Preset::Ramp: return "ramp";
  }
  return "?";
}

inline Preset parse_preset(const std::string& s) {
  if (s == "zero") return Preset::Zero;
  if (s == "sine-bump") return Preset::SineBump;
  if (s == "ramp") return Preset::Ramp;
  throw ValidationError("unknown preset '" + s + "' (expected zero, sine-bump or ramp)");
}

namespace detail {

/// 1D potential factor along one axis, adjusted so the discrete gradient vanishes on Gamma0 faces.
inline std::vector<double> potential_profile(const Grid& grid, int axis, Preset p) {
  const int n = grid.dim(axis);
  const bool lower = grid.tag(static_cast<Face>(2 * axis)) == BoundaryTag::Gamma0;
  const bool upper = grid.tag(static_cast<Face>(2 * axis + 1)) == BoundaryTag::Gamma0;
  if (lower && upper && n < 5) throw ValidationError("preset needs at least 5 nodes along an axis pinned at both ends");
  std::vector<double> a(n);
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    double v = (p == Preset::SineBump) ? 1.0 + 0.5 * std::sin(M_PI * t) : 1.0;
    if (lower) v *= t * t;
    if (upper) v *= (1.0 - t) * (1.0 - t);
    a[i] = v;
  }
  if (lower) {
    a[0] = 0.0;
    a[1] = a[2] / 4.0;
  }
  if (upper) {
    a[n - 1] = 0.0;
    a[n - 2] = a[n - 3] / 4.0;
  }
  return a;
}

inline VectorField scalar_gradient(const ScalarField& phi, const Grid& grid) {
  VectorField u(grid.node_count(), Vec3::Zero());
  for (std::size_t id = 0; id < grid.node_count(); ++id)
    for (int ax = 0; ax < 3; ++ax) grid.for_each_tap(id, ax, [&](std::size_t nb, double w) { u[id](ax) += w * phi[nb]; });
  return u;
}

}  // namespace detail

/// Preset displacement with max |grad u| = 1 (zero preset: u = 0).
inline VectorField preset_unit_field(Preset p, const Grid& grid) {
  if (p == Preset::Zero) return VectorField(grid.node_count(), Vec3::Zero());
  std::array<std::vector<double>, 3> prof;
  for (int ax = 0; ax < 3; ++ax) prof[ax] = detail::potential_profile(grid, ax, p);
  ScalarField phi(grid.node_count());
  for (std::size_t id = 0; id < grid.node_count(); ++id) {
    const auto c = grid.ijk(id);
    phi[id] = prof[0][c[0]] * prof[1][c[1]] * prof[2][c[2]];
  }
  VectorField u = detail::scalar_gradient(phi, grid);
  for (std::size_t id = 0; id < u.size(); ++id)
    if (grid.is_pinned(id)) u[id].setZero();
  const double gmax = max_abs_entry(gradient(u, grid));
  if (!(gmax > 0.0)) throw ValidationError("preset potential degenerates on this grid");
  for (Vec3& v : u) v /= gmax;
  return u;
}

inline VectorField scaled(const VectorField& u, double a) {
  VectorField r(u.size());
  for (std::size_t id = 0; id < u.size(); ++id) r[id] = a * u[id];
  return r;
}

// ---------------------------------------------------------------------------
// Manufactured critical point

struct CriticalPointBundle {
  VectorField u0;
  DualPoint dual;
  Loads loads;
  std::map<std::string, double> construction_log;
};

struct ManufacturedMargins {
  double C1 = 0.0;
  double B1 = 0.0;
  double B2 = 0.0;
  double A4_sigma = 0.0;
  double A4_Q = 0.0;

  /// Smallest margin as a fraction of its bound.
  double min_relative(double K) const {
    return std::min({C1 / kC1Bound, B1 / (0.5 * K), B2 / b2_bound(K), A4_sigma / a4_sigma_bound(K), A4_Q / a4_q_bound(K)});
  }
};

inline DualPoint manufactured_dual(const VectorField& u0, const LameParams& lame, double K, const Grid& grid) {
  const MatrixField g = gradient(u0, grid);
  DualPoint dp = DualPoint::zero(grid);
  for (std::size_t id = 0; id < grid.node_count(); ++id) {
    const Mat3 s = svk_stress(green_strain_from_gradient(g[id]), lame);
    dp.z_star[id] = K * g[id];
    dp.sigma_tilde[id] = s - K * g[id];
    dp.Q[id] = g[id] * s + K * g[id];
  }
  return dp;
}

inline ManufacturedMargins manufactured_margins(const VectorField& u0, const DualPoint& dp, double K, const Grid& grid) {
  ManufacturedMargins m;
  m.C1 = check_C1(u0, grid).margin;
  m.B1 = check_B1(dp.z_star, dp.sigma_tilde, K).margin;
  m.B2 = check_B2(dp.z_star, K).margin;
  const A4Check a4 = check_A4(dp.Q, dp.sigma_tilde, K);
  m.A4_sigma = a4.sigma_margin;
  m.A4_Q = a4.q_margin;
  return m;
}

/// Loads making (sigma~ + Q) satisfy the discrete equilibrium equations exactly.
inline Loads manufactured_loads(const DualPoint& dp, const Grid& grid) {
  const MatrixField S = combined(dp.sigma_tilde, dp.Q);
  Loads loads = Loads::zero(grid);
  const VectorField div = divergence(S, grid);
  for (std::size_t id = 0; id < grid.node_count(); ++id) loads.body[id] = -div[id];
  for (Face f : kAllFaces) {
    auto& t = loads.traction[static_cast<int>(f)];
    if (grid.tag(f) != BoundaryTag::Gamma1) {
      t.clear();
      continue;
    }
    const auto& nodes = grid.face_nodes(f);
    const Vec3 n = outward_normal(f);
    t.resize(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) t[k] = S[nodes[k]] * n;
  }
  return loads;
}

/// Builds (z0*, sigma~0, Q0) from u0 and the loads that make it a critical point.
inline CriticalPointBundle manufacture_critical_point(const VectorField& u0, const LameParams& lame, double K,
                                                      const Grid& grid) {
  require_in_U(u0, grid);
  const SetCheck c1 = check_C1(u0, grid);
  if (!c1.ok) {
    std::ostringstream os;
    os << "u0 violates C1 (margin " << c1.margin << ")";
    throw ValidationError(os.str());
  }
  CriticalPointBundle b;
  b.u0 = u0;
  b.dual = manufactured_dual(u0, lame, K, grid);
  b.loads = manufactured_loads(b.dual, grid);

  const ManufacturedMargins m = manufactured_margins(u0, b.dual, K, grid);
  auto require = [](const char* set, double margin, bool ok) {
    if (!ok) {
      std::ostringstream os;
      os << "manufactured point violates " << set << " with margin " << margin;
      throw ValidationError(os.str());
    }
  };
  require("B1", m.B1, m.B1 > 0.0);
  require("B2", m.B2, m.B2 > 0.0);
  require("A4", std::min(m.A4_sigma, m.A4_Q), m.A4_sigma > 0.0 && m.A4_Q > 0.0);

  const MatrixField g = gradient(u0, grid);
  double el7 = 0.0, el10 = 0.0, el12 = 0.0;
  for (std::size_t id = 0; id < grid.node_count(); ++id) {
    const Mat3 s = svk_stress(green_strain_from_gradient(g[id]), lame);
    el7 = std::max(el7, (b.dual.z_star[id] - K * g[id]).cwiseAbs().maxCoeff());
    el10 = std::max(el10, (b.dual.sigma_tilde[id] - (s - K * g[id])).cwiseAbs().maxCoeff());
    el12 = std::max(el12, (b.dual.Q[id] - (g[id] * s + K * g[id])).cwiseAbs().maxCoeff());
  }
  const EquilibriumResiduals eq = equilibrium_residuals(b.dual.Q, b.dual.sigma_tilde, b.loads, grid);
  b.construction_log = {{"el7", el7},        {"el10", el10},         {"el12", el12},
                        {"A2", eq.A2},       {"A3", eq.A3},          {"margin_C1", m.C1},
                        {"margin_B1", m.B1}, {"margin_B2", m.B2},     {"margin_A4_sigma", m.A4_sigma},
                        {"margin_A4_Q", m.A4_Q}};
  return b;
}

/// Largest preset amplitude keeping every manufactured margin at or above the given fraction of its bound.
inline double auto_amplitude(Preset p, const LameParams& lame, double K, const Grid& grid, double fraction = 0.1) {
  if (p == Preset::Zero) return 0.0;
  const VectorField unit = preset_unit_field(p, grid);
  auto ok = [&](double a) {
    const VectorField u = scaled(unit, a);
    return manufactured_margins(u, manufactured_dual(u, lame, K, grid), K, grid).min_relative(K) >= fraction;
  };
  double lo = 0.0, hi = kC1Bound;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  if (!(lo > 0.0)) throw ValidationError("no positive amplitude meets the feasibility margins");
  return lo;
}

// ---------------------------------------------------------------------------
// Extremality residuals

struct ResidualNorm {
  double linf = 0.0;
  double l2 = 0.0;
};

using ResidualMap = std::map<std::string, ResidualNorm>;

namespace detail {

inline ResidualNorm matrix_residual(const MatrixField& r, const Grid& grid) {
  ResidualNorm n;
  double acc = 0.0;
  for (std::size_t id = 0; id < r.size(); ++id) {
    n.linf = std::max(n.linf, r[id].cwiseAbs().maxCoeff());
    acc += grid.weight(id) * r[id].squaredNorm();
  }
  n.l2 = std::sqrt(acc);
  return n;
}

/// Norms of div(S) + f on free nodes and S n - fhat on free Gamma1 face nodes.
inline std::pair<ResidualNorm, ResidualNorm> balance_residual(const MatrixField& S, const Loads& loads, const Grid& grid) {
  ResidualNorm in, bd;
  const VectorField div = divergence(S, grid);
  double acc = 0.0;
  for (std::size_t id = 0; id < grid.node_count(); ++id) {
    if (grid.is_pinned(id)) continue;
    const Vec3 r = div[id] + loads.body[id];
    in.linf = std::max(in.linf, r.cwiseAbs().maxCoeff());
    acc += grid.weight(id) * r.squaredNorm();
  }
  in.l2 = std::sqrt(acc);
  acc = 0.0;
  for (Face f : kAllFaces) {
    if (grid.tag(f) != BoundaryTag::Gamma1) continue;
    const auto& nodes = grid.face_nodes(f);
    const auto& w = grid.face_weights(f);
    const Vec3 n = outward_normal(f);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (grid.is_pinned(nodes[k])) continue;
      const Vec3 r = S[nodes[k]] * n - loads.traction[static_cast<int>(f)][k];
      bd.linf = std::max(bd.linf, r.cwiseAbs().maxCoeff());
      acc += w[k] * r.squaredNorm();
    }
  }
  bd.l2 = std::sqrt(acc);
  return {in, bd};
}

}  // namespace detail

/// Residual of every extremality equation at (u, dual) under the loads in cfg.
inline ResidualMap extremality_residuals(const VectorField& u, const DualPoint& dp, const ModelConfig& cfg) {
  const Grid& grid = cfg.grid;
  const double K = cfg.K;
  const std::size_t N = grid.node_count();
  const MatrixField g = gradient(u, grid);
  MatrixField r3(N), r5(N), r6(N), r7(N), r9(N), r10(N), r12(N), P15(N);
  for (std::size_t id = 0; id < N; ++id) {
    const Mat3& gi = g[id];
    const Mat3 s = svk_stress(green_strain_from_gradient(gi), cfg.lame);
    const Mat3 zs = dp.z_star[id] + dp.sigma_tilde[id];
    const Mat3 rhs56 = -0.5 * gi.transpose() * gi + cfg.compliance.apply(zs);
    r3[id] = dp.Q[id] - gi * zs.transpose() - K * gi;
    r5[id] = dp.z_star[id] / K - rhs56;
    r6[id] = gi - rhs56;
    r7[id] = dp.z_star[id] - K * gi;
    r9[id] = zs - s;
    r10[id] = dp.sigma_tilde[id] - (s - K * gi);
    r12[id] = dp.Q[id] - (gi * s + K * gi);
    P15[id] = s + s * gi;
  }
  ResidualMap m;
  m["el3"] = detail::matrix_residual(r3, grid);
  m["el5"] = detail::matrix_residual(r5, grid);
  m["el6"] = detail::matrix_residual(r6, grid);
  m["el7"] = detail::matrix_residual(r7, grid);
  m["el9"] = detail::matrix_residual(r9, grid);
  m["el10"] = detail::matrix_residual(r10, grid);
  m["el12"] = detail::matrix_residual(r12, grid);
  const auto [el13, el14] = detail::balance_residual(combined(dp.sigma_tilde, dp.Q), cfg.loads, grid);
  m["el13"] = el13;
  m["el14"] = el14;
  const auto [el15, el16] = detail::balance_residual(P15, cfg.loads, grid);
  m["el15"] = el15;
  m["el16"] = el16;
  return m;
}

// ---------------------------------------------------------------------------
// Recovery of u

/// Candidate displacement gradient g = Q A^{-1}, A = sym(z* + sigma~) + K I.
inline MatrixField recover_u_gradient(const DualPoint& dp, const ModelConfig& cfg) {
  MatrixField g(cfg.grid.node_count());
  for (std::size_t id = 0; id < g.size(); ++id) {
    try {
      g[id] = dp.Q[id] *
              shifted_inverse_power(shifted_matrix(dp.sigma_tilde[id], dp.z_star[id], cfg.K), -1, cfg.tol.condition_cap);
    } catch (const NumericalError& e) {
      throw NumericalError("shifted matrix not PD at node " + detail::node_label(cfg.grid, id) + ": " + e.what());
    }
  }
  return g;
}

struct IntegratedField {
  VectorField u;
  double integrability_residual = 0.0;
};

/// Weighted least-squares potential: u = 0 on Gamma0, minimising sum_n w_n |grad u - g|^2.
inline IntegratedField integrate_gradient(const MatrixField& g, const Grid& grid) {
  using SpMat = Eigen::SparseMatrix<double>;
  const std::size_t N = grid.node_count();
  std::vector<int> col(N, -1);
  int nfree = 0;
  for (std::size_t id = 0; id < N; ++id)
    if (!grid.is_pinned(id)) col[id] = nfree++;

  IntegratedField out;
  out.u.assign(N, Vec3::Zero());
  if (nfree > 0) {
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t id = 0; id < N; ++id)
      for (int j = 0; j < 3; ++j)
        grid.for_each_tap(id, j, [&](std::size_t nb, double w) {
          if (col[nb] >= 0) trip.emplace_back(static_cast<int>(3 * id + j), col[nb], w);
        });
    SpMat D(static_cast<int>(3 * N), nfree);
    D.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd wdiag(3 * N);
    for (std::size_t id = 0; id < N; ++id) wdiag.segment<3>(3 * id).setConstant(grid.weight(id));
    const SpMat DtW = D.transpose() * wdiag.asDiagonal();
    Eigen::SimplicialLDLT<SpMat> solver(SpMat(DtW * D));
    if (solver.info() != Eigen::Success) throw NumericalError("integrate_gradient: normal matrix factorisation failed");
    for (int i = 0; i < 3; ++i) {
      Eigen::VectorXd rhs(3 * N);
      for (std::size_t id = 0; id < N; ++id) rhs.segment<3>(3 * id) = g[id].row(i).transpose();
      Eigen::VectorXd x = solver.solve(DtW * rhs);
      x += solver.solve(DtW * (rhs - D * x));
      if (!x.allFinite()) throw NumericalError("integrate_gradient: solve did not converge");
      for (std::size_t id = 0; id < N; ++id)
        if (col[id] >= 0) out.u[id](i) = x(col[id]);
    }
  }
  const MatrixField gu = gradient(out.u, grid);
  double acc = 0.0;
  for (std::size_t id = 0; id < N; ++id) acc += grid.weight(id) * (gu[id] - g[id]).squaredNorm();
  out.integrability_residual = std::sqrt(acc);
  return out;
}

// ---------------------------------------------------------------------------
// Gap report

struct GapReport {
  EnergyBreakdown primal;
  double J_star = 0.0;
  double J_tilde_star = 0.0;
  double gap = 0.0;       // J(u) - J~*(Q, sigma~)
  double gap_star = 0.0;  // J(u) - J*(Q, sigma~, z*)
  double el17_residual = 0.0;
  double el18_residual = 0.0;
  int inner_iterations = 0;
  FeasibilityReport feasibility;
  ResidualMap extremality;
};

inline GapReport gap_report(const VectorField& u, const DualPoint& dp, const ModelConfig& cfg,
                            const SampledCheckOptions& checks = {}) {
  const Grid& grid = cfg.grid;
  GapReport r;
  r.primal = energy(u, cfg);
  r.J_star = J_star(dp, cfg);
  const InnerResult in = inner_min_z(dp.Q, dp.sigma_tilde, cfg, dp.z_star);
  r.J_tilde_star = in.value;
  r.inner_iterations = in.iterations;
  r.gap = r.primal.J - r.J_tilde_star;
  r.gap_star = r.primal.J - r.J_star;

  const MatrixField g = gradient(u, grid);
  double zg = 0.0, Fg = 0.0, Gk = 0.0;
  for (std::size_t id = 0; id < grid.node_count(); ++id) {
    const double w = grid.weight(id);
    zg += w * ddot(dp.z_star[id], g[id]);
    Fg += w * 0.5 * cfg.K * g[id].squaredNorm();
    Gk += w * gk_density(sym(g[id]), g[id], cfg.lame, cfg.K);
  }
  r.el17_residual = std::abs(F_star(dp.z_star, cfg.K, grid) - (zg - Fg));
  r.el18_residual = std::abs(GK_star(dp, cfg) - (zg + volume_work(u, cfg) + surface_work(u, cfg) - Gk));

  r.feasibility = feasibility_report(dp, cfg, &u, checks);
  r.extremality = extremality_residuals(u, dp, cfg);
  return r;
}

}  // namespace elastodual
