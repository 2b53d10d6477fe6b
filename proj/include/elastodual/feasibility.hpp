#pragma once
////////////////////////////////////////////////////////////////////////////////
// feasibility.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//      Constraint sets of the dual problem and their tests.
//
//        B1(sigma~) : sym(z* + sigma~) + K I >= K/2 I          (closed)
//        B2         : |z*_ij| < K/8                             (strict)
//        C1         : |u_i,j| < 1/8                             (strict)
//        A2         : div(sigma~ + Q) + f = 0     on free nodes
//        A3         : (sigma~ + Q) n - fhat = 0   on free Gamma1 face nodes
//        A4         : |sigma~_ij| < K/8, |Q_ij| < 3K/32         (strict)
//
//      Margins are signed distances to the constraint boundary (positive =
//      strictly feasible).  C and A1 have no constructive membership test;
//      check_C_sampled and check_A1_sampled are sampled necessary conditions.
//
//      A2/A3 together are a sparse linear system L S = b in the combined field
//      S = sigma~ + Q (9 unknowns per node).  EquilibriumOperator assembles L
//      once and factors the normal matrices used for minimum-norm corrections.
*/
////////////////////////////////////////////////////////////////////////////////

#include <optional>
#include <random>
#include <string>

#include <Eigen/Sparse>

#include "elastodual/conjugates.hpp"
#include "elastodual/grid.hpp"
#include "elastodual/model.hpp"
#include "elastodual/primal.hpp"

namespace elastodual {

struct SetCheck {
  bool ok = false;
  double margin = 0.0;
};

inline double b2_bound(double K) { return K / 8.0; }
inline double a4_sigma_bound(double K) { return K / 8.0; }
inline double a4_q_bound(double K) { return 3.0 * K / 32.0; }

/// Closed test by default; strict = true treats margin 0 as infeasible.
inline SetCheck check_B1(const MatrixField& z_star, const MatrixField& sigma_tilde, double K, bool strict = false) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t id = 0; id < z_star.size(); ++id) {
    const Mat3 m = sym(z_star[id] + sigma_tilde[id]) + 0.5 * K * Mat3::Identity();
    margin = std::min(margin, Eigen::SelfAdjointEigenSolver<Mat3>(m, Eigen::EigenvaluesOnly).eigenvalues()(0));
  }
  return {strict ? margin > 0.0 : margin >= 0.0, margin};
}

inline SetCheck check_B2(const MatrixField& z_star, double K) {
  const double m = b2_bound(K) - max_abs_entry(z_star);
  return {m > 0.0, m};
}

inline SetCheck check_C1(const VectorField& u, const Grid& grid) {
  const double m = c1_margin(gradient(u, grid));
  return {m > 0.0, m};
}

struct A4Check {
  bool ok = false;
  double sigma_margin = 0.0;
  double q_margin = 0.0;
};

inline A4Check check_A4(const MatrixField& Q, const MatrixField& sigma_tilde, double K) {
  A4Check c;
  c.sigma_margin = a4_sigma_bound(K) - max_abs_entry(sigma_tilde);
  c.q_margin = a4_q_bound(K) - max_abs_entry(Q);
  c.ok = c.sigma_margin > 0.0 && c.q_margin > 0.0;
  return c;
}

/// All componentwise box sets at once; u and the dual fields are optional.
struct BoxSets {
  std::optional<SetCheck> C1;
  std::optional<SetCheck> B2;
  std::optional<A4Check> A4;
};

inline BoxSets check_box_sets(const Grid& grid, double K, const VectorField* u, const DualPoint* dp) {
  BoxSets b;
  if (u) b.C1 = check_C1(*u, grid);
  if (dp) {
    b.B2 = check_B2(dp->z_star, K);
    b.A4 = check_A4(dp->Q, dp->sigma_tilde, K);
  }
  return b;
}

// ---------------------------------------------------------------------------
// Equilibrium

struct EquilibriumResiduals {
  double A2 = 0.0;
  double A3 = 0.0;
};

inline MatrixField combined(const MatrixField& a, const MatrixField& b) {
  MatrixField s(a.size());
  for (std::size_t id = 0; id < a.size(); ++id) s[id] = a[id] + b[id];
  return s;
}

/// Weighted L2 norms of div(S) + f on free nodes and S n - fhat on free Gamma1 face nodes.
inline EquilibriumResiduals equilibrium_residuals(const MatrixField& Q, const MatrixField& sigma_tilde, const Loads& loads,
                                                  const Grid& grid) {
  const MatrixField S = combined(sigma_tilde, Q);
  VectorField r = divergence(S, grid);
  for (std::size_t id = 0; id < r.size(); ++id) r[id] += loads.body[id];
  EquilibriumResiduals out;
  out.A2 = free_l2_norm(r, grid);
  double acc = 0.0;
  for (Face f : kAllFaces) {
    if (grid.tag(f) != BoundaryTag::Gamma1) continue;
    const auto& nodes = grid.face_nodes(f);
    const auto& w = grid.face_weights(f);
    const Vec3 n = outward_normal(f);
    for (std::size_t k = 0; k < nodes.size(); ++k)
      if (!grid.is_pinned(nodes[k]))
        acc += w[k] * (S[nodes[k]] * n - loads.traction[static_cast<int>(f)][k]).squaredNorm();
  }
  out.A3 = std::sqrt(acc);
  return out;
}

class EquilibriumOperator {
 public:
  using SpMat = Eigen::SparseMatrix<double>;
  using Vec = Eigen::VectorXd;

  EquilibriumOperator(const Grid& grid, const Loads& loads) : grid_(grid) {
    const std::size_t N = grid.node_count();
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> rhs;
    int row = 0;
    for (std::size_t id = 0; id < N; ++id) {
      if (grid.is_pinned(id)) continue;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j)
          grid.for_each_tap(id, j, [&](std::size_t nb, double w) {
            trip.emplace_back(row, static_cast<int>(9 * nb + 3 * i + j), w);
          });
        rhs.push_back(-loads.body[id](i));
        ++row;
      }
    }
    for (Face f : kAllFaces) {
      if (grid.tag(f) != BoundaryTag::Gamma1) continue;
      const auto& nodes = grid.face_nodes(f);
      const int axis = face_axis(f);
      const double sgn = face_is_upper(f) ? 1.0 : -1.0;
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (grid.is_pinned(nodes[k])) continue;
        for (int i = 0; i < 3; ++i) {
          trip.emplace_back(row, static_cast<int>(9 * nodes[k] + 3 * i + axis), sgn);
          rhs.push_back(loads.traction[static_cast<int>(f)][k](i));
          ++row;
        }
      }
    }
    L_.resize(row, static_cast<int>(9 * N));
    L_.setFromTriplets(trip.begin(), trip.end());
    b_ = Eigen::Map<const Vec>(rhs.data(), static_cast<int>(rhs.size()));

    std::vector<Eigen::Triplet<double>> pt;
    for (std::size_t id = 0; id < N; ++id)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const int r = static_cast<int>(9 * id + 3 * i + j);
          pt.emplace_back(r, r, 0.5);
          pt.emplace_back(r, static_cast<int>(9 * id + 3 * j + i), 0.5);
        }
    SpMat sym_proj(9 * N, 9 * N);
    sym_proj.setFromTriplets(pt.begin(), pt.end());
    LP_ = L_ * sym_proj;

    normal_q_.compute(SpMat(L_ * L_.transpose()));
    if (normal_q_.info() != Eigen::Success) throw NumericalError("projection failed: equilibrium operator factorisation");
    normal_joint_.compute(SpMat(L_ * L_.transpose() + LP_ * LP_.transpose()));
    if (normal_joint_.info() != Eigen::Success) throw NumericalError("projection failed: equilibrium operator factorisation");
  }

  const SpMat& matrix() const { return L_; }
  const Vec& rhs() const { return b_; }
  int constraint_count() const { return static_cast<int>(L_.rows()); }

  static Vec flatten(const MatrixField& m) {
    Vec v(9 * m.size());
    for (std::size_t id = 0; id < m.size(); ++id)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) v(9 * id + 3 * i + j) = m[id](i, j);
    return v;
  }
  static MatrixField unflatten(const Vec& v) {
    MatrixField m(v.size() / 9);
    for (std::size_t id = 0; id < m.size(); ++id)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m[id](i, j) = v(9 * id + 3 * i + j);
    return m;
  }

  /// L S - b.
  Vec residual(const MatrixField& Q, const MatrixField& sigma_tilde) const {
    return L_ * flatten(combined(sigma_tilde, Q)) - b_;
  }

  /// Minimum-norm correction of S = sigma~ + Q, applied to Q only.
  MatrixField project_Q(const MatrixField& Q, const MatrixField& sigma_tilde, double tol) const {
    Vec q = flatten(Q);
    const Vec s = flatten(sigma_tilde);
    const double scale = 1.0 + b_.cwiseAbs().maxCoeff() + (q + s).cwiseAbs().maxCoeff();
    for (int pass = 0; pass < 4; ++pass) {
      const Vec r = L_ * (q + s) - b_;
      if (r.cwiseAbs().maxCoeff() <= 1e-3 * tol * scale && pass > 0) break;
      q -= L_.transpose() * normal_q_.solve(r);
    }
    const Vec r = L_ * (q + s) - b_;
    if (!(r.cwiseAbs().maxCoeff() <= tol * scale)) throw NumericalError("projection failed");
    return unflatten(q);
  }

  /// Minimum-norm (Q, sigma~) with sigma~ symmetric satisfying L (Q + sigma~) = b.
  std::pair<MatrixField, MatrixField> minimum_norm_point() const {
    Vec y = normal_joint_.solve(b_);
    // one refinement step
    const Vec r = L_ * (L_.transpose() * y + LP_.transpose() * y) - b_;
    y -= normal_joint_.solve(r);
    return {unflatten(L_.transpose() * y), unflatten(LP_.transpose() * y)};
  }

  /// Orthogonal projection of a direction (dQ, dsigma symmetric) onto the null space of the constraint.
  void project_direction(MatrixField& dQ, MatrixField& dsigma) const {
    Vec q = flatten(dQ), s = flatten(dsigma);
    for (int pass = 0; pass < 2; ++pass) {
      const Vec r = L_ * (q + s);
      const Vec y = normal_joint_.solve(r);
      q -= L_.transpose() * y;
      s -= LP_.transpose() * y;
    }
    dQ = unflatten(q);
    dsigma = unflatten(s);
  }

 private:
  const Grid& grid_;
  SpMat L_;
  SpMat LP_;
  Vec b_;
  Eigen::SimplicialLDLT<SpMat> normal_q_;
  Eigen::SimplicialLDLT<SpMat> normal_joint_;
};

/// Minimal-norm correction of sigma~ + Q onto A2 and A3, absorbed entirely by Q.
inline std::pair<MatrixField, MatrixField> project_equilibrium(const MatrixField& Q, const MatrixField& sigma_tilde,
                                                                const Loads& loads, const Grid& grid,
                                                                double tol = 1e-10) {
  const EquilibriumOperator op(grid, loads);
  return {op.project_Q(Q, sigma_tilde, tol), sigma_tilde};
}

// ---------------------------------------------------------------------------
// Projection onto B*(sigma~) = B1(sigma~) intersect B2, node by node

namespace detail {

inline Mat3 project_box(const Mat3& z, double bound) { return z.cwiseMax(-bound).cwiseMin(bound); }

/// Frobenius projection onto {z : sym(z + sigma~) + K/2 I >= 0}; only the symmetric part moves.
inline Mat3 project_b1(const Mat3& z, const Mat3& sigma_tilde, double K) {
  const Mat3 shift = sym(sigma_tilde) + 0.5 * K * Mat3::Identity();
  const Mat3 m = sym(z) + shift;
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  if (es.eigenvalues()(0) >= 0.0) return z;
  const Vec3 ev = es.eigenvalues().cwiseMax(0.0);
  const Mat3 clamped = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return skew(z) + clamped - shift;
}

}  // namespace detail

inline bool in_B_star_node(const Mat3& z, const Mat3& sigma_tilde, double K, double slack = 0.0) {
  if (z.cwiseAbs().maxCoeff() >= b2_bound(K)) return false;
  const Mat3 m = sym(z + sigma_tilde) + 0.5 * K * Mat3::Identity();
  return Eigen::SelfAdjointEigenSolver<Mat3>(m, Eigen::EigenvaluesOnly).eigenvalues()(0) >= -slack;
}

/// Dykstra alternating projections onto box intersect B1 (the box is shrunk by a hair to keep it open).
inline Mat3 project_B_star_node(const Mat3& z0, const Mat3& sigma_tilde, double K, int max_alternations = 100) {
  const double bound = b2_bound(K) * (1.0 - 1e-9);
  if (in_B_star_node(z0, sigma_tilde, K) && z0.cwiseAbs().maxCoeff() <= bound) return z0;
  Mat3 x = z0, p = Mat3::Zero(), q = Mat3::Zero();
  for (int it = 0; it < max_alternations; ++it) {
    const Mat3 y = detail::project_box(x + p, bound);
    p = x + p - y;
    const Mat3 xn = detail::project_b1(y + q, sigma_tilde, K);
    q = y + q - xn;
    const double change = (xn - x).cwiseAbs().maxCoeff();
    x = xn;
    if (change < 1e-15 * (1.0 + K)) break;
  }
  // finish on the box side so B2 holds exactly; B1 is then met up to round-off
  x = detail::project_box(x, bound);
  if (!in_B_star_node(x, sigma_tilde, K, 1e-12 * K)) throw NumericalError("B* empty at node");
  return x;
}

inline MatrixField project_B_star(const MatrixField& z, const MatrixField& sigma_tilde, double K, const Grid& grid,
                                  int max_alternations = 100) {
  MatrixField out(z.size());
  for (std::size_t id = 0; id < z.size(); ++id) {
    try {
      out[id] = project_B_star_node(z[id], sigma_tilde[id], K, max_alternations);
    } catch (const NumericalError&) {
      throw NumericalError("B* empty at node " + detail::node_label(grid, id));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampled tests for C and A1

struct CWitness {
  std::size_t node = 0;
  Mat3 v1 = Mat3::Zero();
  Mat3 v2 = Mat3::Zero();
  double violation = 0.0;
};

struct CSampledResult {
  bool pass = true;
  std::optional<CWitness> witness;
};

struct SampledCheckOptions {
  int nodes = 50;
  int directions = 200;
  double radius = 1.0;
  double tol = 1e-10;
  std::uint64_t seed = 0;
};

/// Gradient of the G_K density in packed (v1 sym, v2) coordinates.
inline Eigen::VectorXd gk_density_gradient(const Mat3& v1, const Mat3& v2, const LameParams& lame, double K) {
  const Mat3 y = v1 + 0.5 * v2.transpose() * v2;
  const Mat3 Hy = lame.lambda * y.trace() * Mat3::Identity() + 2.0 * lame.mu * y;
  return pack_star(Hy, v2 * Hy + K * v2);
}

/// Supporting-hyperplane test of the G_K density at (Lambda1 u, Lambda2 u) on random nodes.
inline CSampledResult check_C_sampled(const VectorField& u, const ModelConfig& cfg, const SampledCheckOptions& opt = {}) {
  const Grid& grid = cfg.grid;
  const MatrixField g = gradient(u, grid);
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick(0, grid.node_count() - 1);
  std::uniform_real_distribution<double> box(-opt.radius, opt.radius);
  CSampledResult res;
  for (int s = 0; s < opt.nodes; ++s) {
    const std::size_t id = pick(rng);
    const Mat3 v1 = sym(g[id]);
    const Mat3& v2 = g[id];
    const double d0 = gk_density(v1, v2, cfg.lame, cfg.K);
    const Eigen::VectorXd p = gk_density_gradient(v1, v2, cfg.lame, cfg.K);
    const Eigen::VectorXd x0 = pack_pair(v1, v2);
    for (int k = 0; k < opt.directions; ++k) {
      Eigen::VectorXd dx(15);
      for (int c = 0; c < 15; ++c) dx(c) = box(rng);
      const auto [w1, w2] = unpack_pair(x0 + dx);
      const double gap = gk_density(w1, w2, cfg.lame, cfg.K) - d0 - p.dot(dx);
      if (gap < -opt.tol * (1.0 + std::abs(d0))) {
        if (res.pass || gap < -res.witness->violation) res.witness = CWitness{id, w1, w2, -gap};
        res.pass = false;
      }
    }
  }
  return res;
}

struct A1SampledResult {
  bool pass = true;
  double worst_deviation = 0.0;
};

/// For each sample u: sup over z* in B*(sigma~) of <z*, grad u> - F*(z*) against (K/2)|grad u|^2.
/// The maximiser is the projection of K grad u onto B*(sigma~), node by node.
inline A1SampledResult check_A1_sampled(const MatrixField& sigma_tilde, const ModelConfig& cfg,
                                        const std::vector<VectorField>& u_samples, double rel_tol = 1e-6) {
  const Grid& grid = cfg.grid;
  A1SampledResult res;
  for (const VectorField& u : u_samples) {
    const MatrixField g = gradient(u, grid);
    double sup = 0.0, target = 0.0;
    for (std::size_t id = 0; id < grid.node_count(); ++id) {
      const double w = grid.weight(id);
      const Mat3 z = project_B_star_node(cfg.K * g[id], sigma_tilde[id], cfg.K);
      sup += w * (ddot(z, g[id]) - z.squaredNorm() / (2.0 * cfg.K));
      target += w * 0.5 * cfg.K * g[id].squaredNorm();
    }
    const double dev = target > 0.0 ? std::abs(target - sup) / target : std::abs(sup);
    res.worst_deviation = std::max(res.worst_deviation, dev);
  }
  res.pass = res.worst_deviation < rel_tol;
  return res;
}

// ---------------------------------------------------------------------------

struct FeasibilityReport {
  SetCheck B1;
  SetCheck B2;
  std::optional<SetCheck> C1;
  A4Check A4;
  EquilibriumResiduals equilibrium;
  std::optional<CSampledResult> C_sampled;
  std::optional<A1SampledResult> A1_sampled;
  bool A_star_verified = false;
};

/// Dual-point feasibility; u (optional) adds C1 and the sampled C check.  A1 is sampled
/// on a1_samples, or on {u} / {0} when none are given.
inline FeasibilityReport feasibility_report(const DualPoint& dp, const ModelConfig& cfg, const VectorField* u = nullptr,
                                            const SampledCheckOptions& opt = {},
                                            std::vector<VectorField> a1_samples = {}) {
  FeasibilityReport r;
  r.B1 = check_B1(dp.z_star, dp.sigma_tilde, cfg.K);
  r.B2 = check_B2(dp.z_star, cfg.K);
  r.A4 = check_A4(dp.Q, dp.sigma_tilde, cfg.K);
  r.equilibrium = equilibrium_residuals(dp.Q, dp.sigma_tilde, cfg.loads, cfg.grid);
  if (u) {
    r.C1 = check_C1(*u, cfg.grid);
    r.C_sampled = check_C_sampled(*u, cfg, opt);
  }
  if (a1_samples.empty()) a1_samples.push_back(u ? *u : VectorField(cfg.grid.node_count(), Vec3::Zero()));
  r.A1_sampled = check_A1_sampled(dp.sigma_tilde, cfg, a1_samples);
  const double eq_tol = 1e-8;
  r.A_star_verified = r.A4.ok && r.equilibrium.A2 <= eq_tol && r.equilibrium.A3 <= eq_tol && r.A1_sampled &&
                      r.A1_sampled->pass;
  return r;
}

}  // namespace elastodual
