#pragma once
////////////////////////////////////////////////////////////////////////////////
// conjugates.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//      Dual energies.  For a dual point (Q, sigma~, z*) and s = sigma~ + z*:
//
//          F*(z*)          = 1/(2K) sum_n w_n z*:z*
//          G_K*(Q,sigma~,z*) = sum_n w_n [ 1/2 sum_m Q_m A^{-1} Q_m^T + 1/2 Hbar s : s ]
//          J*              = F* - G_K*
//
//      with A = sym(s) + K I.  The pointwise G_K density is convex in
//      (v1, v2) only through the sup, so the closed form above is its exact
//      Legendre-Fenchel conjugate whenever A is positive definite, with v1
//      ranging over symmetric matrices.  Only sym(s) enters G_K*.
//
//      conjugate_oracle() evaluates a conjugate by brute force (grid or random
//      2-d slices, then compass-search refinement); it is a lower bound on the
//      true supremum and exists to cross-check the closed forms.
*/
////////////////////////////////////////////////////////////////////////////////

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <sstream>

#include "elastodual/grid.hpp"
#include "elastodual/model.hpp"

namespace elastodual {

struct DualPoint {
  MatrixField Q;
  MatrixField sigma_tilde;
  MatrixField z_star;

  static DualPoint zero(const Grid& g) {
    return {MatrixField(g.node_count(), Mat3::Zero()), MatrixField(g.node_count(), Mat3::Zero()),
            MatrixField(g.node_count(), Mat3::Zero())};
  }
};

/// A = sym(sigma~ + z*) + K I at one node.
inline Mat3 shifted_matrix(const Mat3& sigma_tilde, const Mat3& z_star, double K) {
  return sym(sigma_tilde + z_star) + K * Mat3::Identity();
}

/// Pointwise closed-form conjugate density; throws NumericalError if A is not PD.
inline double gk_star_density(const Mat3& Q, const Mat3& s, double K, const ComplianceTensor& Hbar,
                              double cap = kDefaultConditionCap) {
  const Mat3 Ainv = shifted_inverse_power(sym(s) + K * Mat3::Identity(), -1, cap);
  return 0.5 * (Q * Ainv * Q.transpose()).trace() + 0.5 * ddot(Hbar.apply(s), sym(s));
}

/// G_K density 1/2 H(v1 + v2^T v2/2):(v1 + v2^T v2/2) + K/2 |v2|^2.
inline double gk_density(const Mat3& v1, const Mat3& v2, const LameParams& lame, double K) {
  const Mat3 y = v1 + 0.5 * v2.transpose() * v2;
  const double tr = y.trace();
  return 0.5 * lame.lambda * tr * tr + lame.mu * ddot(y, y) + 0.5 * K * v2.squaredNorm();
}

/// Maximiser (v1, v2) of <s, v1> + <Q, v2> - G_K(v1, v2) when A is PD.
inline std::pair<Mat3, Mat3> gk_stationary_point(const Mat3& Q, const Mat3& s, double K, const ComplianceTensor& Hbar) {
  const Mat3 v2 = Q * shifted_inverse_power(sym(s) + K * Mat3::Identity(), -1);
  const Mat3 v1 = Hbar.apply(s) - 0.5 * v2.transpose() * v2;
  return {v1, v2};
}

namespace detail {

inline std::string node_label(const Grid& g, std::size_t id) {
  const auto c = g.ijk(id);
  std::ostringstream os;
  os << "(" << c[0] << "," << c[1] << "," << c[2] << ")";
  return os.str();
}

}  // namespace detail

inline double F_star(const MatrixField& z_star, double K, const Grid& grid) {
  double acc = 0.0;
  for (std::size_t id = 0; id < grid.node_count(); ++id) acc += grid.weight(id) * z_star[id].squaredNorm();
  return acc / (2.0 * K);
}

inline double GK_star(const DualPoint& dp, const ModelConfig& cfg) {
  const Grid& grid = cfg.grid;
  double acc = 0.0;
  for (std::size_t id = 0; id < grid.node_count(); ++id) {
    double d;
    try {
      d = gk_star_density(dp.Q[id], dp.sigma_tilde[id] + dp.z_star[id], cfg.K, cfg.compliance, cfg.tol.condition_cap);
    } catch (const NumericalError& e) {
      throw NumericalError("shifted matrix not PD at node " + detail::node_label(grid, id) + ": " + e.what());
    }
    acc += grid.weight(id) * d;
  }
  return acc;
}

inline double J_star(const DualPoint& dp, const ModelConfig& cfg) {
  return F_star(dp.z_star, cfg.K, cfg.grid) - GK_star(dp, cfg);
}

/// Pointwise z*-gradient of the J* density: z/K + 1/2 A^{-1} Q^T Q A^{-1} - Hbar(s).
inline Mat3 j_star_density_grad_z(const Mat3& Q, const Mat3& sigma_tilde, const Mat3& z, double K,
                                  const ComplianceTensor& Hbar) {
  const Mat3 Ainv = shifted_inverse_power(shifted_matrix(sigma_tilde, z, K), -1);
  const Mat3 gtg = Ainv * Q.transpose() * Q * Ainv;
  return z / K + 0.5 * gtg - Hbar.apply(sigma_tilde + z);
}

/// Gradient of J* with respect to the z* node values (includes quadrature weights).
inline MatrixField J_star_grad_z(const DualPoint& dp, const ModelConfig& cfg) {
  MatrixField r(cfg.grid.node_count());
  for (std::size_t id = 0; id < r.size(); ++id)
    r[id] = cfg.grid.weight(id) * j_star_density_grad_z(dp.Q[id], dp.sigma_tilde[id], dp.z_star[id], cfg.K, cfg.compliance);
  return r;
}

struct DualPartials {
  MatrixField dQ;
  MatrixField dsigma;
};

/// Partial derivatives of J* in Q and sigma~ at fixed z* (quadrature weights included).
inline DualPartials J_star_partials(const DualPoint& dp, const ModelConfig& cfg) {
  DualPartials p{MatrixField(cfg.grid.node_count()), MatrixField(cfg.grid.node_count())};
  for (std::size_t id = 0; id < cfg.grid.node_count(); ++id) {
    const double w = cfg.grid.weight(id);
    const Mat3 Ainv = shifted_inverse_power(shifted_matrix(dp.sigma_tilde[id], dp.z_star[id], cfg.K), -1);
    const Mat3 Q = dp.Q[id];
    p.dQ[id] = -w * Q * Ainv;
    p.dsigma[id] = -w * (cfg.compliance.apply(dp.sigma_tilde[id] + dp.z_star[id]) - 0.5 * Ainv * Q.transpose() * Q * Ainv);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Second variation in z*

using Mat9 = Eigen::Matrix<double, 9, 9>;

inline Mat3 unit_matrix(int a) {
  Mat3 e = Mat3::Zero();
  e(a / 3, a % 3) = 1.0;
  return e;
}

/// Diagonal-majorant form D/K - M3 - Hbar with (M3)_{ijij} = [A^{-3}]_ij (Q^T Q)_ij.
inline Mat9 hessian_zz_bound_form(const Mat3& Q, const Mat3& A, double K, const ComplianceTensor& Hbar) {
  const Mat3 A3 = shifted_inverse_power(A, -3);
  const Mat3 qq = Q.transpose() * Q;
  Mat9 m = Mat9::Identity() / K - Hbar.components.as_matrix();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(3 * i + j, 3 * i + j) -= A3(i, j) * qq(i, j);
  return m;
}

/// Exact second derivative of the pointwise J* density in z*.
inline Mat9 hessian_zz_exact_form(const Mat3& Q, const Mat3& A, double K, const ComplianceTensor& Hbar) {
  const Mat3 Ainv = shifted_inverse_power(A, -1);
  const Mat3 g = Q * Ainv;
  std::array<Mat3, 9> X;
  for (int a = 0; a < 9; ++a) X[a] = sym(unit_matrix(a));
  Mat9 m = Mat9::Identity() / K - Hbar.components.as_matrix();
  for (int a = 0; a < 9; ++a)
    for (int b = a; b < 9; ++b) {
      const double t = 0.5 * ((g * X[a] * Ainv * X[b] * g.transpose()).trace() +
                              (g * X[b] * Ainv * X[a] * g.transpose()).trace());
      m(a, b) -= t;
      if (b != a) m(b, a) -= t;
    }
  return m;
}

inline double min_eigenvalue(const Mat9& m) {
  return Eigen::SelfAdjointEigenSolver<Mat9>(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly).eigenvalues()(0);
}

struct HessianReport {
  ScalarField min_eig_field;
  double global_min = 0.0;
  double lower_bound_M = 0.0;
  ScalarField exact_min_eig_field;
  double exact_global_min = 0.0;
};

inline HessianReport hessian_zz(const DualPoint& dp, const ModelConfig& cfg) {
  const Grid& grid = cfg.grid;
  HessianReport r;
  r.min_eig_field.resize(grid.node_count());
  r.exact_min_eig_field.resize(grid.node_count());
  r.global_min = std::numeric_limits<double>::infinity();
  r.exact_global_min = std::numeric_limits<double>::infinity();
  for (std::size_t id = 0; id < grid.node_count(); ++id) {
    const Mat3 A = shifted_matrix(dp.sigma_tilde[id], dp.z_star[id], cfg.K);
    try {
      r.min_eig_field[id] = min_eigenvalue(hessian_zz_bound_form(dp.Q[id], A, cfg.K, cfg.compliance));
      r.exact_min_eig_field[id] = min_eigenvalue(hessian_zz_exact_form(dp.Q[id], A, cfg.K, cfg.compliance));
    } catch (const NumericalError& e) {
      throw NumericalError("shifted matrix not PD at node " + detail::node_label(grid, id) + ": " + e.what());
    }
    r.global_min = std::min(r.global_min, r.min_eig_field[id]);
    r.exact_global_min = std::min(r.exact_global_min, r.exact_min_eig_field[id]);
  }
  r.lower_bound_M = min_eigenvalue_sym4(make_stability(cfg.compliance, cfg.K).components, Subspace::Symmetric);
  return r;
}

// ---------------------------------------------------------------------------
// Brute-force conjugate

struct OracleOptions {
  enum class Mode { FullGrid, RandomSlices };
  Mode mode = Mode::RandomSlices;
  double search_box = 1.0;
  int resolution = 5;
  int slices = 20;
  int refine_iterations = 60;
  int max_sweeps_per_step = 200;
  std::optional<Eigen::VectorXd> anchor;
  std::uint64_t seed = 0;
};

struct OracleResult {
  double value = 0.0;
  Eigen::VectorXd argmax;
};

/// max over sampled v in [-B,B]^d of <star, v> - density(v), refined by compass search.
inline OracleResult conjugate_oracle(const std::function<double(const Eigen::VectorXd&)>& density,
                                     const Eigen::VectorXd& star, const OracleOptions& opt) {
  const int d = static_cast<int>(star.size());
  if (opt.resolution < 5) throw ValidationError("conjugate_oracle: resolution must be at least 5");
  const double B = opt.search_box;
  const double cell = 2.0 * B / (opt.resolution - 1);
  auto objective = [&](const Eigen::VectorXd& v) { return star.dot(v) - density(v); };
  auto inside = [&](const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff() <= B; };

  OracleResult best;
  best.value = -std::numeric_limits<double>::infinity();
  auto consider = [&](const Eigen::VectorXd& v) {
    if (!inside(v)) return;
    const double f = objective(v);
    if (f > best.value) {
      best.value = f;
      best.argmax = v;
    }
  };

  if (opt.mode == OracleOptions::Mode::FullGrid) {
    std::vector<int> idx(d, 0);
    Eigen::VectorXd v(d);
    while (true) {
      for (int k = 0; k < d; ++k) v(k) = -B + cell * idx[k];
      consider(v);
      int k = 0;
      while (k < d && ++idx[k] == opt.resolution) idx[k++] = 0;
      if (k == d) break;
    }
  } else {
    const Eigen::VectorXd anchor = opt.anchor.value_or(Eigen::VectorXd::Zero(d));
    consider(anchor);
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal;
    for (int s = 0; s < opt.slices; ++s) {
      Eigen::VectorXd d1(d), d2(d);
      for (int k = 0; k < d; ++k) d1(k) = normal(rng);
      for (int k = 0; k < d; ++k) d2(k) = normal(rng);
      d1.normalize();
      d2 -= d2.dot(d1) * d1;
      d2.normalize();
      for (int a = 0; a < opt.resolution; ++a)
        for (int b = 0; b < opt.resolution; ++b) consider(anchor + (-B + cell * a) * d1 + (-B + cell * b) * d2);
    }
  }
  if (best.argmax.size() == 0) throw NumericalError("conjugate_oracle: no sample inside the search box");

  double step = cell;
  for (int it = 0; it < opt.refine_iterations; ++it) {
    for (int sweep = 0; sweep < opt.max_sweeps_per_step; ++sweep) {
      bool improved = false;
      for (int k = 0; k < d; ++k)
        for (double sgn : {1.0, -1.0}) {
          Eigen::VectorXd v = best.argmax;
          v(k) += sgn * step;
          if (!inside(v)) continue;
          const double f = objective(v);
          if (f > best.value) {
            best.value = f;
            best.argmax = v;
            improved = true;
          }
        }
      if (!improved) break;
    }
    step *= 0.5;
  }
  if (best.argmax.cwiseAbs().maxCoeff() >= B * (1.0 - 1e-12)) throw NumericalError("sup appears unbounded");
  return best;
}

/// Parameters of (v1 symmetric, v2 full): 6 + 9 coordinates.
inline Eigen::VectorXd pack_pair(const Mat3& v1, const Mat3& v2) {
  Eigen::VectorXd p(15);
  p << v1(0, 0), v1(1, 1), v1(2, 2), v1(0, 1), v1(0, 2), v1(1, 2), v2.reshaped<Eigen::RowMajor>();
  return p;
}

inline std::pair<Mat3, Mat3> unpack_pair(const Eigen::VectorXd& p) {
  Mat3 v1;
  v1 << p(0), p(3), p(4), p(3), p(1), p(5), p(4), p(5), p(2);
  Mat3 v2;
  for (int k = 0; k < 9; ++k) v2(k / 3, k % 3) = p(6 + k);
  return {v1, v2};
}

/// Dual coordinates so that star . pack_pair(v1, v2) = <s1, v1> + <s2, v2>.
inline Eigen::VectorXd pack_star(const Mat3& s1, const Mat3& s2) {
  Eigen::VectorXd p(15);
  p << s1(0, 0), s1(1, 1), s1(2, 2), s1(0, 1) + s1(1, 0), s1(0, 2) + s1(2, 0), s1(1, 2) + s1(2, 1),
      s2.reshaped<Eigen::RowMajor>();
  return p;
}

/// Brute-force pointwise G_K* at (Q, s), anchored at the analytic stationary point when A is PD.
inline OracleResult gk_star_oracle(const Mat3& Q, const Mat3& s, const LameParams& lame, double K, OracleOptions opt) {
  const ComplianceTensor Hbar = invert_hooke(make_hooke(lame));
  if (!opt.anchor) {
    const auto [v1, v2] = gk_stationary_point(Q, s, K, Hbar);
    opt.anchor = pack_pair(v1, v2);
  }
  auto density = [&](const Eigen::VectorXd& p) {
    const auto [v1, v2] = unpack_pair(p);
    return gk_density(v1, v2, lame, K);
  };
  return conjugate_oracle(density, pack_star(s, Q), opt);
}

}  // namespace elastodual
