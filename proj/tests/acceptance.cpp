// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "elastodual/elastodual.hpp"
#include "elastodual/report.hpp"

using namespace elastodual;

namespace {

const LameParams kLame{1.0, 1.0};

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int n, const std::string& title, const Outcome& o, double seconds) {
  std::printf("criterion %d %s  %s  (%s, %.1fs)\n", n, o.pass ? "PASS" : "FAIL", title.c_str(), o.detail.c_str(), seconds);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

template <class Fn>
void run(int n, const std::string& title, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  report(n, title, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Grid cube(int n) {
  GridConfig c;
  c.dims = {n, n, n};
  return Grid(c);
}

Mat3 random_matrix(std::mt19937_64& rng, double r) {
  std::uniform_real_distribution<double> d(-r, r);
  Mat3 m;
  for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = d(rng);
  return m;
}

// Smooth displacement vanishing on x = 0, rescaled to max |grad u| = target.
VectorField random_smooth_field(const Grid& g, std::mt19937_64& rng, double target) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  double c[3][6];
  for (auto& row : c)
    for (double& v : row) v = d(rng);
  VectorField u = sample_vector(g, [&](const Vec3& x) {
    Vec3 r;
    for (int m = 0; m < 3; ++m)
      r(m) = x(0) * (c[m][0] + c[m][1] * x(0) + c[m][2] * std::sin(M_PI * x(1) + c[m][3]) + c[m][4] * std::cos(2 * x(2)) +
                     c[m][5] * x(1) * x(2));
    return r;
  });
  for (std::size_t id = 0; id < g.node_count(); ++id)
    if (g.is_pinned(id)) u[id].setZero();
  const double gmax = max_abs_entry(gradient(u, g));
  for (Vec3& v : u) v *= target / gmax;
  return u;
}

struct Manufactured {
  CriticalPointBundle bundle;
  ModelConfig cfg;
};

Manufactured manufactured(const Grid& g, double amp, double K) {
  CriticalPointBundle b = manufacture_critical_point(scaled(preset_unit_field(Preset::SineBump, g), amp), kLame, K, g);
  ModelConfig cfg = make_model(kLame, K, g, b.loads);
  return {std::move(b), std::move(cfg)};
}

// 1. closed-form conjugate against the brute-force supremum
Outcome criterion1() {
  const double K = select_K(kLame, 0.5);
  const ComplianceTensor Hbar = invert_hooke(make_hooke(kLame));
  std::mt19937_64 rng(1001);
  double worst = 0.0, worst_f = 0.0;
  int used = 0;
  while (used < 100) {
    const Mat3 Q = random_matrix(rng, a4_q_bound(K));
    const Mat3 s = sym(random_matrix(rng, 0.3));
    const Mat3 A = s + K * Mat3::Identity();
    if (!(Eigen::SelfAdjointEigenSolver<Mat3>(A).eigenvalues()(0) > 0.05)) continue;
    const auto [v1, v2] = gk_stationary_point(Q, s, K, Hbar);
    OracleOptions opt;
    opt.seed = 7000 + used;
    opt.anchor = Eigen::VectorXd::Zero(15);  // search starts away from the analytic maximiser
    if (std::max(v1.cwiseAbs().maxCoeff(), v2.cwiseAbs().maxCoeff()) > 0.5 * opt.search_box) continue;
    const double closed = gk_star_density(Q, s, K, Hbar);
    const double oracle = gk_star_oracle(Q, s, kLame, K, opt).value;
    worst = std::max(worst, std::abs(closed - oracle) / (1 + std::abs(closed)));

    const Mat3 z = random_matrix(rng, b2_bound(K));
    auto quad = [&](const Eigen::VectorXd& p) { return 0.5 * K * unpack_pair(p).second.squaredNorm(); };
    const double fo = conjugate_oracle(quad, pack_star(Mat3::Zero(), z), opt).value;
    worst_f = std::max(worst_f, std::abs(fo - z.squaredNorm() / (2 * K)));
    ++used;
  }
  return {worst < 1e-3 && worst_f < 1e-4,
          fmt("100 samples, max rel err GK* %.2e (tol 1e-3)", worst) + fmt(", max abs err F* %.2e (tol 1e-4)", worst_f)};
}

// 2. weak duality over seeded (u, dual) pairs under shared loads
Outcome criterion2(std::string& info) {
  const Grid g = cube(5);
  const double K = select_K(kLame, 0.5);
  const double amp = auto_amplitude(Preset::SineBump, kLame, K, g);
  const Manufactured m = manufactured(g, amp, K);
  const EquilibriumOperator op(g, m.cfg.loads);
  std::mt19937_64 rng(2002);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SampledCheckOptions checks;
  checks.nodes = 20;
  checks.directions = 50;
  double worst = std::numeric_limits<double>::infinity();
  int pairs = 0, violations = 0, rejected = 0;
  while (pairs < 50) {
    // even draws: arbitrary smooth fields; odd draws: small perturbations of the manufactured displacement
    VectorField u = random_smooth_field(g, rng, pairs % 2 ? 0.2 * amp * unit(rng) : 0.01 + 0.09 * unit(rng));
    if (pairs % 2)
      for (std::size_t id = 0; id < u.size(); ++id) u[id] += m.bundle.u0[id];
    checks.seed = rng();
    if (!check_C1(u, g).ok || !check_C_sampled(u, m.cfg, checks).pass) {
      ++rejected;
      continue;
    }
    // dual: manufactured point moved along a random equilibrium-preserving direction
    DualPoint dp = m.bundle.dual;
    MatrixField dQ(g.node_count()), ds(g.node_count());
    for (std::size_t id = 0; id < dQ.size(); ++id) {
      dQ[id] = random_matrix(rng, 1.0);
      ds[id] = sym(random_matrix(rng, 1.0));
    }
    op.project_direction(dQ, ds);
    const A4Check a4 = check_A4(dp.Q, dp.sigma_tilde, K);
    const double room = std::min(a4.q_margin / max_abs_entry(dQ), a4.sigma_margin / max_abs_entry(ds));
    const double t = (pairs % 2 ? 0.1 : 0.9) * unit(rng) * room;
    for (std::size_t id = 0; id < dQ.size(); ++id) dp.Q[id] += t * dQ[id], dp.sigma_tilde[id] += t * ds[id];
    const InnerResult in = inner_min_z(dp.Q, dp.sigma_tilde, m.cfg, dp.z_star);
    dp.z_star = in.z_star;
    const FeasibilityReport fr = feasibility_report(dp, m.cfg, &u, checks);
    if (!fr.A_star_verified || !fr.B1.ok || !fr.B2.ok) {
      ++rejected;
      continue;
    }
    const double J = energy(u, m.cfg).J;
    const double slack = J - in.value + 1e-8 * (1 + std::abs(J));
    worst = std::min(worst, (J - in.value) / (1 + std::abs(J)));
    if (slack < 0) ++violations;
    ++pairs;
  }

  // solver optima of both problems under the same loads
  const PrimalResult pr = solve_primal(m.cfg, VectorField(g.node_count(), Vec3::Zero()));
  const DualSolveResult dr = solve_dual(m.cfg);
  info = fmt("info: optimum pair on 5^3: J(u_min) - J~*_max = %.3e", pr.energy.J - dr.J_tilde_star) +
         " (strong-form equilibrium vs weak-form primal; see README)";
  return {violations == 0, std::to_string(pairs) + " pairs, " + std::to_string(violations) + " violations, " +
                               fmt("min (J - J~*)/(1+|J|) = %.3e", worst) + ", " + std::to_string(rejected) +
                               " draws rejected as infeasible"};
}

// 3. manufactured zero gap under refinement
Outcome criterion3() {
  const double K = select_K(kLame, 0.5);
  const double amp = auto_amplitude(Preset::SineBump, kLame, K, cube(5));
  std::vector<double> hs, gaps;
  double worst_res = 0.0;
  for (int n : {5, 9, 17}) {
    const Grid g = cube(n);
    const Manufactured m = manufactured(g, amp, K);
    const InnerResult in = inner_min_z(m.bundle.dual.Q, m.bundle.dual.sigma_tilde, m.cfg, m.bundle.dual.z_star);
    DualPoint dp = m.bundle.dual;
    dp.z_star = in.z_star;
    gaps.push_back(std::abs(energy(m.bundle.u0, m.cfg).J - J_star(dp, m.cfg)));
    hs.push_back(g.spacing(0));
    const ResidualMap r = extremality_residuals(m.bundle.u0, dp, m.cfg);
    for (const char* k : {"el3", "el5", "el7", "el9", "el10", "el12", "el13", "el14"})
      worst_res = std::max({worst_res, r.at(k).linf, r.at(k).l2});
  }
  const double order = loglog_slope(hs, gaps);
  return {order >= 1.0 && worst_res <= 1e-10,
          fmt("gaps %.3e", gaps[0]) + fmt(" / %.3e", gaps[1]) + fmt(" / %.3e", gaps[2]) +
              fmt(", observed order %.2f (need >= 1)", order) + fmt(", max residual %.1e (tol 1e-10)", worst_res)};
}

// 4. Hessian positivity at feasible dual points
Outcome criterion4() {
  const Grid g = cube(3);
  const double K = select_K(kLame, 0.5);
  const ModelConfig cfg = make_model(kLame, K, g, Loads::zero(g));
  std::mt19937_64 rng(4004);
  double worst_min = std::numeric_limits<double>::infinity(), worst_excess = worst_min, bound = 0.0;
  bool ok = true;
  for (int n = 0; n < 100; ++n) {
    DualPoint dp = DualPoint::zero(g);
    for (std::size_t id = 0; id < g.node_count(); ++id) {
      dp.Q[id] = random_matrix(rng, a4_q_bound(K));
      dp.sigma_tilde[id] = sym(random_matrix(rng, a4_sigma_bound(K)));
      dp.z_star[id] = project_B_star_node(random_matrix(rng, b2_bound(K)), dp.sigma_tilde[id], K);
    }
    if (!check_A4(dp.Q, dp.sigma_tilde, K).ok || !check_B2(dp.z_star, K).ok || !check_B1(dp.z_star, dp.sigma_tilde, K).ok)
      return {false, "sampler produced an infeasible point"};
    const HessianReport r = hessian_zz(dp, cfg);
    bound = r.lower_bound_M;
    ok = ok && r.global_min > 0.0 && r.global_min >= r.lower_bound_M - 1e-8;
    worst_min = std::min(worst_min, r.global_min);
    worst_excess = std::min(worst_excess, r.global_min - r.lower_bound_M);
  }
  return {ok, fmt("100 points, smallest eigenvalue %.4f", worst_min) + fmt(", bound %.4f", bound) +
                  fmt(", min excess over bound %.3e", worst_excess)};
}

// 5. gradients against central differences
Outcome criterion5() {
  const Grid g = cube(5);
  const double K = select_K(kLame, 0.5);
  const double amp = auto_amplitude(Preset::SineBump, kLame, K, g);
  const Manufactured m = manufactured(g, amp, K);
  std::mt19937_64 rng(5005);
  std::normal_distribution<double> nd;
  const VectorField u = random_smooth_field(g, rng, 0.08);
  const VectorField gj = grad_J(u, m.cfg);
  double worst_u = 0.0, worst_z = 0.0;
  for (int k = 0; k < 20; ++k) {
    VectorField v(g.node_count());
    for (Vec3& x : v) x = Vec3(nd(rng), nd(rng), nd(rng));
    zero_pinned(v, g);
    const double s = max_abs_entry(v);
    for (Vec3& x : v) x /= s;
    const double h = 1e-6;
    VectorField up = u, um = u;
    double pred = 0.0;
    for (std::size_t id = 0; id < v.size(); ++id) up[id] += h * v[id], um[id] -= h * v[id], pred += gj[id].dot(v[id]);
    const double fd = (energy(up, m.cfg).J - energy(um, m.cfg).J) / (2 * h);
    worst_u = std::max(worst_u, std::abs(fd - pred) / std::abs(pred));
  }
  DualPoint dp = m.bundle.dual;
  for (Mat3& z : dp.z_star) z += random_matrix(rng, 0.02 * K);
  const MatrixField gz = J_star_grad_z(dp, m.cfg);
  for (int k = 0; k < 20; ++k) {
    MatrixField v(g.node_count());
    for (Mat3& x : v) x = random_matrix(rng, 1.0);
    const double h = 1e-6;
    DualPoint a = dp, b = dp;
    double pred = 0.0;
    for (std::size_t id = 0; id < v.size(); ++id) a.z_star[id] += h * v[id], b.z_star[id] -= h * v[id], pred += ddot(gz[id], v[id]);
    const double fd = (J_star(a, m.cfg) - J_star(b, m.cfg)) / (2 * h);
    worst_z = std::max(worst_z, std::abs(fd - pred) / std::abs(pred));
  }
  return {worst_u < 1e-5 && worst_z < 1e-5,
          fmt("20+20 directions, max rel err grad_J %.2e", worst_u) + fmt(", z* gradient %.2e (tol 1e-5)", worst_z)};
}

// 6. solver sanity
Outcome criterion6() {
  const double K = select_K(kLame, 0.5);
  std::ostringstream os;
  bool ok = true;
  {
    const Grid g = cube(5);
    const ModelConfig cfg = make_model(kLame, K, g, Loads::zero(g));
    const PrimalResult pr = solve_primal(cfg, VectorField(g.node_count(), Vec3::Zero()));
    const DualSolveResult dr = solve_dual(cfg);
    const bool zero = pr.energy.J == 0.0 && max_abs_entry(pr.u) == 0.0 && dr.J_tilde_star == 0.0 &&
                      max_abs_entry(dr.dual_point.Q) == 0.0 && max_abs_entry(dr.dual_point.sigma_tilde) == 0.0 &&
                      max_abs_entry(dr.dual_point.z_star) == 0.0;
    ok = ok && zero;
    os << "zero loads " << (zero ? "ok" : "NOT zero");
  }
  const double amp = auto_amplitude(Preset::SineBump, kLame, K, cube(5));
  const double C = 2.0 * amp;  // max |grad u0| = amp
  for (int n : {5, 9, 17}) {
    const Grid g = cube(n);
    const Manufactured m = manufactured(g, amp, K);
    const PrimalResult pr = solve_primal(m.cfg, VectorField(g.node_count(), Vec3::Zero()));
    double err = 0.0;
    for (std::size_t id = 0; id < g.node_count(); ++id) err = std::max(err, (pr.u[id] - m.bundle.u0[id]).cwiseAbs().maxCoeff());
    const double allowed = C * g.spacing(0) + 1e-8;
    ok = ok && pr.converged && err <= allowed;
    os << fmt("; %.0f^3", n) << fmt(" |u-u0| %.2e", err) << fmt(" <= %.2e", allowed);
  }
  {
    const Grid g = cube(5);
    const Manufactured m = manufactured(g, amp, K);
    const DualSolveResult dr = solve_dual(m.cfg);
    bool mono = true;
    for (std::size_t k = 1; k < dr.ascent_trace.size(); ++k) mono = mono && dr.ascent_trace[k].second >= dr.ascent_trace[k - 1].second;
    ok = ok && mono;
    os << "; ascent trace of " << dr.ascent_trace.size() << (mono ? " values monotone" : " values NOT monotone");
  }
  return {ok, os.str()};
}

// 7. tensor algebra invariants
Outcome criterion7() {
  std::mt19937_64 rng(7007);
  double worst = 0.0;
  bool ok = true;
  for (const LameParams lame : {LameParams{1, 1}, LameParams{2, 0.5}, LameParams{0.3, 4}, LameParams{10, 0.1}}) {
    const HookeTensor H = make_hooke(lame);
    const ComplianceTensor Hbar = invert_hooke(H);
    for (int n = 0; n < 50; ++n) {
      const Mat3 s = sym(random_matrix(rng, 1.0));
      worst = std::max(worst, (apply_tensor4(Hbar.components, apply_tensor4(H.components, s)) - s).norm());
    }
    const double bulk = 3 * lame.lambda + 2 * lame.mu, shear = 2 * lame.mu;
    const Eigen::VectorXd ev = form_spectrum(H.components, Subspace::Symmetric);
    for (int k = 0; k < ev.size(); ++k) worst = std::max(worst, std::min(std::abs(ev(k) - bulk), std::abs(ev(k) - shear)));
    const Eigen::VectorXd evb = form_spectrum(Hbar.components, Subspace::Symmetric);
    for (int k = 0; k < evb.size(); ++k)
      worst = std::max(worst, std::min(std::abs(evb(k) - 1 / bulk), std::abs(evb(k) - 1 / shear)));
    for (double safety : {0.1, 0.5, 0.9}) {
      const double K = select_K(lame, safety);
      const double expect = safety / (2 * std::max(1 / bulk, 1 / shear));
      worst = std::max(worst, std::abs(K - expect));
      ok = ok && min_eigenvalue_sym4(make_stability(Hbar, K).components, Subspace::Symmetric) > 0.0;
    }
  }
  ok = ok && worst <= 1e-10;
  return {ok, fmt("max deviation %.2e (tol 1e-10), stability postcondition holds", worst)};
}

// 8. byte-identical verify-duality reports
Outcome criterion8() {
  const auto dir = std::filesystem::temp_directory_path();
  const auto cfg = dir / "elastodual_acceptance.cfg";
  std::ofstream(cfg) << "material.lambda = 1\nmaterial.mu = 1\ngrid.extents = 1, 1, 1\ngrid.dims = 5, 5, 5\n"
                        "grid.gamma0 = x-\nloads.preset = sine-bump\nseed = 42\ndeterministic = on\n";
  std::string dumps[2];
  for (int k = 0; k < 2; ++k) {
    const auto out = dir / ("elastodual_acceptance_" + std::to_string(k) + ".json");
    const std::string cmd = std::string(ELASTODUAL_CLI) + " verify-duality --config " + cfg.string() + " --out " + out.string();
    if (std::system(cmd.c_str()) != 0) return {false, "CLI run failed"};
    dumps[k] = without_timings(Json::parse(std::ifstream(out))).dump(2);
  }
  return {dumps[0] == dumps[1], dumps[0] == dumps[1] ? "two CLI runs identical apart from timings"
                                                     : "CLI runs differ"};
}

}  // namespace

int main() {
  std::string info2;
  run(1, "conjugate closed form vs oracle", criterion1);
  run(2, "weak duality on seeded pairs", [&] { return criterion2(info2); });
  if (!info2.empty()) std::printf("    %s\n", info2.c_str());
  run(3, "manufactured zero gap", criterion3);
  run(4, "Hessian positivity", criterion4);
  run(5, "gradient fidelity", criterion5);
  run(6, "solver sanity", criterion6);
  run(7, "tensor algebra", criterion7);
  run(8, "determinism", criterion8);
  std::printf("%s: %d of 8 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
