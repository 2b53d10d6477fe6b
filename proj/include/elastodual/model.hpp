#pragma once
// Shared model configuration: material, splitting constant K, grid, loads and
// solver tolerances.

#include <sstream>

#include "elastodual/grid.hpp"
#include "elastodual/tensor_core.hpp"

namespace elastodual {

struct Tolerances {
  // primal descent
  double grad_tol = 1e-11;
  int max_iters = 200000;
  double step_init = 1.0;
  double step_shrink = 0.5;
  double armijo_slope = 1e-4;
  double barrier_weight = 1e-6;
  double barrier_decay = 0.01;
  int barrier_stages = 4;

  // inner minimisation over z*
  double inner_tol = 1e-12;
  int inner_max_iters = 2000;
  int projection_alternations = 100;

  // outer ascent over (Q, sigma~)
  int outer_max_iters = 400;
  double outer_rel_tol = 1e-8;
  int outer_patience = 10;

  // gap / duality checks
  double gap_tol = 1e-8;
  double condition_cap = kDefaultConditionCap;
  double projection_tol = 1e-10;
};

struct ModelConfig {
  LameParams lame;
  double K = 0.5;
  Grid grid;
  Loads loads;
  Tolerances tol;
  HookeTensor hooke;
  ComplianceTensor compliance;
};

/// Validates the material, the stability condition on K and the load shapes.
inline ModelConfig make_model(const LameParams& lame, double K, Grid grid, Loads loads, Tolerances tol = {}) {
  validate(lame);
  if (!(K > 0.0) || !std::isfinite(K)) throw ValidationError("K must be a finite positive number");
  HookeTensor H = make_hooke(lame);
  ComplianceTensor Hbar = invert_hooke(H);
  if (!(min_eigenvalue_sym4(make_stability(Hbar, K).components, Subspace::Symmetric) > 0.0)) {
    std::ostringstream os;
    os << "K violates stability condition; max admissible ~ " << max_admissible_K(lame);
    throw ValidationError(os.str());
  }
  if (loads.body.size() != grid.node_count()) throw ValidationError("loads.body: size does not match grid");
  for (Face f : kAllFaces) {
    auto& t = loads.traction[static_cast<int>(f)];
    if (grid.tag(f) == BoundaryTag::Gamma1) {
      if (t.empty()) t.assign(grid.face_nodes(f).size(), Vec3::Zero());
      if (t.size() != grid.face_nodes(f).size()) throw ValidationError("loads.traction: size does not match face");
    } else {
      t.clear();
    }
  }
  return ModelConfig{lame, K, std::move(grid), std::move(loads), tol, H, Hbar};
}

}  // namespace elastodual
