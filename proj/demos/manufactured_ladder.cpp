// Prints the manufactured duality gap for a sine-bump displacement on a ladder of grids.

#include <cstdio>

#include "elastodual/elastodual.hpp"

namespace ed = elastodual;

int main() {
  const ed::LameParams lame{1.0, 1.0};
  const double K = ed::select_K(lame, 0.5);
  ed::GridConfig gc;
  double amp = 0.0;
  std::printf("%6s %12s %14s %14s %12s\n", "nodes", "h", "J(u0)", "J*", "gap");
  for (int n : {5, 9, 17}) {
    gc.dims = {n, n, n};
    const ed::Grid grid(gc);
    if (amp == 0.0) amp = ed::auto_amplitude(ed::Preset::SineBump, lame, K, grid);
    const ed::VectorField u0 = ed::scaled(ed::preset_unit_field(ed::Preset::SineBump, grid), amp);
    const ed::CriticalPointBundle b = ed::manufacture_critical_point(u0, lame, K, grid);
    const ed::ModelConfig cfg = ed::make_model(lame, K, grid, b.loads);
    const double J = ed::energy(u0, cfg).J;
    const double Js = ed::J_star(b.dual, cfg);
    std::printf("%6d %12.6f %14.6e %14.6e %12.4e\n", n, grid.spacing(0), J, Js, J - Js);
  }
}
