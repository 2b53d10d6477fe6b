#pragma once
////////////////////////////////////////////////////////////////////////////////
// grid.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//      Uniform structured grid on the box (0,Lx)x(0,Ly)x(0,Lz) with node-based
//      fields, finite-difference gradient/divergence and trapezoidal quadrature.
//
//      Node ordering: x fastest, then y, then z.  Every box face is tagged
//      Gamma0 (Dirichlet, u = 0) or Gamma1 (traction).  A node lying on any
//      Gamma0 face is pinned, including edges and corners shared with Gamma1
//      faces.
//
//      Derivative stencils per axis: central in the interior, 3-point one-sided
//      second-order at the two end nodes.  All stencils are exact on affine
//      fields (and on quadratics).
*/
////////////////////////////////////////////////////////////////////////////////

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "elastodual/error.hpp"
#include "elastodual/tensor_core.hpp"

namespace elastodual {

using ScalarField = std::vector<double>;
using VectorField = std::vector<Vec3>;
using MatrixField = std::vector<Mat3>;

enum class Face : int { XMinus = 0, XPlus, YMinus, YPlus, ZMinus, ZPlus };
enum class BoundaryTag { Gamma0, Gamma1 };

inline constexpr std::array<Face, 6> kAllFaces = {Face::XMinus, Face::XPlus, Face::YMinus,
                                                  Face::YPlus,  Face::ZMinus, Face::ZPlus};

inline int face_axis(Face f) { return static_cast<int>(f) / 2; }
inline bool face_is_upper(Face f) { return static_cast<int>(f) % 2 == 1; }

inline Vec3 outward_normal(Face f) {
  Vec3 n = Vec3::Zero();
  n(face_axis(f)) = face_is_upper(f) ? 1.0 : -1.0;
  return n;
}

inline const char* face_name(Face f) {
  static constexpr const char* names[] = {"x-", "x+", "y-", "y+", "z-", "z+"};
  return names[static_cast<int>(f)];
}

inline Face parse_face(const std::string& s) {
  for (Face f : kAllFaces)
    if (s == face_name(f)) return f;
  throw ValidationError("unknown face '" + s + "' (expected x-, x+, y-, y+, z- or z+)");
}

struct GridConfig {
  std::array<double, 3> extents{1.0, 1.0, 1.0};
  std::array<int, 3> dims{5, 5, 5};
  std::array<BoundaryTag, 6> tags{BoundaryTag::Gamma0, BoundaryTag::Gamma1, BoundaryTag::Gamma1,
                                  BoundaryTag::Gamma1, BoundaryTag::Gamma1, BoundaryTag::Gamma1};
};

/// One entry of a 1D derivative stencil: node offset along the axis and weight.
struct StencilTap {
  int offset;
  double weight;
};

class Grid {
 public:
  explicit Grid(const GridConfig& cfg) : cfg_(cfg) {
    bool any_gamma0 = false;
    for (int a = 0; a < 3; ++a) {
      if (cfg.dims[a] < 3) throw ValidationError("grid.dims: at least 3 nodes per axis are required");
      if (!(cfg.extents[a] > 0.0)) throw ValidationError("grid.extents: lengths must be positive");
      h_[a] = cfg.extents[a] / (cfg.dims[a] - 1);
    }
    for (BoundaryTag t : cfg.tags) any_gamma0 |= (t == BoundaryTag::Gamma0);
    if (!any_gamma0) throw ValidationError("grid.gamma0_faces: at least one face must be Gamma0");

    const std::size_t n = node_count();
    weights_.resize(n);
    pinned_.assign(n, false);
    for (std::size_t id = 0; id < n; ++id) {
      const auto c = ijk(id);
      double w = 1.0;
      for (int a = 0; a < 3; ++a) w *= weight_1d(a, c[a]);
      weights_[id] = w;
      for (Face f : kAllFaces)
        if (tag(f) == BoundaryTag::Gamma0 && on_face(c, f)) pinned_[id] = true;
    }
    for (Face f : kAllFaces) {
      auto& nodes = face_nodes_[static_cast<int>(f)];
      auto& fw = face_weights_[static_cast<int>(f)];
      const int a = face_axis(f);
      const int b = (a + 1) % 3, c = (a + 2) % 3;
      const int lo = std::min(b, c), hi = std::max(b, c);
      const int fixed = face_is_upper(f) ? cfg.dims[a] - 1 : 0;
      // lower in-plane axis index runs fastest
      for (int q = 0; q < cfg.dims[hi]; ++q)
        for (int p = 0; p < cfg.dims[lo]; ++p) {
          std::array<int, 3> idx{};
          idx[a] = fixed;
          idx[lo] = p;
          idx[hi] = q;
          nodes.push_back(index(idx[0], idx[1], idx[2]));
          fw.push_back(weight_1d(lo, p) * weight_1d(hi, q));
        }
    }
  }

  const GridConfig& config() const { return cfg_; }
  int dim(int axis) const { return cfg_.dims[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  double extent(int axis) const { return cfg_.extents[axis]; }
  double volume() const { return cfg_.extents[0] * cfg_.extents[1] * cfg_.extents[2]; }
  std::size_t node_count() const {
    return static_cast<std::size_t>(cfg_.dims[0]) * cfg_.dims[1] * cfg_.dims[2];
  }
  BoundaryTag tag(Face f) const { return cfg_.tags[static_cast<int>(f)]; }

  std::size_t index(int ix, int iy, int iz) const {
    return static_cast<std::size_t>(ix) + static_cast<std::size_t>(cfg_.dims[0]) * (iy + static_cast<std::size_t>(cfg_.dims[1]) * iz);
  }
  std::array<int, 3> ijk(std::size_t id) const {
    const int ix = static_cast<int>(id % cfg_.dims[0]);
    const std::size_t r = id / cfg_.dims[0];
    return {ix, static_cast<int>(r % cfg_.dims[1]), static_cast<int>(r / cfg_.dims[1])};
  }
  Vec3 coords(std::size_t id) const {
    const auto c = ijk(id);
    return {c[0] * h_[0], c[1] * h_[1], c[2] * h_[2]};
  }
  bool on_face(const std::array<int, 3>& c, Face f) const {
    const int a = face_axis(f);
    return face_is_upper(f) ? c[a] == cfg_.dims[a] - 1 : c[a] == 0;
  }
  bool is_pinned(std::size_t id) const { return pinned_[id]; }

  /// Trapezoidal volume weight of a node.
  double weight(std::size_t id) const { return weights_[id]; }
  const ScalarField& weights() const { return weights_; }

  const std::vector<std::size_t>& face_nodes(Face f) const { return face_nodes_[static_cast<int>(f)]; }
  const std::vector<double>& face_weights(Face f) const { return face_weights_[static_cast<int>(f)]; }

  double weight_1d(int axis, int i) const {
    const bool end = (i == 0 || i == cfg_.dims[axis] - 1);
    return end ? 0.5 * h_[axis] : h_[axis];
  }

  /// Three-tap first-derivative stencil at position i along an axis.
  std::array<StencilTap, 3> stencil(int axis, int i) const {
    const double s = 1.0 / (2.0 * h_[axis]);
    const int n = cfg_.dims[axis];
    if (i == 0) return {{{0, -3.0 * s}, {1, 4.0 * s}, {2, -1.0 * s}}};
    if (i == n - 1) return {{{0, 3.0 * s}, {-1, -4.0 * s}, {-2, 1.0 * s}}};
    return {{{-1, -s}, {1, s}, {0, 0.0}}};
  }

  std::size_t stride(int axis) const {
    if (axis == 0) return 1;
    if (axis == 1) return static_cast<std::size_t>(cfg_.dims[0]);
    return static_cast<std::size_t>(cfg_.dims[0]) * cfg_.dims[1];
  }

  /// Calls fn(neighbour_node, weight) for the derivative stencil of node id along axis.
  template <class Fn>
  void for_each_tap(std::size_t id, int axis, Fn&& fn) const {
    const auto c = ijk(id);
    const std::ptrdiff_t st = static_cast<std::ptrdiff_t>(stride(axis));
    for (const StencilTap& t : stencil(axis, c[axis]))
      if (t.weight != 0.0) fn(static_cast<std::size_t>(static_cast<std::ptrdiff_t>(id) + t.offset * st), t.weight);
  }

 private:
  GridConfig cfg_;
  std::array<double, 3> h_{};
  ScalarField weights_;
  std::vector<bool> pinned_;
  std::array<std::vector<std::size_t>, 6> face_nodes_;
  std::array<std::vector<double>, 6> face_weights_;
};

inline Grid build_grid(const GridConfig& cfg) { return Grid(cfg); }

/// Body force on every node; traction only on Gamma1 faces (one value per face node).
struct Loads {
  VectorField body;
  std::array<VectorField, 6> traction;

  static Loads zero(const Grid& g) {
    Loads l;
    l.body.assign(g.node_count(), Vec3::Zero());
    for (Face f : kAllFaces)
      if (g.tag(f) == BoundaryTag::Gamma1) l.traction[static_cast<int>(f)].assign(g.face_nodes(f).size(), Vec3::Zero());
    return l;
  }
};

/// (grad u)_{mi} = d u_m / d x_i.
inline MatrixField gradient(const VectorField& u, const Grid& g) {
  MatrixField out(g.node_count(), Mat3::Zero());
  for (std::size_t id = 0; id < g.node_count(); ++id)
    for (int i = 0; i < 3; ++i)
      g.for_each_tap(id, i, [&](std::size_t nb, double w) { out[id].col(i) += w * u[nb]; });
  return out;
}

/// Exact transpose of gradient(): returns v with <T, gradient(u)> = <v, u> (unweighted sums).
inline VectorField gradient_transpose(const MatrixField& T, const Grid& g) {
  VectorField out(g.node_count(), Vec3::Zero());
  for (std::size_t id = 0; id < g.node_count(); ++id)
    for (int i = 0; i < 3; ++i)
      g.for_each_tap(id, i, [&](std::size_t nb, double w) { out[nb] += w * T[id].col(i); });
  return out;
}

/// Row-wise divergence: result_i = sum_j d T_ij / d x_j.
inline VectorField divergence(const MatrixField& T, const Grid& g) {
  VectorField out(g.node_count(), Vec3::Zero());
  for (std::size_t id = 0; id < g.node_count(); ++id)
    for (int j = 0; j < 3; ++j)
      g.for_each_tap(id, j, [&](std::size_t nb, double w) { out[id] += w * T[nb].col(j); });
  return out;
}

/// Trapezoidal tensor-product quadrature; summation in node order.
inline double integrate_volume(const ScalarField& s, const Grid& g) {
  double acc = 0.0;
  for (std::size_t id = 0; id < g.node_count(); ++id) acc += g.weight(id) * s[id];
  return acc;
}

/// Trapezoidal quadrature of face-node values over one face.
inline double integrate_face(const std::vector<double>& s, Face f, const Grid& g) {
  const auto& w = g.face_weights(f);
  if (s.size() != w.size()) throw ValidationError("integrate_face: value count does not match face nodes");
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * s[k];
  return acc;
}

/// Sum of face integrals over the Gamma1 faces; entries for Gamma0 faces are ignored.
inline double integrate_boundary(const std::array<std::vector<double>, 6>& s, const Grid& g) {
  double acc = 0.0;
  for (Face f : kAllFaces)
    if (g.tag(f) == BoundaryTag::Gamma1) acc += integrate_face(s[static_cast<int>(f)], f, g);
  return acc;
}

/// Sampled scalar function on the Gamma1 faces.
template <class Fn>
std::array<std::vector<double>, 6> sample_boundary(const Grid& g, Fn&& fn) {
  std::array<std::vector<double>, 6> out;
  for (Face f : kAllFaces) {
    if (g.tag(f) != BoundaryTag::Gamma1) continue;
    for (std::size_t id : g.face_nodes(f)) out[static_cast<int>(f)].push_back(fn(g.coords(id)));
  }
  return out;
}

template <class Fn>
ScalarField sample_scalar(const Grid& g, Fn&& fn) {
  ScalarField s(g.node_count());
  for (std::size_t id = 0; id < g.node_count(); ++id) s[id] = fn(g.coords(id));
  return s;
}

template <class Fn>
VectorField sample_vector(const Grid& g, Fn&& fn) {
  VectorField s(g.node_count());
  for (std::size_t id = 0; id < g.node_count(); ++id) s[id] = fn(g.coords(id));
  return s;
}

/// Weighted discrete L2 norm sqrt(sum w |v|^2) over the free (unpinned) nodes.
inline double free_l2_norm(const VectorField& v, const Grid& g) {
  double acc = 0.0;
  for (std::size_t id = 0; id < g.node_count(); ++id)
    if (!g.is_pinned(id)) acc += g.weight(id) * v[id].squaredNorm();
  return std::sqrt(acc);
}

inline double max_abs_entry(const MatrixField& m) {
  double r = 0.0;
  for (const Mat3& a : m) r = std::max(r, a.cwiseAbs().maxCoeff());
  return r;
}

inline double max_abs_entry(const VectorField& v) {
  double r = 0.0;
  for (const Vec3& a : v) r = std::max(r, a.cwiseAbs().maxCoeff());
  return r;
}

}  // namespace elastodual
