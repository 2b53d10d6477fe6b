#pragma once
////////////////////////////////////////////////////////////////////////////////
// tensor_core.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//      Small fixed-size tensor algebra for isotropic elasticity in 3D.
//
//      Rank-4 tensors are stored densely (81 entries) and act on 3x3 matrices
//      by the double contraction  (T t)_ij = T_ijkl t_kl.  Quadratic-form
//      spectra are computed on either the 6-dim symmetric subspace (with the
//      orthonormal basis E_ii, (E_ij + E_ji)/sqrt(2)) or the full 9-dim space.
//
//      The Hooke tensor annihilates antisymmetric matrices, so its inverse is
//      the compliance tensor on the symmetric subspace, extended by zero.
*/
////////////////////////////////////////////////////////////////////////////////

#include <array>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "elastodual/error.hpp"

namespace elastodual {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

inline double kron(int i, int j) { return i == j ? 1.0 : 0.0; }

/// Double contraction a : b = a_ij b_ij.
inline double ddot(const Mat3& a, const Mat3& b) { return (a.array() * b.array()).sum(); }

inline Mat3 sym(const Mat3& a) { return 0.5 * (a + a.transpose()); }
inline Mat3 skew(const Mat3& a) { return 0.5 * (a - a.transpose()); }

struct LameParams {
  double lambda = 1.0;
  double mu = 1.0;
};

inline void validate(const LameParams& lame) {
  if (!(lame.lambda > 0.0) || !std::isfinite(lame.lambda))
    throw ValidationError("material.lambda must be a finite positive number");
  if (!(lame.mu > 0.0) || !std::isfinite(lame.mu))
    throw ValidationError("material.mu must be a finite positive number");
}

/// Dense 3x3x3x3 tensor.
class Tensor4 {
 public:
  Tensor4() { c_.fill(0.0); }

  double& operator()(int i, int j, int k, int l) { return c_[idx(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return c_[idx(i, j, k, l)]; }

  Tensor4& operator+=(const Tensor4& o) {
    for (int n = 0; n < 81; ++n) c_[n] += o.c_[n];
    return *this;
  }
  Tensor4& operator-=(const Tensor4& o) {
    for (int n = 0; n < 81; ++n) c_[n] -= o.c_[n];
    return *this;
  }
  Tensor4& operator*=(double s) {
    for (double& v : c_) v *= s;
    return *this;
  }
  friend Tensor4 operator+(Tensor4 a, const Tensor4& b) { return a += b; }
  friend Tensor4 operator-(Tensor4 a, const Tensor4& b) { return a -= b; }
  friend Tensor4 operator*(double s, Tensor4 a) { return a *= s; }

  /// 9x9 matrix with row index 3i+j and column index 3k+l.
  Eigen::Matrix<double, 9, 9> as_matrix() const {
    Eigen::Matrix<double, 9, 9> m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) m(3 * i + j, 3 * k + l) = (*this)(i, j, k, l);
    return m;
  }

 private:
  static constexpr int idx(int i, int j, int k, int l) { return ((i * 3 + j) * 3 + k) * 3 + l; }
  std::array<double, 81> c_;
};

/// Result_ij = sum_kl T_ijkl t_kl.
inline Mat3 apply_tensor4(const Tensor4& T, const Mat3& t) {
  Mat3 r = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) acc += T(i, j, k, l) * t(k, l);
      r(i, j) = acc;
    }
  return r;
}

struct HookeTensor {
  Tensor4 components;
  LameParams lame;

  /// Closed form of the contraction for the isotropic law.
  Mat3 apply(const Mat3& t) const {
    return lame.lambda * t.trace() * Mat3::Identity() + lame.mu * (t + t.transpose());
  }
};

struct ComplianceTensor {
  Tensor4 components;
  LameParams lame;

  /// s/(2mu) - lambda/(2mu(3lambda+2mu)) tr(s) I on the symmetric part; zero on the skew part.
  Mat3 apply(const Mat3& t) const {
    const double l = lame.lambda, m = lame.mu;
    return sym(t) / (2.0 * m) - l / (2.0 * m * (3.0 * l + 2.0 * m)) * t.trace() * Mat3::Identity();
  }
};

/// D_ijkl = 1 iff i = k and j = l.
inline Tensor4 identity_tensor4() {
  Tensor4 d;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) d(i, j, i, j) = 1.0;
  return d;
}

inline HookeTensor make_hooke(const LameParams& lame) {
  validate(lame);
  HookeTensor h;
  h.lame = lame;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          h.components(i, j, k, l) = lame.lambda * kron(i, j) * kron(k, l) +
                                     lame.mu * (kron(i, k) * kron(j, l) + kron(i, l) * kron(j, k));
  return h;
}

inline ComplianceTensor invert_hooke(const HookeTensor& H) {
  const double l = H.lame.lambda, m = H.lame.mu;
  const double a = 1.0 / (4.0 * m);
  const double b = l / (2.0 * m * (3.0 * l + 2.0 * m));
  ComplianceTensor c;
  c.lame = H.lame;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l2 = 0; l2 < 3; ++l2)
          c.components(i, j, k, l2) =
              a * (kron(i, k) * kron(j, l2) + kron(i, l2) * kron(j, k)) - b * kron(i, j) * kron(k, l2);
  return c;
}

struct StabilityTensor {
  Tensor4 components;
  double K = 0.0;
};

/// M = D/(2K) - Hbar.
inline StabilityTensor make_stability(const ComplianceTensor& Hbar, double K) {
  if (!(K > 0.0)) throw ValidationError("K must be positive");
  StabilityTensor s;
  s.K = K;
  s.components = (1.0 / (2.0 * K)) * identity_tensor4() - Hbar.components;
  return s;
}

enum class Subspace { Symmetric, Full };

/// Orthonormal basis (Frobenius) of the symmetric 3x3 matrices.
inline std::array<Mat3, 6> symmetric_basis() {
  std::array<Mat3, 6> b;
  int n = 0;
  const double r = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < 3; ++i) {
    b[n] = Mat3::Zero();
    b[n++](i, i) = 1.0;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      b[n] = Mat3::Zero();
      b[n](i, j) = b[n](j, i) = r;
      ++n;
    }
  return b;
}

/// Eigenvalues (ascending) of the quadratic form t -> T t : t on the chosen subspace.
inline Eigen::VectorXd form_spectrum(const Tensor4& T, Subspace subspace) {
  if (subspace == Subspace::Full) {
    Eigen::Matrix<double, 9, 9> m = T.as_matrix();
    Eigen::Matrix<double, 9, 9> s = 0.5 * (m + m.transpose());
    return Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>>(s, Eigen::EigenvaluesOnly).eigenvalues();
  }
  const auto basis = symmetric_basis();
  Eigen::Matrix<double, 6, 6> m;
  for (int a = 0; a < 6; ++a) {
    const Mat3 ta = apply_tensor4(T, basis[a]);
    for (int b = 0; b < 6; ++b) m(b, a) = ddot(basis[b], ta);
  }
  Eigen::Matrix<double, 6, 6> s = 0.5 * (m + m.transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>>(s, Eigen::EigenvaluesOnly).eigenvalues();
}

inline double min_eigenvalue_sym4(const Tensor4& T, Subspace subspace) { return form_spectrum(T, subspace).minCoeff(); }
inline double max_eigenvalue_sym4(const Tensor4& T, Subspace subspace) { return form_spectrum(T, subspace).maxCoeff(); }

/// K = safety / (2 lambda_max(Hbar)); the post-condition M > 0 is checked.
inline double select_K(const LameParams& lame, double safety) {
  if (!(safety > 0.0 && safety < 1.0)) throw ValidationError("K.safety must lie in (0,1)");
  const ComplianceTensor Hbar = invert_hooke(make_hooke(lame));
  const double lmax = max_eigenvalue_sym4(Hbar.components, Subspace::Symmetric);
  const double K = safety / (2.0 * lmax);
  if (!(min_eigenvalue_sym4(make_stability(Hbar, K).components, Subspace::Symmetric) > 0.0))
    throw NumericalError("select_K: stability tensor is not positive definite");
  return K;
}

/// Largest admissible K (supremum, not attained) for the stability condition.
inline double max_admissible_K(const LameParams& lame) {
  const ComplianceTensor Hbar = invert_hooke(make_hooke(lame));
  return 1.0 / (2.0 * max_eigenvalue_sym4(Hbar.components, Subspace::Symmetric));
}

inline constexpr double kDefaultConditionCap = 1e12;

/// A^p for symmetric positive definite A and p in {-1,-2,-3}.
inline Mat3 shifted_inverse_power(const Mat3& A, int p, double condition_cap = kDefaultConditionCap) {
  if (p > -1 || p < -3) throw ValidationError("shifted_inverse_power: p must be -1, -2 or -3");
  Eigen::SelfAdjointEigenSolver<Mat3> es(sym(A));
  const Vec3 ev = es.eigenvalues();
  if (!(ev(0) > 0.0)) {
    std::ostringstream os;
    os << "not positive definite (min eigenvalue " << ev(0) << ")";
    throw NumericalError(os.str());
  }
  if (ev(2) / ev(0) > condition_cap) throw NumericalError("ill-conditioned shifted matrix");
  Vec3 d;
  for (int i = 0; i < 3; ++i) d(i) = std::pow(ev(i), p);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace elastodual
