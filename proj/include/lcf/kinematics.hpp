#pragma once

#include <array>
#include <complex>

namespace lcf {

using cplx = std::complex<double>;

/// Contravariant Minkowski 4-vector, components (t, x, y, z), metric diag(+,-,-,-).
struct FourVector {
  double t = 0.0;
  std::array<double, 3> x{0.0, 0.0, 0.0};

  FourVector() = default;
  FourVector(double t_, double x_, double y_, double z_) : t(t_), x{x_, y_, z_} {}

  FourVector operator+(const FourVector& o) const {
    return {t + o.t, x[0] + o.x[0], x[1] + o.x[1], x[2] + o.x[2]};
  }
  FourVector operator-(const FourVector& o) const {
    return {t - o.t, x[0] - o.x[0], x[1] - o.x[1], x[2] - o.x[2]};
  }
  FourVector operator*(double s) const { return {t * s, x[0] * s, x[1] * s, x[2] * s}; }
  FourVector operator-() const { return {-t, -x[0], -x[1], -x[2]}; }
};

/// Complex-component 4-vector (e.g. the contraction k^l F_{l nu} of a complex bivector).
struct CFourVector {
  cplx t{0.0, 0.0};
  std::array<cplx, 3> x{cplx{}, cplx{}, cplx{}};
};

/// Fixed-signature metric plus the single scale constant of the theory.
/// hbar enters pairing values only; everything below this layer is hbar-free.
struct MetricConstants {
  double hbar = 1.0;
};

/// Complex antisymmetric rank-2 tensor, stored as the two independent 3-vectors:
///   time_space[i]  = F_{0,i+1}                  (electric-like part)
///   space_space[k] with F_{ij} = eps_{ijk} m_k   (magnetic-like dual part)
/// Antisymmetry is structural; no redundant components exist to disagree.
struct Bivector {
  std::array<cplx, 3> time_space{cplx{}, cplx{}, cplx{}};
  std::array<cplx, 3> space_space{cplx{}, cplx{}, cplx{}};

  /// Full component F_{mu nu}, mu,nu in 0..3 (reconstructed, for oracles and I/O).
  cplx component(int mu, int nu) const;

  Bivector conj() const;
  Bivector operator+(const Bivector& o) const;
  Bivector operator*(cplx s) const;
  double max_abs() const;
};

/// Axis-aligned spacetime box: support bookkeeping for test functions.
struct SpacetimeRegion {
  FourVector center;
  std::array<double, 4> half_widths{1.0, 1.0, 1.0, 1.0};  // (t, x, y, z), all > 0

  bool contains(const FourVector& p) const;
};

enum class CausalClass { Spacelike, NonSpacelike };

/// u0 v0 - u.v with the fixed diag(+,-,-,-) signature.
double minkowski_dot(const FourVector& u, const FourVector& v);

/// Bilinear (no conjugation) Minkowski dot of complex 4-vectors.
cplx minkowski_dot(const CFourVector& u, const CFourVector& v);

cplx conj_minkowski_dot(const CFourVector& u, const CFourVector& v);  // eta(u*, v)

CFourVector conj(const CFourVector& v);

/// v^nu = eta^{nu rho} k^lambda F_{lambda rho}. For antisymmetric F,
/// minkowski_dot(k, v) = 0 identically; for null k the result is zero or spacelike.
CFourVector contract_wave_bivector(const FourVector& k, const Bivector& F);

/// Spacelike iff every point of A is spacelike-separated from every point of B.
/// For axis-aligned boxes the extremal pair is (max time offset, min spatial gap).
CausalClass causal_separation(const SpacetimeRegion& A, const SpacetimeRegion& B);

}  // namespace lcf
