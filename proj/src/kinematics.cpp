#include "lcf/kinematics.hpp"

#include <algorithm>
#include <cmath>

namespace lcf {

namespace {
constexpr int levi_civita(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0;
  // even permutations of (0,1,2)
  if ((i == 0 && j == 1) || (i == 1 && j == 2) || (i == 2 && j == 0)) return 1;
  return -1;
}
}  // namespace

cplx Bivector::component(int mu, int nu) const {
  if (mu == nu) return {};
  if (mu == 0) return time_space[nu - 1];
  if (nu == 0) return -time_space[mu - 1];
  const int i = mu - 1, j = nu - 1;
  cplx out{};
  for (int k = 0; k < 3; ++k) out += double(levi_civita(i, j, k)) * space_space[k];
  return out;
}

Bivector Bivector::conj() const {
  Bivector out;
  for (int i = 0; i < 3; ++i) {
    out.time_space[i] = std::conj(time_space[i]);
    out.space_space[i] = std::conj(space_space[i]);
  }
  return out;
}

Bivector Bivector::operator+(const Bivector& o) const {
  Bivector out;
  for (int i = 0; i < 3; ++i) {
    out.time_space[i] = time_space[i] + o.time_space[i];
    out.space_space[i] = space_space[i] + o.space_space[i];
  }
  return out;
}

Bivector Bivector::operator*(cplx s) const {
  Bivector out;
  for (int i = 0; i < 3; ++i) {
    out.time_space[i] = time_space[i] * s;
    out.space_space[i] = space_space[i] * s;
  }
  return out;
}

double Bivector::max_abs() const {
  double m = 0.0;
  for (int i = 0; i < 3; ++i)
    m = std::max({m, std::abs(time_space[i]), std::abs(space_space[i])});
  return m;
}

bool SpacetimeRegion::contains(const FourVector& p) const {
  if (std::abs(p.t - center.t) > half_widths[0]) return false;
  for (int i = 0; i < 3; ++i)
    if (std::abs(p.x[i] - center.x[i]) > half_widths[i + 1]) return false;
  return true;
}

double minkowski_dot(const FourVector& u, const FourVector& v) {
  return u.t * v.t - u.x[0] * v.x[0] - u.x[1] * v.x[1] - u.x[2] * v.x[2];
}

cplx minkowski_dot(const CFourVector& u, const CFourVector& v) {
  return u.t * v.t - u.x[0] * v.x[0] - u.x[1] * v.x[1] - u.x[2] * v.x[2];
}

cplx conj_minkowski_dot(const CFourVector& u, const CFourVector& v) {
  return std::conj(u.t) * v.t - std::conj(u.x[0]) * v.x[0] - std::conj(u.x[1]) * v.x[1] -
         std::conj(u.x[2]) * v.x[2];
}

CFourVector conj(const CFourVector& v) {
  CFourVector o;
  o.t = std::conj(v.t);
  for (int i = 0; i < 3; ++i) o.x[i] = std::conj(v.x[i]);
  return o;
}

CFourVector contract_wave_bivector(const FourVector& k, const Bivector& F) {
  // Covariant components first: v_0 = -k.e ; v_j = k0 e_j + (m x k)_j.
  const auto& e = F.time_space;
  const auto& m = F.space_space;
  cplx v0 = -(k.x[0] * e[0] + k.x[1] * e[1] + k.x[2] * e[2]);
  std::array<cplx, 3> vs;
  vs[0] = k.t * e[0] + (m[1] * k.x[2] - m[2] * k.x[1]);
  vs[1] = k.t * e[1] + (m[2] * k.x[0] - m[0] * k.x[2]);
  vs[2] = k.t * e[2] + (m[0] * k.x[1] - m[1] * k.x[0]);
  // Raise with eta = diag(+,-,-,-).
  CFourVector out;
  out.t = v0;
  for (int i = 0; i < 3; ++i) out.x[i] = -vs[i];
  return out;
}

CausalClass causal_separation(const SpacetimeRegion& A, const SpacetimeRegion& B) {
  const double max_dt = std::abs(A.center.t - B.center.t) + A.half_widths[0] + B.half_widths[0];
  double gap2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double g = std::abs(A.center.x[i] - B.center.x[i]) -
                     (A.half_widths[i + 1] + B.half_widths[i + 1]);
    if (g > 0.0) gap2 += g * g;
  }
  return gap2 > max_dt * max_dt ? CausalClass::Spacelike : CausalClass::NonSpacelike;
}

}  // namespace lcf
