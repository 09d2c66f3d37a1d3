#pragma once

// Independent oracles for the derived expected values. These reimplement the
// target quantities by brute force (component loops, tensor-product
// quadrature, Cartesian momentum grids) and deliberately share no code with
// the light-cone quadrature or the factored transforms they check.

#include <cmath>
#include <complex>
#include <vector>

#include "lcf/kinematics.hpp"
#include "lcf/quadrature.hpp"
#include "lcf/test_functions.hpp"

namespace oracle {

using lcf::Bivector;
using lcf::cplx;
using lcf::CFourVector;
using lcf::FourVector;
using lcf::TestFunction;

inline double rel_err(cplx got, cplx want) {
  const double scale = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / scale;
}

/// v^nu = eta^{nu rho} sum_lambda k^lambda F_{lambda rho} by dense 4x4 loops.
inline CFourVector contract_oracle(const FourVector& k, const Bivector& F) {
  const std::array<double, 4> kc{k.t, k.x[0], k.x[1], k.x[2]};
  std::array<cplx, 4> v_lower{};
  for (int nu = 0; nu < 4; ++nu)
    for (int lam = 0; lam < 4; ++lam)
      v_lower[std::size_t(nu)] += kc[std::size_t(lam)] * F.component(lam, nu);
  CFourVector out;
  out.t = v_lower[0];
  for (int i = 0; i < 3; ++i) out.x[std::size_t(i)] = -v_lower[std::size_t(i + 1)];
  return out;
}

/// f~(k) by dense 4D Gauss-Legendre on a box of +-extent widths around the
/// probe region center.
inline Bivector fourier_oracle(const TestFunction& f, const FourVector& k, int n_per_axis,
                               double extent_factor = 1.5) {
  const lcf::SpacetimeRegion box = f.probe_region();
  const auto& gl = lcf::gauss_legendre(n_per_axis);
  std::array<std::vector<double>, 4> nodes, weights;
  const std::array<double, 4> c{box.center.t, box.center.x[0], box.center.x[1], box.center.x[2]};
  for (int a = 0; a < 4; ++a) {
    const double half = box.half_widths[std::size_t(a)] * extent_factor;
    for (int i = 0; i < n_per_axis; ++i) {
      nodes[std::size_t(a)].push_back(c[std::size_t(a)] + half * gl.nodes[std::size_t(i)]);
      weights[std::size_t(a)].push_back(half * gl.weights[std::size_t(i)]);
    }
  }
  Bivector acc;
  for (int i0 = 0; i0 < n_per_axis; ++i0)
    for (int i1 = 0; i1 < n_per_axis; ++i1)
      for (int i2 = 0; i2 < n_per_axis; ++i2)
        for (int i3 = 0; i3 < n_per_axis; ++i3) {
          const FourVector x{nodes[0][std::size_t(i0)], nodes[1][std::size_t(i1)],
                             nodes[2][std::size_t(i2)], nodes[3][std::size_t(i3)]};
          const double w = weights[0][std::size_t(i0)] * weights[1][std::size_t(i1)] *
                           weights[2][std::size_t(i2)] * weights[3][std::size_t(i3)];
          const double phase = lcf::minkowski_dot(k, x);
          acc = acc + f.value(x) * (w * cplx{std::cos(phase), std::sin(phase)});
        }
  return acc;
}

/// Light-cone pairing by a dense Cartesian 3D momentum grid (composite
/// Simpson) instead of the spherical rule:
///   -hbar/(2pi)^3 * int K(k)/(2w) d3k,  w = |kvec|, k0 = +-w.
inline cplx cartesian_pair_once(const TestFunction& g, const TestFunction& f, double L,
                                int intervals, double hbar, lcf::Sheet sheet) {
  const int m = intervals;  // even
  const double h = 2.0 * L / double(m);
  auto simpson_w = [&](int i) {
    if (i == 0 || i == m) return 1.0;
    return (i % 2 == 1) ? 4.0 : 2.0;
  };
  const double sheet_sign = sheet == lcf::Sheet::Positive ? 1.0 : -1.0;
  cplx acc{0.0, 0.0};
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m; ++j)
      for (int l = 0; l <= m; ++l) {
        const double kx = -L + h * i, ky = -L + h * j, kz = -L + h * l;
        const double w = std::sqrt(kx * kx + ky * ky + kz * kz);
        if (w == 0.0) continue;
        const FourVector k{sheet_sign * w, kx, ky, kz};
        const CFourVector vg = lcf::contract_wave_bivector(k, g.fourier(k));
        const CFourVector vf = lcf::contract_wave_bivector(k, f.fourier(k));
        acc += simpson_w(i) * simpson_w(j) * simpson_w(l) *
               lcf::conj_minkowski_dot(vg, vf) / (2.0 * w);
      }
  const double cell = std::pow(h / 3.0, 3);
  return -hbar / std::pow(2.0 * M_PI, 3) * cell * acc;
}

/// Richardson-extrapolated Cartesian oracle (Simpson is 4th order).
inline cplx cartesian_pair_oracle(const TestFunction& g, const TestFunction& f, double L,
                                  int intervals, double hbar, lcf::Sheet sheet) {
  const cplx coarse = cartesian_pair_once(g, f, L, intervals, hbar, sheet);
  const cplx fine = cartesian_pair_once(g, f, L, 2 * intervals, hbar, sheet);
  return (16.0 * fine - coarse) / 15.0;
}

}  // namespace oracle
