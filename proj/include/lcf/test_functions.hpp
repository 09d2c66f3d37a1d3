#pragma once

#include <optional>
#include <vector>

#include "lcf/kinematics.hpp"

namespace lcf {

/// Analytic term: polarization x Gaussian envelope x plane-wave carrier.
///   f(x) = amplitude * pol * exp(-(u0)^2/(2 tau^2) - |u|^2/(2 sigma^2))
///                          * exp(-i (w0 u0 - kvec.uvec)),  u = x - center.
/// Closed-form transform under f~(k) = int f(x) exp(+i(k0 x0 - k.x)) d4x:
///   f~(k) = amplitude * pol * (2pi)^2 tau sigma^3 exp(+i(k0 c0 - k.c))
///           * exp(-tau^2 (k0-w0)^2/2) * exp(-sigma^2 |k - k0vec|^2 / 2).
struct GaussianPacket {
  Bivector polarization;
  FourVector center;
  double sigma = 1.0;  // spatial width
  double tau = 1.0;    // temporal width
  FourVector carrier;  // (w0, k0vec); w0 > 0 means positive frequency
  cplx amplitude{1.0, 0.0};

  Bivector value(const FourVector& x) const;
  Bivector fourier(const FourVector& k) const;
  GaussianPacket conjugated() const;
  /// Radial |k| beyond which the on-shell transform is below 1e-8 of peak.
  double shell_bandwidth() const;
  SpacetimeRegion probe_region() const;
};

/// Compactly supported term sampled on a 4D midpoint lattice over an
/// axis-aligned box. The profile is the product of per-axis C-infinity bumps
///   prof(u) = exp(-sharpness / (1 - u^2)) for |u| < 1, else 0,
/// so the support is exactly the box and the transform decays
/// super-algebraically. Storage stays factored per axis; the 4D lattice sum
/// of the product samples is what the transform evaluates (as four Horner
/// sums), and sites are reconstructable through site_value().
class BumpGrid {
 public:
  /// points_per_axis sites per axis (midpoint lattice, no boundary sites).
  /// band_epsilon sets the relative level defining the declared spectral edge
  /// (the bump transform decays like exp(-c sqrt(q)), so tighter epsilons cost
  /// significantly more sites per axis).
  BumpGrid(Bivector polarization, FourVector center, std::array<double, 4> half_widths,
           double sharpness, FourVector carrier, cplx amplitude, int points_per_axis,
           double nyquist_margin = 1.0, double band_epsilon = 1e-6);

  Bivector value(const FourVector& x) const;
  Bivector fourier(const FourVector& k) const;  // throws BandwidthError off-band
  /// Same value through per-axis cubic Hermite tables (quadrature hot path);
  /// agrees with fourier() to ~1e-10 of peak and preserves the exact
  /// real-even symmetry of the axis sums.
  Bivector fourier_interp(const FourVector& k) const;
  BumpGrid conjugated() const;
  BumpGrid translated(const FourVector& dx) const;
  BumpGrid scaled(cplx s) const;

  const SpacetimeRegion& support() const { return support_; }
  double shell_bandwidth() const;
  int points_per_axis() const { return points_; }
  double sharpness() const { return sharpness_; }
  cplx amplitude() const { return amplitude_; }
  const Bivector& polarization() const { return polarization_; }
  const FourVector& carrier() const { return carrier_; }

  /// Lattice site access (axis-ordered indices, each in [0, points_per_axis)).
  FourVector site_position(int it, int ix, int iy, int iz) const;
  Bivector site_value(int it, int ix, int iy, int iz) const;

  /// Alias-protected query limit per axis (|k_axis| beyond it throws).
  double band_limit(int axis) const { return band_limit_[std::size_t(axis)]; }
  /// Carrier-shifted spectral edge per axis at the 1e-8 level.
  double declared_bandwidth(int axis) const { return declared_band_[std::size_t(axis)]; }

 private:
  void rebuild_tables();
  cplx axis_sum(int axis, double q) const;  // h * sum_j prof_j exp(i q u_j)
  double axis_sum_interp(int axis, double q) const;

  Bivector polarization_;
  FourVector center_;
  std::array<double, 4> half_widths_;
  double sharpness_;
  FourVector carrier_;
  cplx amplitude_;
  int points_;
  double nyquist_margin_;
  double band_epsilon_;
  SpacetimeRegion support_;
  std::array<std::vector<double>, 4> profile_;   // per-axis bump samples
  std::array<double, 4> spacing_;                // lattice step per axis
  std::array<double, 4> profile_edge_;           // |q| edge of the bare profile
  std::array<double, 4> declared_band_;
  std::array<double, 4> band_limit_;
  // Hermite tables of the (real, even) axis sums on a uniform |q| grid.
  std::array<std::vector<double>, 4> table_val_, table_der_;
  std::array<double, 4> table_dq_;
};

/// Finite additive combination of packet and bump terms; immutable value type.
class TestFunction {
 public:
  TestFunction() = default;
  explicit TestFunction(GaussianPacket p) { packets_.push_back(std::move(p)); }
  explicit TestFunction(BumpGrid b) { bumps_.push_back(std::move(b)); }

  static TestFunction zero() { return TestFunction(); }

  Bivector value(const FourVector& x) const;
  Bivector fourier(const FourVector& k) const;
  /// Transform via the bump interpolation tables (packets stay closed-form);
  /// the pairing quadrature's hot path.
  Bivector fourier_interp(const FourVector& k) const;

  TestFunction operator+(const TestFunction& o) const;
  TestFunction operator*(cplx s) const;

  bool is_zero() const;
  double shell_bandwidth() const;
  SpacetimeRegion probe_region() const;
  /// Exact support hull when every term is compactly supported.
  std::optional<SpacetimeRegion> support() const;

  const std::vector<GaussianPacket>& packets() const { return packets_; }
  const std::vector<BumpGrid>& bumps() const { return bumps_; }

 private:
  std::vector<GaussianPacket> packets_;
  std::vector<BumpGrid> bumps_;
};

TestFunction conjugate(const TestFunction& f);
TestFunction translate(const TestFunction& f, const FourVector& dx);

/// Max over a 128-point deterministic low-discrepancy probe set of
/// |f(x) - f*(x)| (bivector sup norm); zero for observably real functions.
double reality_defect(const TestFunction& f);

/// f + f*, scaled by 1/2 (convenience for building real smearing functions).
TestFunction real_part(const TestFunction& f);

}  // namespace lcf
