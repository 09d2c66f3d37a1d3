#include "lcf/test_functions.hpp"

#include <algorithm>
#include <cmath>

#include "lcf/errors.hpp"

namespace lcf {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
// sqrt(2 ln 1e8): Gaussian argument where the envelope reaches 1e-8 of peak.
constexpr double kGaussEdge = 6.0697;

cplx expi(double phase) { return {std::cos(phase), std::sin(phase)}; }

double radical_inverse(int base, std::uint32_t i) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * double(i % std::uint32_t(base));
    i /= std::uint32_t(base);
    f *= inv;
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// GaussianPacket

Bivector GaussianPacket::value(const FourVector& x) const {
  const FourVector u = x - center;
  const double r2 = u.x[0] * u.x[0] + u.x[1] * u.x[1] + u.x[2] * u.x[2];
  const double env = std::exp(-u.t * u.t / (2.0 * tau * tau) - r2 / (2.0 * sigma * sigma));
  const cplx phase = expi(-minkowski_dot(carrier, u));
  return polarization * (amplitude * env * phase);
}

Bivector GaussianPacket::fourier(const FourVector& k) const {
  const double dw = k.t - carrier.t;
  double dk2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = k.x[i] - carrier.x[i];
    dk2 += d * d;
  }
  const double norm = kTwoPi * kTwoPi * tau * sigma * sigma * sigma;
  const double env = std::exp(-0.5 * tau * tau * dw * dw - 0.5 * sigma * sigma * dk2);
  const cplx factor = amplitude * norm * env * expi(minkowski_dot(k, center));
  return polarization * factor;
}

GaussianPacket GaussianPacket::conjugated() const {
  GaussianPacket out = *this;
  out.amplitude = std::conj(amplitude);
  out.polarization = polarization.conj();
  out.carrier = -carrier;
  return out;
}

double GaussianPacket::shell_bandwidth() const {
  const double k0mag = std::sqrt(carrier.x[0] * carrier.x[0] + carrier.x[1] * carrier.x[1] +
                                 carrier.x[2] * carrier.x[2]);
  const double temporal = std::abs(carrier.t) + kGaussEdge / tau;
  const double spatial = k0mag + kGaussEdge / sigma;
  return std::min(temporal, spatial);
}

SpacetimeRegion GaussianPacket::probe_region() const {
  return {center, {4.0 * tau, 4.0 * sigma, 4.0 * sigma, 4.0 * sigma}};
}

// ---------------------------------------------------------------------------
// BumpGrid

BumpGrid::BumpGrid(Bivector polarization, FourVector center, std::array<double, 4> half_widths,
                   double sharpness, FourVector carrier, cplx amplitude, int points_per_axis,
                   double nyquist_margin, double band_epsilon)
    : polarization_(polarization),
      center_(center),
      half_widths_(half_widths),
      sharpness_(sharpness),
      carrier_(carrier),
      amplitude_(amplitude),
      points_(points_per_axis),
      nyquist_margin_(nyquist_margin),
      band_epsilon_(band_epsilon) {
  for (double w : half_widths_)
    if (!(w > 0.0)) throw ConfigError("bump half widths must be positive");
  if (!(sharpness_ > 0.0)) throw ConfigError("bump sharpness must be positive");
  if (points_ < 8) throw ConfigError("bump grids need at least 8 points per axis");
  if (!(nyquist_margin_ > 0.0)) throw ConfigError("nyquist margin must be positive");
  if (!(band_epsilon_ > 0.0 && band_epsilon_ < 0.1))
    throw ConfigError("band epsilon must lie in (0, 0.1)");
  support_ = SpacetimeRegion{center_, half_widths_};
  rebuild_tables();
}

void BumpGrid::rebuild_tables() {
  const std::array<double, 4> carrier_axis{carrier_.t, carrier_.x[0], carrier_.x[1],
                                           carrier_.x[2]};
  for (int a = 0; a < 4; ++a) {
    const double w = half_widths_[std::size_t(a)];
    const double h = 2.0 * w / double(points_);
    spacing_[std::size_t(a)] = h;
    auto& prof = profile_[std::size_t(a)];
    prof.resize(std::size_t(points_));
    for (int j = 0; j < points_; ++j) {
      const double uh = -1.0 + (double(j) + 0.5) * 2.0 / double(points_);
      prof[std::size_t(j)] = std::exp(-sharpness_ / (1.0 - uh * uh));
    }
    // Scan the lattice transform for its spectral edge at the band_epsilon
    // level. A scan that never drops below the threshold means the lattice
    // cannot resolve its own spectral decay.
    const double qmax = M_PI / h;
    const int scan = 2048;
    const double peak = std::abs(axis_sum(a, 0.0));
    double edge = qmax;
    for (int s = scan; s >= 0; --s) {
      const double q = qmax * double(s) / double(scan);
      if (std::abs(axis_sum(a, q)) >= band_epsilon_ * peak) {
        edge = q;
        break;
      }
    }
    if (edge >= qmax * (1.0 - 1.5 / scan))
      throw ConfigError("bump grid too coarse for its bandwidth: raise points_per_axis");
    profile_edge_[std::size_t(a)] = edge;
    declared_band_[std::size_t(a)] = std::abs(carrier_axis[std::size_t(a)]) + edge;
    band_limit_[std::size_t(a)] = kTwoPi / h - declared_band_[std::size_t(a)];
    if (band_limit_[std::size_t(a)] < nyquist_margin_ * declared_band_[std::size_t(a)])
      throw ConfigError("bump grid too coarse for its bandwidth: raise points_per_axis");

    // Hermite table of the (real, even) axis sum for the quadrature hot path.
    // Step chosen so the cubic error stays ~1e-10 of the q=0 peak.
    const double dq = 0.025 / w;
    const double qtop = band_limit_[std::size_t(a)] + std::abs(carrier_axis[std::size_t(a)]) +
                        2.0 * dq;
    const int npts = int(qtop / dq) + 3;
    table_dq_[std::size_t(a)] = dq;
    auto& V = table_val_[std::size_t(a)];
    auto& D = table_der_[std::size_t(a)];
    V.resize(std::size_t(npts));
    D.resize(std::size_t(npts));
    for (int i = 0; i < npts; ++i) {
      const double q = dq * double(i);
      V[std::size_t(i)] = std::real(axis_sum(a, q));
      double der = 0.0;
      for (int j = 0; j < points_; ++j) {
        const double u = -w + (double(j) + 0.5) * h;
        der -= prof[std::size_t(j)] * u * std::sin(q * u);
      }
      D[std::size_t(i)] = h * der;
    }
  }
}

double BumpGrid::axis_sum_interp(int axis, double q) const {
  const double aq = std::abs(q);  // the axis sum is even in q
  const double dq = table_dq_[std::size_t(axis)];
  const auto& V = table_val_[std::size_t(axis)];
  const auto& D = table_der_[std::size_t(axis)];
  const double s = aq / dq;
  const std::size_t i = std::size_t(s);
  if (i + 1 >= V.size())
    throw BandwidthError("grid test function queried beyond its alias-safe band");
  const double t = s - double(i);
  const double t2 = t * t, t3 = t2 * t;
  return (2.0 * t3 - 3.0 * t2 + 1.0) * V[i] + (t3 - 2.0 * t2 + t) * dq * D[i] +
         (-2.0 * t3 + 3.0 * t2) * V[i + 1] + (t3 - t2) * dq * D[i + 1];
}

Bivector BumpGrid::fourier_interp(const FourVector& k) const {
  const std::array<double, 4> ka{k.t, k.x[0], k.x[1], k.x[2]};
  for (int a = 0; a < 4; ++a) {
    if (std::abs(ka[std::size_t(a)]) > band_limit_[std::size_t(a)])
      throw BandwidthError("grid test function queried beyond its alias-safe band");
  }
  double prod = axis_sum_interp(0, k.t - carrier_.t);
  for (int i = 0; i < 3; ++i) prod *= axis_sum_interp(i + 1, carrier_.x[i] - k.x[i]);
  return polarization_ * (amplitude_ * prod * expi(minkowski_dot(k, center_)));
}

cplx BumpGrid::axis_sum(int axis, double q) const {
  const auto& prof = profile_[std::size_t(axis)];
  const double h = spacing_[std::size_t(axis)];
  const double u0 = -half_widths_[std::size_t(axis)] + 0.5 * h;
  const cplx z = expi(q * h);
  cplx s{0.0, 0.0};
  for (int j = points_ - 1; j >= 0; --j) s = s * z + prof[std::size_t(j)];
  return s * (h * expi(q * u0));
}

Bivector BumpGrid::value(const FourVector& x) const {
  const FourVector u = x - center_;
  const std::array<double, 4> ua{u.t, u.x[0], u.x[1], u.x[2]};
  double prod = 1.0;
  for (int a = 0; a < 4; ++a) {
    const double uh = ua[std::size_t(a)] / half_widths_[std::size_t(a)];
    if (!(std::abs(uh) < 1.0)) return Bivector{};  // exact zero outside the box
    prod *= std::exp(-sharpness_ / (1.0 - uh * uh));
  }
  return polarization_ * (amplitude_ * prod * expi(-minkowski_dot(carrier_, u)));
}

Bivector BumpGrid::fourier(const FourVector& k) const {
  const std::array<double, 4> ka{k.t, k.x[0], k.x[1], k.x[2]};
  for (int a = 0; a < 4; ++a) {
    if (std::abs(ka[std::size_t(a)]) > band_limit_[std::size_t(a)])
      throw BandwidthError("grid test function queried beyond its alias-safe band");
  }
  // Temporal axis pairs exp(+i k0 u0) with carrier exp(-i w0 u0); spatial axes
  // pair exp(-i k.u) with carrier exp(+i k0vec.u).
  cplx prod = axis_sum(0, k.t - carrier_.t);
  for (int i = 0; i < 3; ++i) prod *= axis_sum(i + 1, carrier_.x[i] - k.x[i]);
  return polarization_ * (amplitude_ * prod * expi(minkowski_dot(k, center_)));
}

BumpGrid BumpGrid::conjugated() const {
  BumpGrid out = *this;
  out.amplitude_ = std::conj(amplitude_);
  out.polarization_ = polarization_.conj();
  out.carrier_ = -carrier_;
  // Band data is carrier-magnitude based; tables unchanged.
  return out;
}

BumpGrid BumpGrid::translated(const FourVector& dx) const {
  BumpGrid out = *this;
  out.center_ = center_ + dx;
  out.support_.center = out.center_;
  return out;
}

BumpGrid BumpGrid::scaled(cplx s) const {
  BumpGrid out = *this;
  out.amplitude_ *= s;
  return out;
}

FourVector BumpGrid::site_position(int it, int ix, int iy, int iz) const {
  const std::array<int, 4> idx{it, ix, iy, iz};
  std::array<double, 4> u;
  for (int a = 0; a < 4; ++a)
    u[std::size_t(a)] = -half_widths_[std::size_t(a)] +
                        (double(idx[std::size_t(a)]) + 0.5) * spacing_[std::size_t(a)];
  return center_ + FourVector{u[0], u[1], u[2], u[3]};
}

Bivector BumpGrid::site_value(int it, int ix, int iy, int iz) const {
  const std::array<int, 4> idx{it, ix, iy, iz};
  double prod = 1.0;
  std::array<double, 4> u;
  for (int a = 0; a < 4; ++a) {
    prod *= profile_[std::size_t(a)][std::size_t(idx[std::size_t(a)])];
    u[std::size_t(a)] = -half_widths_[std::size_t(a)] +
                        (double(idx[std::size_t(a)]) + 0.5) * spacing_[std::size_t(a)];
  }
  const FourVector uv{u[0], u[1], u[2], u[3]};
  return polarization_ * (amplitude_ * prod * expi(-minkowski_dot(carrier_, uv)));
}

double BumpGrid::shell_bandwidth() const {
  const double spatial = std::max({declared_band_[1], declared_band_[2], declared_band_[3]});
  return std::min(declared_band_[0], spatial);
}

// ---------------------------------------------------------------------------
// TestFunction

Bivector TestFunction::value(const FourVector& x) const {
  Bivector out;
  for (const auto& p : packets_) out = out + p.value(x);
  for (const auto& b : bumps_) out = out + b.value(x);
  return out;
}

Bivector TestFunction::fourier(const FourVector& k) const {
  Bivector out;
  for (const auto& p : packets_) out = out + p.fourier(k);
  for (const auto& b : bumps_) out = out + b.fourier(k);
  return out;
}

Bivector TestFunction::fourier_interp(const FourVector& k) const {
  Bivector out;
  for (const auto& p : packets_) out = out + p.fourier(k);
  for (const auto& b : bumps_) out = out + b.fourier_interp(k);
  return out;
}

TestFunction TestFunction::operator+(const TestFunction& o) const {
  TestFunction out = *this;
  out.packets_.insert(out.packets_.end(), o.packets_.begin(), o.packets_.end());
  out.bumps_.insert(out.bumps_.end(), o.bumps_.begin(), o.bumps_.end());
  return out;
}

TestFunction TestFunction::operator*(cplx s) const {
  TestFunction out = *this;
  for (auto& p : out.packets_) p.amplitude *= s;
  for (auto& b : out.bumps_) b = b.scaled(s);
  return out;
}

bool TestFunction::is_zero() const {
  for (const auto& p : packets_)
    if (std::abs(p.amplitude) != 0.0 && p.polarization.max_abs() != 0.0) return false;
  for (const auto& b : bumps_)
    if (std::abs(b.amplitude()) != 0.0 && b.polarization().max_abs() != 0.0) return false;
  return true;
}

double TestFunction::shell_bandwidth() const {
  double bw = 0.0;
  for (const auto& p : packets_) bw = std::max(bw, p.shell_bandwidth());
  for (const auto& b : bumps_) bw = std::max(bw, b.shell_bandwidth());
  return bw;
}

namespace {
SpacetimeRegion hull(const SpacetimeRegion& A, const SpacetimeRegion& B) {
  std::array<double, 4> lo, hi;
  const std::array<double, 4> ca{A.center.t, A.center.x[0], A.center.x[1], A.center.x[2]};
  const std::array<double, 4> cb{B.center.t, B.center.x[0], B.center.x[1], B.center.x[2]};
  for (int a = 0; a < 4; ++a) {
    lo[std::size_t(a)] = std::min(ca[std::size_t(a)] - A.half_widths[std::size_t(a)],
                                  cb[std::size_t(a)] - B.half_widths[std::size_t(a)]);
    hi[std::size_t(a)] = std::max(ca[std::size_t(a)] + A.half_widths[std::size_t(a)],
                                  cb[std::size_t(a)] + B.half_widths[std::size_t(a)]);
  }
  SpacetimeRegion out;
  out.center = FourVector{0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2]),
                          0.5 * (lo[3] + hi[3])};
  for (int a = 0; a < 4; ++a) out.half_widths[std::size_t(a)] = 0.5 * (hi[std::size_t(a)] - lo[std::size_t(a)]);
  return out;
}
}  // namespace

SpacetimeRegion TestFunction::probe_region() const {
  bool first = true;
  SpacetimeRegion out{{}, {1.0, 1.0, 1.0, 1.0}};
  for (const auto& p : packets_) {
    out = first ? p.probe_region() : hull(out, p.probe_region());
    first = false;
  }
  for (const auto& b : bumps_) {
    out = first ? b.support() : hull(out, b.support());
    first = false;
  }
  return out;
}

std::optional<SpacetimeRegion> TestFunction::support() const {
  if (!packets_.empty() || bumps_.empty()) return std::nullopt;
  SpacetimeRegion out = bumps_.front().support();
  for (std::size_t i = 1; i < bumps_.size(); ++i) out = hull(out, bumps_[i].support());
  return out;
}

TestFunction conjugate(const TestFunction& f) {
  TestFunction out;
  for (const auto& p : f.packets()) out = out + TestFunction(p.conjugated());
  for (const auto& b : f.bumps()) out = out + TestFunction(b.conjugated());
  return out;
}

TestFunction translate(const TestFunction& f, const FourVector& dx) {
  TestFunction out;
  for (const auto& p : f.packets()) {
    GaussianPacket q = p;
    q.center = q.center + dx;
    out = out + TestFunction(q);
  }
  for (const auto& b : f.bumps()) out = out + TestFunction(b.translated(dx));
  return out;
}

double reality_defect(const TestFunction& f) {
  const TestFunction diff = f + conjugate(f) * cplx{-1.0, 0.0};
  const SpacetimeRegion box = f.probe_region();
  double defect = 0.0;
  for (std::uint32_t i = 0; i < 128; ++i) {
    const double ht = radical_inverse(2, i + 1);
    const double hx = radical_inverse(3, i + 1);
    const double hy = radical_inverse(5, i + 1);
    const double hz = radical_inverse(7, i + 1);
    const FourVector x{box.center.t + (2.0 * ht - 1.0) * box.half_widths[0],
                       box.center.x[0] + (2.0 * hx - 1.0) * box.half_widths[1],
                       box.center.x[1] + (2.0 * hy - 1.0) * box.half_widths[2],
                       box.center.x[2] + (2.0 * hz - 1.0) * box.half_widths[3]};
    defect = std::max(defect, diff.value(x).max_abs());
  }
  return defect;
}

TestFunction real_part(const TestFunction& f) {
  return (f + conjugate(f)) * cplx{0.5, 0.0};
}

}  // namespace lcf
