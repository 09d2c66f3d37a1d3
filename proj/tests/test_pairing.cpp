#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lcf/pairing.hpp"
#include "lcf/rng.hpp"
#include "oracle_helpers.hpp"

using namespace lcf;

namespace {

Bivector pol(int which) {
  Bivector F;
  switch (which % 3) {
    case 0:
      F.time_space[0] = {1.0, 0.0};
      F.space_space[2] = {0.0, 0.4};
      break;
    case 1:
      F.time_space[1] = {0.6, -0.2};
      F.time_space[2] = {0.1, 0.3};
      break;
    default:
      F.space_space[0] = {0.9, 0.1};
      F.time_space[0] = {-0.2, 0.5};
      break;
  }
  return F;
}

GaussianPacket packet(int which) {
  GaussianPacket p;
  p.polarization = pol(which);
  p.sigma = 1.0 + 0.1 * which;
  p.tau = 0.9 + 0.05 * which;
  p.center = {0.1 * which, -0.2 + 0.1 * which, 0.15 * which, 0.0};
  p.carrier = {2.0 + 0.3 * which, 0.3, -0.2 + 0.1 * which, 0.1};
  p.amplitude = cplx{0.8, 0.3 * which};
  return p;
}

LightConeQuadrature packet_quad() {
  LightConeQuadrature q;
  q.radial_nodes = 32;
  q.theta_nodes = 16;
  q.phi_nodes = 32;
  q.radial_cutoff = 12.0;
  q.refinement_tolerance = 1e-8;
  return q;
}

}  // namespace

TEST_CASE("pair: zero input gives exact zero") {
  const PairingResult r = pair(TestFunction::zero(), TestFunction(packet(0)), packet_quad());
  CHECK(r.value == cplx{0.0, 0.0});
  CHECK(r.error_estimate == 0.0);
}

TEST_CASE("pair: (f,f) is real and nonnegative on both sheets") {
  for (int i = 0; i < 4; ++i) {
    const TestFunction f(packet(i));
    for (Sheet s : {Sheet::Positive, Sheet::Negative}) {
      const PairingResult r = pair(f, f, packet_quad().with_sheet(s));
      CHECK(std::abs(r.value.imag()) <= 1e-10 * std::abs(r.value.real()) + r.error_estimate);
      CHECK(r.value.real() >= -1e-10 * std::abs(r.value.real()));
    }
  }
}

TEST_CASE("pair: Hermiticity and sesquilinearity") {
  const TestFunction f(packet(0)), g(packet(1)), h(packet(2));
  const LightConeQuadrature q = packet_quad();

  const PairingResult gf = pair(g, f, q);
  const PairingResult fg = pair(f, g, q);
  CHECK(std::abs(gf.value - std::conj(fg.value)) <=
        10.0 * (gf.error_estimate + fg.error_estimate) + 1e-12 * std::abs(gf.value));

  const cplx a{0.7, -0.4}, b{-0.3, 0.9};
  const PairingResult lhs = pair(g, f * a + h * b, q);
  const cplx rhs = a * pair(g, f, q).value + b * pair(g, h, q).value;
  CHECK(std::abs(lhs.value - rhs) <= 1e-10 * std::abs(rhs) + 3.0 * lhs.error_estimate);
}

TEST_CASE("pair: doubling hbar doubles the value exactly") {
  const TestFunction f(packet(0)), g(packet(1));
  MetricConstants m1, m2;
  m2.hbar = 2.0;
  const cplx v1 = pair(g, f, packet_quad(), m1).value;
  const cplx v2 = pair(g, f, packet_quad(), m2).value;
  CHECK(v2 == 2.0 * v1);
}

TEST_CASE("pair matches the Cartesian-grid Richardson oracle to 1e-6") {
  // two-frequency packets put O(1) mass on both sheets
  // narrow k-space widths keep mass away from the w = 0 kink of the
  // Cartesian oracle's integrand
  GaussianPacket pf = packet(0), pg = packet(1), pf2 = packet(2), pg2 = packet(3);
  pf.carrier = {3.0, 0.3, 0.0, 0.0};
  pf2.carrier = {-3.05, 0.0, 0.2, 0.0};
  pg.carrier = {2.9, -0.2, 0.2, 0.0};
  pg2.carrier = {-3.1, 0.1, 0.0, -0.2};
  for (auto* p : {&pf, &pg, &pf2, &pg2}) {
    p->sigma = p->tau = 1.25;
    p->center = {0.1, -0.1, 0.2, 0.0};
  }
  const TestFunction f = TestFunction(pf) + TestFunction(pf2) * cplx{0.4, 0.3};
  const TestFunction g = TestFunction(pg) + TestFunction(pg2) * cplx{-0.2, 0.6};

  LightConeQuadrature q = packet_quad();
  q.radial_cutoff = 11.0;
  for (Sheet s : {Sheet::Positive, Sheet::Negative}) {
    const PairingResult got = pair(g, f, q.with_sheet(s));
    const cplx want = oracle::cartesian_pair_oracle(g, f, 7.5, 64, 1.0, s);
    CHECK(std::abs(got.value - want) <= 1e-6 * std::abs(want));
  }
}

TEST_CASE("sheet identity: negative pairing equals the conjugate route") {
  const LightConeQuadrature q = packet_quad();
  for (int i = 0; i < 3; ++i) {
    const TestFunction f(packet(i)), g(packet(i + 1));
    const PairingResult direct = pair(g, f, q.with_sheet(Sheet::Negative));
    const PairingResult via = pair_negative_via_conjugates(g, f, q);
    const double tol =
        direct.error_estimate + via.error_estimate + 1e-6 * std::abs(direct.value) + 1e-14;
    CHECK(std::abs(direct.value - via.value) <= tol);
  }
}

TEST_CASE("real f: negative-sheet norm equals the positive one") {
  const TestFunction f = real_part(TestFunction(packet(0)));
  const PairingResult p = pair(f, f, packet_quad());
  const PairingResult n = pair(f, f, packet_quad().with_sheet(Sheet::Negative));
  CHECK(std::abs(p.value - n.value) <=
        10.0 * (p.error_estimate + n.error_estimate) + 1e-9 * std::abs(p.value));
}

TEST_CASE("pure positive-frequency packet has vanishing negative-sheet norm") {
  GaussianPacket p = packet(0);
  p.carrier = {4.5, 0.0, 0.0, 0.0};
  p.sigma = p.tau = 1.3;
  const TestFunction f(p);
  const double pos = pair(f, f, packet_quad()).value.real();
  const double neg =
      pair(f, f, packet_quad().with_sheet(Sheet::Negative), {}, pos).value.real();
  CHECK(std::abs(neg) <= 1e-10 * pos);
}

TEST_CASE("interpolated transform stays within 1e-9 of the exact lattice sum") {
  const BumpGrid b(pol(0), {0.0, 0.1, -0.2, 0.0}, {0.9, 1.0, 1.1, 1.0}, 2.0,
                   {0.8, 0.2, 0.0, 0.0}, cplx{1.0, -0.3}, 40, 1.0, 1e-4);
  RandomStream rs(77);
  double peak = b.fourier({0.8, 0.2, 0.0, 0.0}).max_abs();
  for (int t = 0; t < 200; ++t) {
    const std::uint64_t base = std::uint64_t(t) * 4;
    const FourVector k{rs.uniform(base, -3, 3), rs.uniform(base + 1, -3, 3),
                       rs.uniform(base + 2, -3, 3), rs.uniform(base + 3, -3, 3)};
    const Bivector exact = b.fourier(k);
    const Bivector fast = b.fourier_interp(k);
    CHECK((exact + fast * cplx{-1.0, 0.0}).max_abs() <= 2e-9 * peak);
  }
}

TEST_CASE("commutator functional: antisymmetry, reality structure, microcausality") {
  // real bumps, unit spatial half-width; time half width inside the window
  // that separates the spacelike and cone-crossing regimes
  // boxes tall in time and thin along the separation axis: the timelike
  // configuration straddles the light cone through its bulk while the
  // spatial one stays strictly spacelike
  auto bump_at = [](const FourVector& c) {
    Bivector rp;
    rp.time_space[0] = 1.0;
    rp.space_space[2] = 0.5;
    return TestFunction(
        BumpGrid(rp, c, {1.45, 0.4, 1.0, 1.0}, 2.0, {0, 0, 0, 0}, 1.0, 40, 1.0, 1e-4));
  };
  const TestFunction f = bump_at({0.0, -2.0, 0.0, 0.0});
  const TestFunction g_space = bump_at({0.0, 2.0, 0.0, 0.0});
  const TestFunction g_time = translate(f, {4.0, 0.0, 0.0, 0.0});

  CHECK(causal_separation(*f.support(), *g_space.support()) == CausalClass::Spacelike);
  CHECK(causal_separation(*f.support(), *g_time.support()) == CausalClass::NonSpacelike);

  LightConeQuadrature q;
  q.radial_nodes = 96;
  q.theta_nodes = 64;
  q.phi_nodes = 128;
  q.radial_cutoff = std::max(f.shell_bandwidth(), g_space.shell_bandwidth());
  q.refinement_tolerance = 1e-6;

  const double scale = pair(f, f, q).value.real();

  // C(f,f) = 0 for real f
  const PairingResult self = commutator_functional(f, f, q, {}, scale);
  CHECK(std::abs(self.value) <= 1e-9 * scale);

  const PairingResult cs = commutator_functional(f, g_space, q, {}, scale);
  const PairingResult ct = commutator_functional(f, g_time, q, {}, scale);
  // real pair: the functional is purely imaginary
  CHECK(std::abs(ct.value.real()) <= 1e-10 * std::abs(ct.value) + 1e-12 * scale);
  // spacelike-separated supports: tiny versus the pairing scale...
  CHECK(std::abs(cs.value) <= 1e-6 * scale);
  // ...and versus the cone-crossing configuration at equal distance
  CHECK(std::abs(ct.value) > 1e3 * std::abs(cs.value));
}

TEST_CASE("gram matrix: normalized singleton, duplication rank, PSD, exports") {
  const LightConeQuadrature q = packet_quad();
  TestFunction f = real_part(TestFunction(packet(1)));
  const double n = pair(f, f, q).value.real();
  f = f * cplx{1.0 / std::sqrt(n), 0.0};

  const GramMatrix g1 = gram_matrix({f}, Sheet::Positive, q);
  CHECK(g1.entries(0, 0).real() == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(g1.hermiticity_defect <= 1e-8);

  const GramMatrix g2 = gram_matrix({f, f}, Sheet::Positive, q);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g2.entries);
  CHECK(es.eigenvalues()(0) <= 1e-10 * es.eigenvalues()(1));
  CHECK(es.eigenvalues()(1) == doctest::Approx(2.0).epsilon(1e-6));

  std::vector<TestFunction> bank;
  for (int i = 0; i < 4; ++i) bank.push_back(TestFunction(packet(i)));
  const GramMatrix g4 = gram_matrix(bank, Sheet::Positive, q);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es4(g4.entries);
  CHECK(es4.eigenvalues().minCoeff() >= -1e-10 * es4.eigenvalues().maxCoeff());

  const std::string csv = gram_to_csv(g4);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  const std::string js = gram_to_json_text(g4);
  CHECK(js.find("hermiticity_defect") != std::string::npos);
}

TEST_CASE("quadrature convergence contract: tighter tolerance moves within estimate") {
  const TestFunction f(packet(0)), g(packet(2));
  LightConeQuadrature q = packet_quad();
  q.refinement_tolerance = 1e-6;
  const PairingResult loose = pair(g, f, q);
  q.refinement_tolerance = 5e-7;
  const PairingResult tight = pair(g, f, q);
  CHECK(std::abs(tight.value - loose.value) <= loose.error_estimate + 1e-15);
}

TEST_CASE("cutoff below the declared bandwidth is rejected") {
  LightConeQuadrature q = packet_quad();
  q.radial_cutoff = 2.0;
  CHECK_THROWS_AS((void)pair(TestFunction(packet(0)), TestFunction(packet(1)), q), CutoffError);
}
