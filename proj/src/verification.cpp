#include "lcf/verification.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lcf/fock.hpp"
#include "lcf/parallel.hpp"
#include "lcf/random_field.hpp"
#include "lcf/rng.hpp"
#include "lcf/version.hpp"

namespace lcf {

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct Ctx {
  CriterionResult& r;
  const VerificationOptions& opt;

  void check(const std::string& label, double measured, double bound) {
    const bool ok = measured <= bound;
    r.checks.push_back({label, measured, bound, ok});
    r.pass = r.pass && ok;
  }
  void flag(const std::string& label, bool ok) {
    r.checks.push_back({label, ok ? 0.0 : 1.0, 0.0, ok});
    r.pass = r.pass && ok;
  }
  void info(const std::string& label, double value) {
    r.checks.push_back({label, value, std::numeric_limits<double>::infinity(), true});
  }
  void write_csv(const std::string& filename, const std::string& content) const {
    if (opt.out_dir.empty()) return;
    std::filesystem::create_directories(opt.out_dir);
    std::ofstream out(std::filesystem::path(opt.out_dir) / filename);
    out << content;
  }
};

// --- deterministic test-function library -----------------------------------

Bivector pol_library(int which) {
  Bivector F;
  switch (which % 4) {
    case 0:
      F.time_space[0] = {1.0, 0.0};
      F.space_space[2] = {0.0, 0.4};
      break;
    case 1:
      F.time_space[1] = {0.6, -0.2};
      F.time_space[2] = {0.1, 0.3};
      break;
    case 2:
      F.space_space[0] = {0.9, 0.1};
      F.time_space[0] = {-0.2, 0.5};
      break;
    default:
      F.time_space[2] = {0.8, 0.0};
      F.space_space[1] = {0.3, -0.6};
      break;
  }
  return F;
}

LightConeQuadrature packet_quad(bool fast, double cutoff = 12.0) {
  LightConeQuadrature q;
  q.radial_nodes = fast ? 28 : 36;
  q.theta_nodes = fast ? 14 : 18;
  q.phi_nodes = fast ? 28 : 36;
  q.radial_cutoff = cutoff;
  q.refinement_tolerance = fast ? 1e-6 : 1e-8;
  q.max_rounds = 5;
  return q;
}

/// Real normalized packet combinations with pairwise overlaps.
TestFunction real_combo(int which, bool fast) {
  GaussianPacket p;
  p.polarization = pol_library(which);
  p.sigma = 1.0 + 0.07 * which;
  p.tau = 0.9 + 0.05 * which;
  p.center = {0.06 * which, 0.22 - 0.12 * which, 0.09 * which, -0.04 * which};
  p.carrier = {1.8 + 0.28 * which, 0.25, 0.12 * which, -0.18};
  p.amplitude = cplx{0.85, 0.2 * which};
  TestFunction f = real_part(TestFunction(p));
  const double n = pair(f, f, packet_quad(fast)).value.real();
  return f * cplx{1.0 / std::sqrt(n), 0.0};
}

/// Normalized pure positive-frequency packets ((f,f)_- at machine level).
TestFunction positive_packet(int which, bool fast) {
  GaussianPacket p;
  p.polarization = pol_library(which + 1);
  p.sigma = p.tau = 1.25;
  p.center = {0.0, 0.12 * which, -0.1, 0.05 * which};
  p.carrier = {4.2 + 0.25 * which, 0.2, -0.1 * which, 0.1};
  p.amplitude = 1.0;
  TestFunction f(p);
  const double n = pair(f, f, packet_quad(fast)).value.real();
  return f * cplx{1.0 / std::sqrt(n), 0.0};
}

GaussianPacket random_packet(const RandomStream& par, const RandomStream& pol,
                             std::uint64_t i) {
  const std::uint64_t b = i * 16;
  GaussianPacket p;
  p.sigma = par.uniform(b, 0.7, 1.4);
  p.tau = par.uniform(b + 1, 0.7, 1.4);
  p.carrier = {par.uniform(b + 2, 1.2, 2.8), par.uniform(b + 3, -0.5, 0.5),
               par.uniform(b + 4, -0.5, 0.5), par.uniform(b + 5, -0.5, 0.5)};
  p.center = {par.uniform(b + 6, -0.8, 0.8), par.uniform(b + 7, -0.8, 0.8),
              par.uniform(b + 8, -0.8, 0.8), par.uniform(b + 9, -0.8, 0.8)};
  const double mag = par.uniform(b + 10, 0.5, 1.5);
  const double ph = par.uniform(b + 11, 0.0, 2.0 * M_PI);
  p.amplitude = cplx{mag * std::cos(ph), mag * std::sin(ph)};
  double norm = 0.0;
  for (int c = 0; c < 3; ++c) {
    p.polarization.time_space[std::size_t(c)] = {pol.normal(b + 2 * std::uint64_t(c)),
                                                 pol.normal(b + 2 * std::uint64_t(c) + 1)};
    p.polarization.space_space[std::size_t(c)] = {pol.normal(b + 6 + 2 * std::uint64_t(c)),
                                                  pol.normal(b + 7 + 2 * std::uint64_t(c))};
  }
  for (int c = 0; c < 3; ++c)
    norm += std::norm(p.polarization.time_space[std::size_t(c)]) +
            std::norm(p.polarization.space_space[std::size_t(c)]);
  p.polarization = p.polarization * cplx{1.0 / std::sqrt(norm), 0.0};
  return p;
}

double cnorm(const CFourVector& v) {
  return std::sqrt(std::norm(v.t) + std::norm(v.x[0]) + std::norm(v.x[1]) + std::norm(v.x[2]));
}

// --- criterion bodies -------------------------------------------------------

void crit_eq1_positivity(Ctx& ctx) {
  const double t0 = now_ms();
  const int n = ctx.opt.fast ? 12 : 50;
  const RandomStream par(1001), pol(1001, 1);
  std::vector<TestFunction> bank;
  double bw = 0.0;
  for (int i = 0; i < n; ++i) {
    bank.emplace_back(random_packet(par, pol, std::uint64_t(i)));
    bw = std::max(bw, bank.back().shell_bandwidth());
  }
  LightConeQuadrature q = packet_quad(ctx.opt.fast, bw + 0.5);
  q.radial_nodes = ctx.opt.fast ? 32 : 40;
  q.theta_nodes = ctx.opt.fast ? 16 : 20;
  q.phi_nodes = ctx.opt.fast ? 32 : 40;

  for (Sheet sheet : {Sheet::Positive, Sheet::Negative}) {
    const std::string tag = sheet == Sheet::Positive ? "positive" : "negative";
    const GramMatrix g = gram_matrix(bank, sheet, q);
    double scale = 0.0, worst_im = 0.0, worst_neg = 0.0;
    for (long i = 0; i < g.entries.rows(); ++i) {
      scale = std::max(scale, std::abs(g.entries(i, i)));
      worst_im = std::max(worst_im, std::abs(g.entries(i, i).imag()));
      worst_neg = std::max(worst_neg, -g.entries(i, i).real());
    }
    ctx.check("diag_imag[" + tag + "]", worst_im, 1e-10 * scale);
    ctx.check("diag_negative_part[" + tag + "]", std::max(worst_neg, 0.0), 1e-10 * scale);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g.entries);
    const double lmax = es.eigenvalues().maxCoeff();
    ctx.check("eig_negative_part[" + tag + "]", std::max(0.0, -es.eigenvalues().minCoeff()),
              1e-10 * lmax);
  }
  ctx.check("runtime_s", (now_ms() - t0) / 1000.0, 30.0);
}

void crit_spacelike(Ctx& ctx) {
  const double t0 = now_ms();
  const int n = ctx.opt.fast ? 300 : 1000;
  const RandomStream rs(1002);
  double worst_kv = 0.0, worst_vv = 0.0;
  for (int t = 0; t < n; ++t) {
    const std::uint64_t b = std::uint64_t(t) * 24;
    Bivector F;
    for (int c = 0; c < 3; ++c) {
      F.time_space[std::size_t(c)] = {rs.normal(b + 2 * std::uint64_t(c)),
                                      rs.normal(b + 2 * std::uint64_t(c) + 1)};
      F.space_space[std::size_t(c)] = {rs.normal(b + 6 + 2 * std::uint64_t(c)),
                                       rs.normal(b + 7 + 2 * std::uint64_t(c))};
    }
    const double w = std::exp(rs.uniform(b + 14, std::log(0.1), std::log(10.0)));
    double d[3] = {rs.normal(b + 15), rs.normal(b + 16), rs.normal(b + 17)};
    const double dn = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    const double sgn = rs.uniform(b + 18) < 0.5 ? -1.0 : 1.0;
    const FourVector k{sgn * w, w * d[0] / dn, w * d[1] / dn, w * d[2] / dn};
    const CFourVector v = contract_wave_bivector(k, F);
    const double vv = cnorm(v) * cnorm(v);
    const cplx kv = k.t * v.t - k.x[0] * v.x[0] - k.x[1] * v.x[1] - k.x[2] * v.x[2];
    worst_kv = std::max(worst_kv, std::abs(kv) / std::max(2.0 * w * cnorm(v), 1e-300));
    worst_vv =
        std::max(worst_vv, std::real(conj_minkowski_dot(v, v)) / std::max(vv, 1e-300));
  }
  ctx.check("max |k.v| / scale", worst_kv, 1e-12);
  ctx.check("max Re(v*.v) / |v|^2", std::max(worst_vv, 0.0), 1e-12);
  ctx.check("runtime_s", (now_ms() - t0) / 1000.0, 1.0);
}

void crit_eq2_sheet(Ctx& ctx) {
  const int n = ctx.opt.fast ? 8 : 20;
  const RandomStream par(1003), pol(1003, 1);
  const LightConeQuadrature q = packet_quad(ctx.opt.fast, 12.5);
  double worst_rel = 0.0;
  bool within_estimates = true;
  for (int t = 0; t < n; ++t) {
    // two-frequency functions put mass on both sheets
    GaussianPacket a1 = random_packet(par, pol, std::uint64_t(4 * t));
    GaussianPacket a2 = random_packet(par, pol, std::uint64_t(4 * t + 1));
    GaussianPacket b1 = random_packet(par, pol, std::uint64_t(4 * t + 2));
    GaussianPacket b2 = random_packet(par, pol, std::uint64_t(4 * t + 3));
    a2.carrier.t = -a2.carrier.t;
    b2.carrier.t = -b2.carrier.t;
    const TestFunction f = TestFunction(a1) + TestFunction(a2) * cplx{0.5, 0.3};
    const TestFunction g = TestFunction(b1) + TestFunction(b2) * cplx{-0.4, 0.6};
    const PairingResult direct = pair(g, f, q.with_sheet(Sheet::Negative));
    const PairingResult via = pair_negative_via_conjugates(g, f, q);
    const double diff = std::abs(direct.value - via.value);
    within_estimates =
        within_estimates && diff <= direct.error_estimate + via.error_estimate + 1e-14;
    worst_rel = std::max(worst_rel, diff / std::max(std::abs(direct.value), 1e-300));
  }
  ctx.check("max relative sheet-identity defect", worst_rel, 1e-6);
  ctx.flag("all pairs within combined error estimates", within_estimates);
}

void crit_microcausality(Ctx& ctx) {
  // Boxes tall in time (w_t = 1.45) and thin along the separation axis
  // (w_x = 0.4): at center distance 4 x (spatial support radius 1) the
  // timelike configuration straddles the light cone through its bulk while
  // the spatial one stays strictly spacelike.
  Bivector rp;
  rp.time_space[0] = 1.0;
  rp.space_space[2] = 0.5;
  auto bump_at = [&](const FourVector& c) {
    return TestFunction(
        BumpGrid(rp, c, {1.45, 0.4, 1.0, 1.0}, 2.0, {0, 0, 0, 0}, 1.0, 40, 1.0, 1e-4));
  };
  const TestFunction f = bump_at({0.0, -2.0, 0.0, 0.0});
  const TestFunction g0 = bump_at({0.0, 2.0, 0.0, 0.0});  // separation 4 = 4 x radius
  const TestFunction gt = translate(f, {4.0, 0.0, 0.0, 0.0});

  ctx.flag("spacelike pair classified spacelike",
           causal_separation(*f.support(), *g0.support()) == CausalClass::Spacelike);
  ctx.flag("timelike pair classified non-spacelike",
           causal_separation(*f.support(), *gt.support()) == CausalClass::NonSpacelike);

  LightConeQuadrature q;
  q.radial_nodes = ctx.opt.fast ? 80 : 120;
  q.theta_nodes = ctx.opt.fast ? 56 : 80;
  q.phi_nodes = ctx.opt.fast ? 112 : 160;
  q.radial_cutoff = f.shell_bandwidth();
  q.refinement_tolerance = ctx.opt.fast ? 1e-5 : 1e-7;
  q.max_rounds = 3;

  const double scale = pair(f, f, q).value.real();
  const PairingResult cs = commutator_functional(f, g0, q, {}, scale);
  const PairingResult ct = commutator_functional(f, gt, q, {}, scale);
  ctx.info("|C| timelike / pairing scale", std::abs(ct.value) / scale);
  ctx.check("|C| spacelike <= 1e-6 |C| timelike", std::abs(cs.value),
            1e-6 * std::abs(ct.value));

  // separation scan (descriptive curve; the headline check is above)
  LightConeQuadrature qs = q;
  qs.radial_nodes = 80;
  qs.theta_nodes = 56;
  qs.phi_nodes = 112;
  qs.refinement_tolerance = 3e-4;
  qs.max_rounds = 2;
  std::ostringstream csv;
  csv.precision(12);
  csv << "separation,classification,abs_commutator\n";
  const int steps = ctx.opt.fast ? 6 : 12;
  double near_value = 0.0, far_value = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double s = 6.0 * double(i) / double(steps);
    const TestFunction g = translate(g0, {0.0, s - 4.0, 0.0, 0.0});  // center distance s
    const std::string cls =
        causal_separation(*f.support(), *g.support()) == CausalClass::Spacelike
            ? "spacelike"
            : "non-spacelike";
    const PairingResult c = commutator_functional(f, g, qs, {}, scale);
    if (i == steps / 3) near_value = std::abs(c.value);
    if (i == steps) far_value = std::abs(c.value);
    csv << s << ',' << cls << ',' << std::abs(c.value) << '\n';
  }
  ctx.write_csv("microcausality_scan.csv", csv.str());
  ctx.check("scan plateau: |C|(6) <= 1e-3 |C|(2)", far_value,
            1e-3 * std::max(near_value, 1e-300));
}

struct TwoFnSetup {
  std::vector<TestFunction> bank;
  ModeBasis basis_a, basis_b;
  std::shared_ptr<const FockSpace> space;
};

TwoFnSetup make_setup(std::vector<TestFunction> bank, const LightConeQuadrature& q,
                      int a_modes_cut, int cutoff) {
  TwoFnSetup s{std::move(bank),
               build_mode_basis(s.bank, Sheet::Positive, q),
               build_mode_basis(s.bank, Sheet::Negative, q), nullptr};
  (void)a_modes_cut;
  s.space = std::make_shared<FockSpace>(s.basis_a.modes(), s.basis_b.modes(), cutoff);
  return s;
}

void crit_ccr(Ctx& ctx) {
  const bool fast = ctx.opt.fast;
  const LightConeQuadrature q = packet_quad(fast);
  std::vector<TestFunction> bank{real_combo(0, fast), real_combo(1, fast)};
  const ModeBasis ba = build_mode_basis(bank, Sheet::Positive, q);
  const ModeBasis bb = build_mode_basis(bank, Sheet::Negative, q);
  const auto space = std::make_shared<FockSpace>(ba.modes(), bb.modes(), fast ? 8 : 12);
  ctx.info("fock dimension", double(space->dimension()));

  const auto a_f = ladder_operator_bank(ba, 0, LadderKind::Annihilate, SectorTag::A, space);
  const auto a_g = ladder_operator_bank(ba, 1, LadderKind::Annihilate, SectorTag::A, space);
  const auto adag_g = ladder_operator_bank(ba, 1, LadderKind::Create, SectorTag::A, space);
  const auto b_f = ladder_operator_bank(bb, 0, LadderKind::Annihilate, SectorTag::B, space);
  const auto bdag_g = ladder_operator_bank(bb, 1, LadderKind::Create, SectorTag::B, space);

  const OperatorMatrix ccr = commutator(a_f, adag_g);
  const cplx gf = ba.gram().entries(1, 0);
  const OperatorMatrix resid = op_sub(ccr, op_scale(op_identity(space), gf));
  ctx.check("|[a_f,a_gdag] - (g,f)I| restricted Frobenius",
            restricted_frobenius(resid, ccr.safe_level()), 1e-8 * std::abs(gf));

  const double lowering_scale =
      max_abs_entry(a_f) * max_abs_entry(a_g) * double(space->cutoff());
  ctx.check("max |[a_f,a_g]| (roundoff zero)", max_abs_entry(commutator(a_f, a_g)),
            1e-14 * lowering_scale);

  const OperatorMatrix c1 = commutator(a_f, b_f);
  const OperatorMatrix c2 = commutator(a_f, bdag_g);
  const OperatorMatrix c3 = commutator(adag_g, bdag_g);
  ctx.flag("[a,b] bit-zero", max_abs_entry(c1) == 0.0);
  ctx.flag("[a,bdag] bit-zero on safe subspace",
           restricted_frobenius(c2, c2.safe_level()) == 0.0);
  ctx.flag("[adag,bdag] bit-zero on safe subspace",
           restricted_frobenius(c3, c3.safe_level()) == 0.0);
}

void crit_eq4(Ctx& ctx) {
  const bool fast = ctx.opt.fast;
  const LightConeQuadrature q = packet_quad(fast);
  const int n_pairs = fast ? 4 : 8;
  const int cutoff = fast ? 8 : 12;

  // packet-combo pairs at assorted center offsets (timelike, spacelike, null-ish)
  const FourVector offsets[] = {{0, 0, 0, 0},     {2.5, 0, 0, 0},   {0, 3, 0, 0},
                                {1.5, 1.5, 0, 0}, {1.0, 0, 2.0, 0}, {3.0, 0.5, 0, 0},
                                {0.5, 0, 0, 2.5}, {2.0, 2.0, 2.0, 0}};
  double worst = 0.0;
  for (int p = 0; p < n_pairs; ++p) {
    const TestFunction f = real_combo(p % 3, fast);
    const TestFunction g = translate(real_combo((p + 1) % 3, fast), offsets[p]);
    std::vector<TestFunction> bank{f, g};
    const ModeBasis ba = build_mode_basis(bank, Sheet::Positive, q);
    const ModeBasis bb = build_mode_basis(bank, Sheet::Negative, q);
    const auto space = std::make_shared<FockSpace>(ba.modes(), bb.modes(), cutoff);
    const auto chi_f = observable_from_bank(ObservableKind::Chi, 1, 1, 0, ba, bb, space);
    const auto chi_g = observable_from_bank(ObservableKind::Chi, 1, 1, 1, ba, bb, space);
    const OperatorMatrix cc = commutator(chi_f, chi_g);
    const int lvl = cc.safe_level();
    const double scale = restricted_frobenius(chi_f, lvl) * restricted_frobenius(chi_g, lvl);
    const double norm = restricted_frobenius(cc, lvl);
    ctx.check("|[chi,chi]| pair " + std::to_string(p), norm, 1e-10 * scale);
    worst = std::max(worst, norm / scale);
  }

  // a compact-support pair with timelike-related supports: the phi commutator
  // is genuinely nonzero there while chi stays trivial
  {
    Bivector rp;
    rp.time_space[0] = 1.0;
    rp.space_space[2] = 0.5;
    auto bump_at = [&](const FourVector& c) {
      return TestFunction(
          BumpGrid(rp, c, {1.45, 0.4, 1.0, 1.0}, 2.0, {0, 0, 0, 0}, 1.0, 28, 1.0, 1e-3));
    };
    const TestFunction f = bump_at({0.0, 0.0, 0.0, 0.0});
    const TestFunction g = bump_at({4.0, 0.0, 0.0, 0.0});
    LightConeQuadrature bq = q;
    bq.radial_cutoff = std::max(f.shell_bandwidth(), 14.0);
    bq.radial_nodes = 64;
    bq.theta_nodes = 28;
    bq.phi_nodes = 56;
    std::vector<TestFunction> bank{f, g};
    const ModeBasis ba = build_mode_basis(bank, Sheet::Positive, bq);
    const ModeBasis bb = build_mode_basis(bank, Sheet::Negative, bq);
    const auto space = std::make_shared<FockSpace>(ba.modes(), bb.modes(), cutoff);
    const auto chi_f = observable_from_bank(ObservableKind::Chi, 1, 1, 0, ba, bb, space);
    const auto chi_g = observable_from_bank(ObservableKind::Chi, 1, 1, 1, ba, bb, space);
    const auto phi_f = observable_from_bank(ObservableKind::Phi, 1, 0, 0, ba, bb, space);
    const auto phi_g = observable_from_bank(ObservableKind::Phi, 1, 0, 1, ba, bb, space);
    const OperatorMatrix cc = commutator(chi_f, chi_g);
    const OperatorMatrix pp = commutator(phi_f, phi_g);
    const int lvl = cc.safe_level();
    const double scale = restricted_frobenius(chi_f, lvl) * restricted_frobenius(chi_g, lvl);
    ctx.check("|[chi,chi]| timelike bump pair", restricted_frobenius(cc, lvl), 1e-10 * scale);
    ctx.flag("timelike pair has nonzero phi commutator",
             restricted_frobenius(pp, lvl) > 1e3 * restricted_frobenius(cc, lvl));
  }
  ctx.info("worst |[chi,chi]| / scale", worst);
}

void crit_eq5(Ctx& ctx) {
  const bool fast = ctx.opt.fast;
  const LightConeQuadrature q = packet_quad(fast);
  std::vector<TestFunction> bank{real_combo(0, fast), real_combo(1, fast)};
  const ModeBasis ba = build_mode_basis(bank, Sheet::Positive, q);
  const ModeBasis bb = build_mode_basis(bank, Sheet::Negative, q);
  const auto space = std::make_shared<FockSpace>(ba.modes(), bb.modes(), fast ? 8 : 12);

  const auto phi_f = observable_from_bank(ObservableKind::Phi, 1, 0, 0, ba, bb, space);
  const auto phi_g = observable_from_bank(ObservableKind::Phi, 1, 0, 1, ba, bb, space);
  const OperatorMatrix pp = commutator(phi_f, phi_g);
  const DensityOperator vac = DensityOperator::from_state(vacuum_state(space));
  const double gff = ba.gram().entries(0, 0).real();
  const double gffm = bb.gram().entries(0, 0).real();

  const double grid[] = {0.0, 0.5, 1.0, std::sqrt(2.0)};
  for (double al : grid) {
    for (double be : grid) {
      const auto xf = observable_from_bank(ObservableKind::Xi, al, be, 0, ba, bb, space);
      const auto xg = observable_from_bank(ObservableKind::Xi, al, be, 1, ba, bb, space);
      const OperatorMatrix cc = commutator(xf, xg);
      const OperatorMatrix resid = op_sub(cc, op_scale(pp, al * al - be * be));
      const int lvl = cc.safe_level();
      const double scale = restricted_frobenius(xf, lvl) * restricted_frobenius(xg, lvl) +
                           std::abs(al * al - be * be) * restricted_frobenius(pp, lvl) + 1e-12;
      std::ostringstream tag;
      tag.precision(3);
      tag << "a=" << al << ",b=" << be;
      ctx.check("xi law residual [" + tag.str() + "]", restricted_frobenius(resid, lvl),
                1e-8 * scale);
      if (al == be) {
        const double czero = restricted_frobenius(cc, lvl);
        ctx.check("compensated commutator [" + tag.str() + "]", czero,
                  1e-10 * (restricted_frobenius(xf, lvl) * restricted_frobenius(xg, lvl) +
                           1e-12));
        const double var = expectation_of_square(vac, xf);
        const double want = al * al * gff + be * be * gffm;
        ctx.check("compensated variance match [" + tag.str() + "]", std::abs(var - want),
                  1e-6 * std::max(want, 1e-12));
      }
    }
  }
}

void crit_charfn(Ctx& ctx) {
  const double t0 = now_ms();
  const bool fast = ctx.opt.fast;
  const LightConeQuadrature q = packet_quad(fast);
  std::vector<TestFunction> bank{real_combo(0, fast)};
  const ModeBasis ba = build_mode_basis(bank, Sheet::Positive, q);
  const ModeBasis bb = build_mode_basis(bank, Sheet::Negative, q);
  const int cutoff = fast ? 44 : 56;  // single mode: dimension = cutoff + 1
  const auto space = std::make_shared<FockSpace>(1, 0, cutoff);
  const auto phi_f = observable_from_bank(ObservableKind::Phi, 1, 0, 0, ba, bb, space);
  const DensityOperator vac = DensityOperator::from_state(vacuum_state(space));
  const double gff = ba.gram().entries(0, 0).real();

  CharacteristicQuery query;
  for (int j = 0; j < 13; ++j) query.lambdas.push_back(3.0 * double(j) / 12.0);
  query.analytic_variance = gff;
  const CharFnResult r = characteristic_function(vac, phi_f, query);
  ctx.check("max |numeric - exp(-l^2 (f*,f)/2)|", r.max_cross_difference, 1e-6);
  ctx.flag("lambda = 0 gives exactly 1", r.values[0] == cplx{1.0, 0.0});
  ctx.info("modeled truncation bound", r.truncation_bound);

  std::ostringstream csv;
  csv.precision(12);
  csv << "lambda,re,im,analytic\n";
  for (std::size_t j = 0; j < query.lambdas.size(); ++j)
    csv << query.lambdas[j] << ',' << r.values[j].real() << ',' << r.values[j].imag() << ','
        << std::exp(-0.5 * query.lambdas[j] * query.lambdas[j] * gff) << '\n';
  ctx.write_csv("vacuum_charfn.csv", csv.str());
  ctx.check("runtime_s", (now_ms() - t0) / 1000.0, 10.0);
}

void crit_eq6_coth(Ctx& ctx) {
  const bool fast = ctx.opt.fast;
  const LightConeQuadrature q = packet_quad(fast);
  std::vector<TestFunction> bank{real_combo(0, fast)};
  const ModeBasis ba = build_mode_basis(bank, Sheet::Positive, q);
  const ModeBasis bb = build_mode_basis(bank, Sheet::Negative, q);
  const double gff = ba.gram().entries(0, 0).real();
  const double gffm = bb.gram().entries(0, 0).real();
  const double al = 1.0 / std::sqrt(2.0), be = al;

  const std::vector<double> grid = fast ? std::vector<double>{0.5, 2.0}
                                        : std::vector<double>{0.5, 1.0, 2.0};
  std::map<std::pair<double, double>, double> fitted;
  std::ostringstream csv;
  csv.precision(12);
  csv << "mu,nu,cutoff,fitted,expected,tail_bound\n";
  for (double mu : grid) {
    for (double nu : grid) {
      const GibbsSpec spec{mu, nu};
      const int cutoff = gibbs_cutoff_for(spec, 2);
      const auto space = std::make_shared<FockSpace>(1, 1, cutoff);
      const auto xi = observable_from_bank(ObservableKind::Xi, al, be, 0, ba, bb, space);
      const GibbsResult gr = gibbs_weight(spec, space);
      ctx.flag("tail rule satisfied [mu=" + std::to_string(mu) +
                   ",nu=" + std::to_string(nu) + "]",
               !gr.tail_warning && gr.tail_bound_rel < 1e-8);

      CharacteristicQuery query;
      for (int j = 0; j < 13; ++j) query.lambdas.push_back(1.2 * double(j) / 12.0);
      const CharFnResult r = characteristic_function(gr.rho, xi, query);
      double sxy = 0.0, sxx = 0.0;
      for (std::size_t j = 1; j < query.lambdas.size(); ++j) {
        const double x = query.lambdas[j] * query.lambdas[j];
        sxy += x * (-2.0 * std::log(std::abs(r.values[j])));
        sxx += x * x;
      }
      const double slope = sxy / sxx;  // = al^2 coth(mu) gff + be^2 coth(nu) gffm
      const double fitted_mult = slope / (al * al * gff + be * be * gffm);
      const double expected_mult = (al * al / std::tanh(mu) + be * be / std::tanh(nu)) /
                                   (al * al + be * be);
      fitted[{mu, nu}] = fitted_mult;
      csv << mu << ',' << nu << ',' << cutoff << ',' << fitted_mult << ',' << expected_mult
          << ',' << gr.tail_bound_rel << '\n';
      ctx.check("coth law [mu=" + std::to_string(mu) + ",nu=" + std::to_string(nu) + "]",
                std::abs(fitted_mult - expected_mult), 1e-3);
    }
  }
  for (double nu : grid) {
    bool mono = true;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
      mono = mono && fitted[{grid[i], nu}] > fitted[{grid[i + 1], nu}];
    ctx.flag("suppressed-fluctuations monotonicity [nu=" + std::to_string(nu) + "]", mono);
  }
  ctx.write_csv("gibbs_coth_sweep.csv", csv.str());
}

void crit_jacobi(Ctx& ctx) {
  const bool fast = ctx.opt.fast;
  const LightConeQuadrature q = packet_quad(fast);
  std::vector<TestFunction> bank{real_combo(0, fast), real_combo(1, fast), real_combo(2, fast)};
  const ModeBasis ba = build_mode_basis(bank, Sheet::Positive, q);
  const ModeBasis bb = build_mode_basis(bank, Sheet::Negative, q);
  const auto space = std::make_shared<FockSpace>(ba.modes(), bb.modes(), fast ? 8 : 10);
  ctx.info("fock dimension", double(space->dimension()));

  std::vector<OperatorMatrix> pool;
  std::vector<std::string> pool_names;
  pool.push_back(number_operator(SectorTag::A, space));
  pool_names.push_back("Xi_a");
  pool.push_back(number_operator(SectorTag::B, space));
  pool_names.push_back("Xi_b");
  for (int i = 0; i < 3; ++i) {
    pool.push_back(ladder_operator_bank(ba, i, LadderKind::Annihilate, SectorTag::A, space));
    pool_names.push_back("a_" + std::to_string(i));
    pool.push_back(ladder_operator_bank(ba, i, LadderKind::Create, SectorTag::A, space));
    pool_names.push_back("adag_" + std::to_string(i));
  }
  pool.push_back(ladder_operator_bank(bb, 0, LadderKind::Annihilate, SectorTag::B, space));
  pool_names.push_back("b_0");
  pool.push_back(ladder_operator_bank(bb, 1, LadderKind::Create, SectorTag::B, space));
  pool_names.push_back("bdag_1");
  pool.push_back(observable_from_bank(ObservableKind::Phi, 1, 0, 0, ba, bb, space));
  pool_names.push_back("phi_0");
  pool.push_back(observable_from_bank(ObservableKind::Chi, 1, 1, 1, ba, bb, space));
  pool_names.push_back("chi_1");
  pool.push_back(observable_from_bank(ObservableKind::Xi, 1.0, 0.5, 2, ba, bb, space));
  pool_names.push_back("xi_2");

  const int n = fast ? 10 : 25;
  const RandomStream rs(1010);
  std::vector<std::array<OperatorMatrix, 3>> triples;
  std::vector<std::array<std::string, 3>> names;
  for (int t = 0; t < n; ++t) {
    const auto i = std::size_t(rs.uniform(3 * std::uint64_t(t)) * double(pool.size()));
    const auto j = std::size_t(rs.uniform(3 * std::uint64_t(t) + 1) * double(pool.size()));
    const auto k = std::size_t(rs.uniform(3 * std::uint64_t(t) + 2) * double(pool.size()));
    triples.push_back({pool[i], pool[j], pool[k]});
    names.push_back({pool_names[i], pool_names[j], pool_names[k]});
  }
  const JacobiReport rep = jacobi_check(triples, names);
  ctx.check("max jacobi residual ratio over " + std::to_string(n) + " triples", rep.max_ratio,
            1e-10);
}

void crit_sampler(Ctx& ctx) {
  const bool fast = ctx.opt.fast;
  const LightConeQuadrature q = packet_quad(fast);
  std::vector<TestFunction> bank;
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) {
    bank.push_back(real_combo(i, fast));
    ids.push_back("f" + std::to_string(i));
  }
  const CovarianceModel model = covariance(bank, CovarianceSource::Vacuum, q, {}, {}, ids);
  const long count = fast ? 20000 : 100000;
  const SampleBatch batch = sample_batch(model, count, ctx.opt.seed);

  double worst_sigma = 0.0;
  bool all_within = true;
  for (long i = 0; i < 4; ++i)
    for (long j = i; j < 4; ++j) {
      const double dev = std::abs(batch.empirical_covariance(i, j) - model.matrix(i, j));
      const double se = batch.standard_errors(i, j);
      worst_sigma = std::max(worst_sigma, dev / std::max(se, 1e-300));
      all_within = all_within && dev <= 4.0 * se;
    }
  ctx.check("worst |empirical - model| in jackknife SE units", worst_sigma, 4.0);
  ctx.flag("all entries within 4 SE", all_within);

  const int saved = default_thread_count();
  set_thread_count(1);
  const SampleBatch serial = sample_batch(model, count, ctx.opt.seed);
  set_thread_count(saved > 1 ? saved : 2);
  const SampleBatch threaded = sample_batch(model, count, ctx.opt.seed);
  set_thread_count(0);
  ctx.flag("draws bit-identical across worker counts",
           (serial.draws - threaded.draws).cwiseAbs().maxCoeff() == 0.0 &&
               (serial.empirical_covariance - threaded.empirical_covariance)
                       .cwiseAbs()
                       .maxCoeff() == 0.0);

  std::ostringstream csv;
  csv.precision(12);
  csv << "i,j,model,empirical,standard_error\n";
  for (long i = 0; i < 4; ++i)
    for (long j = 0; j < 4; ++j)
      csv << i << ',' << j << ',' << model.matrix(i, j) << ','
          << batch.empirical_covariance(i, j) << ',' << batch.standard_errors(i, j) << '\n';
  ctx.write_csv("sampler_stats.csv", csv.str());
}

void crit_convolution(Ctx& ctx) {
  const bool fast = ctx.opt.fast;
  const LightConeQuadrature q = packet_quad(fast);
  const TestFunction h = positive_packet(0, fast);
  const TestFunction f = real_combo(1, fast);

  const std::vector<TestFunction> bank_a{h, f};
  const std::vector<TestFunction> bank_b{f};
  const ModeBasis ba = build_mode_basis(bank_a, Sheet::Positive, q);
  const ModeBasis bb = build_mode_basis(bank_b, Sheet::Negative, q);
  const double lmax = fast ? 2.0 : 3.0;
  const int cutoff = fast ? 26 : 44;
  const auto space = std::make_shared<FockSpace>(ba.modes(), bb.modes(), cutoff);
  ctx.info("fock dimension", double(space->dimension()));

  std::vector<double> grid;
  for (int j = 0; j < 13; ++j) grid.push_back(lmax * double(j) / 12.0);

  const DensityOperator vac = DensityOperator::from_state(vacuum_state(space));
  const ConvolutionReport rv = convolution_check(vac, f, grid, ba, bb, space);
  ctx.check("vacuum max |Phi_chi - Phi_phi smoothed|", rv.max_difference, 1e-8);
  ctx.check("vacuum closed-form level", rv.max_difference, 1e-10);

  const DensityOperator one = projector_density(ba, h, space);
  const ConvolutionReport r1 = convolution_check(one, f, grid, ba, bb, space);
  ctx.check("one-quantum max |Phi_chi - Phi_phi smoothed|", r1.max_difference, 1e-8);
  ctx.flag("smoothing variance (f*,f)_- >= 0", r1.smoothing_variance >= 0.0);
  ctx.info("smoothing variance (f*,f)_-", r1.smoothing_variance);

  std::ostringstream csv;
  csv.precision(12);
  csv << "lambda,state,chi_re,chi_im,rhs_re,rhs_im\n";
  for (std::size_t j = 0; j < grid.size(); ++j) {
    csv << grid[j] << ",vacuum," << rv.chi_side[j].real() << ',' << rv.chi_side[j].imag()
        << ',' << rv.smoothed_phi_side[j].real() << ',' << rv.smoothed_phi_side[j].imag()
        << '\n';
    csv << grid[j] << ",one_quantum," << r1.chi_side[j].real() << ','
        << r1.chi_side[j].imag() << ',' << r1.smoothed_phi_side[j].real() << ','
        << r1.smoothed_phi_side[j].imag() << '\n';
  }
  ctx.write_csv("convolution_identity.csv", csv.str());
}

void crit_equivalence(Ctx& ctx) {
  const bool fast = ctx.opt.fast;
  const LightConeQuadrature q = packet_quad(fast);
  const TestFunction p1 = positive_packet(0, fast);
  const TestFunction p2 = positive_packet(1, fast);

  const std::vector<TestFunction> bank_a{p1, p2};
  const std::vector<TestFunction> bank_b{conjugate(p1), conjugate(p2)};
  const ModeBasis ba = build_mode_basis(bank_a, Sheet::Positive, q);
  const ModeBasis bb = build_mode_basis(bank_b, Sheet::Negative, q);
  const auto space = std::make_shared<FockSpace>(ba.modes(), bb.modes(), fast ? 10 : 14);
  ctx.info("fock dimension", double(space->dimension()));

  // real observables built from the positive-frequency bank members
  auto real_obs = [&](const TestFunction& p) {
    TestFunction g = real_part(p) * cplx{2.0, 0.0};  // p + p*
    const double n = pair(g, g, q).value.real();
    return g * cplx{1.0 / std::sqrt(n), 0.0};
  };
  const TestFunction g1 = real_obs(p1), g2 = real_obs(p2);
  const auto phi_1 = observable(phi_spec(g1), ba, bb, space);
  const auto phi_2 = observable(phi_spec(g2), ba, bb, space);
  const auto a_p2 = ladder_operator(ba, p2, LadderKind::Annihilate, SectorTag::A, space);

  // two preparation routes: adag vs adag + bdag
  const auto adag_1 = ladder_operator(ba, p1, LadderKind::Create, SectorTag::A, space);
  const auto bdag_1 = ladder_operator(bb, p1, LadderKind::Create, SectorTag::B, space);
  StateVector psi_a = vacuum_state(space);
  psi_a.coeffs = adag_1.mat * psi_a.coeffs;
  psi_a.coeffs /= psi_a.coeffs.norm();
  StateVector psi_ab = vacuum_state(space);
  psi_ab.coeffs = (adag_1.mat + bdag_1.mat) * psi_ab.coeffs;
  psi_ab.coeffs /= psi_ab.coeffs.norm();

  auto expectations = [&](const StateVector& psi) {
    const DensityOperator rho = DensityOperator::from_state(psi);
    std::vector<double> out;
    out.push_back(expectation(rho, phi_1).real());
    const cplx cross = expectation(rho, op_product(phi_1, phi_2));
    out.push_back(cross.real());
    out.push_back(cross.imag());
    out.push_back(expectation_of_square(rho, phi_1));
    CharacteristicQuery cq;
    cq.lambdas = {0.8};
    const CharFnResult cf = characteristic_function(rho, phi_1, cq);
    out.push_back(cf.values[0].real());
    out.push_back(cf.values[0].imag());
    const Eigen::VectorXcd probe = a_p2.mat * psi.coeffs;
    out.push_back(std::norm(probe(0)));  // vacuum transition probability
    return out;
  };

  const std::vector<double> ea = expectations(psi_a);
  const std::vector<double> eab = expectations(psi_ab);
  const char* labels[] = {"<phi_1>",        "Re<phi_1 phi_2>", "Im<phi_1 phi_2>",
                          "Var(phi_1)",     "Re Phi(0.8)",     "Im Phi(0.8)",
                          "|<0|a_2 psi>|^2"};
  double worst = 0.0;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    const double d = std::abs(ea[i] - eab[i]);
    worst = std::max(worst, d);
    ctx.check(std::string("route difference: ") + labels[i], d, 1e-8);
  }
  ctx.info("worst route difference", worst);
  ctx.info("b-route admixture norm", (bdag_1.mat * vacuum_state(space).coeffs).norm());
}

using CritFn = void (*)(Ctx&);

struct CritDef {
  int id;
  const char* tag;
  const char* title;
  CritFn fn;
};

const CritDef kCriteria[] = {
    {1, "eq1-positivity", "pairing positivity and Gram PSD on both sheets", crit_eq1_positivity},
    {2, "spacelike", "null-contraction transversality and spacelikeness", crit_spacelike},
    {3, "eq2-sheet", "negative pairing equals the conjugate route", crit_eq2_sheet},
    {4, "microcausality", "spacelike commutator plateau vs timelike reference",
     crit_microcausality},
    {5, "ccr", "ladder commutation relations on the safe subspace", crit_ccr},
    {6, "eq4", "chi commutators vanish for all pairs", crit_eq4},
    {7, "eq5", "xi interpolation law and compensated regime", crit_eq5},
    {8, "charfn", "vacuum characteristic function is the pinned Gaussian", crit_charfn},
    {9, "eq6-coth", "gibbs variance multiplier follows the coth law", crit_eq6_coth},
    {10, "jacobi", "jacobi identity across realized operator triples", crit_jacobi},
    {11, "sampler", "sampler fidelity and bit reproducibility", crit_sampler},
    {12, "convolution", "chi equals smoothed phi at the characteristic level",
     crit_convolution},
    {13, "equivalence", "a-route and (a+b)-route preparations agree", crit_equivalence},
};

}  // namespace

std::vector<std::string> acceptance_tags() {
  std::vector<std::string> tags;
  for (const auto& c : kCriteria) tags.push_back(c.tag);
  return tags;
}

std::vector<CriterionResult> run_acceptance(const VerificationOptions& opt) {
  std::vector<CriterionResult> results;
  for (const auto& def : kCriteria) {
    if (!opt.only.empty() && !opt.only.count(def.tag)) continue;
    CriterionResult r;
    r.id = def.id;
    r.tag = def.tag;
    r.title = def.title;
    const double t0 = now_ms();
    Ctx ctx{r, opt};
    try {
      def.fn(ctx);
    } catch (const std::exception& e) {
      r.pass = false;
      r.checks.push_back({std::string("exception: ") + e.what(), 1.0, 0.0, false});
    }
    r.ms = now_ms() - t0;
    results.push_back(std::move(r));
  }
  return results;
}

bool all_pass(const std::vector<CriterionResult>& results) {
  for (const auto& r : results)
    if (!r.pass) return false;
  return !results.empty();
}

std::string acceptance_summary(const std::vector<CriterionResult>& results) {
  std::ostringstream os;
  for (const auto& r : results) {
    os << (r.pass ? "PASS" : "FAIL") << "  " << r.id << '\t' << r.tag;
    for (std::size_t i = r.tag.size(); i < 16; ++i) os << ' ';
    os << r.title << "  (" << int(r.ms) << " ms)\n";
    if (!r.pass) {
      for (const auto& c : r.checks)
        if (!c.pass)
          os << "      failed: " << c.label << "  measured " << c.measured << " vs bound "
             << c.bound << '\n';
    }
  }
  return os.str();
}

std::string acceptance_report_json(const std::vector<CriterionResult>& results) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["generator"] = kRngVersion;
  j["conventions"] = {{"metric", kMetricSignature}, {"fourier", kFourierConvention}};
  j["pass"] = all_pass(results);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json rj;
    rj["id"] = r.id;
    rj["tag"] = r.tag;
    rj["title"] = r.title;
    rj["pass"] = r.pass;
    rj["ms"] = r.ms;  // timing: excluded from the determinism contract
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks)
      checks.push_back({{"label", c.label},
                        {"measured", c.measured},
                        {"bound", c.bound},
                        {"pass", c.pass}});
    rj["checks"] = checks;
    arr.push_back(rj);
  }
  j["criteria"] = arr;
  return j.dump(2);
}

}  // namespace lcf
