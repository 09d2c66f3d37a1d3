#include "lcf/scenario.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lcf/fock.hpp"
#include "lcf/parallel.hpp"
#include "lcf/random_field.hpp"
#include "lcf/version.hpp"

namespace lcf {

using nlohmann::json;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(where, std::string("missing field '") + key + "'");
  return j.at(key);
}

double num(const json& j, const char* key, const std::string& where,
           std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(where, std::string("missing numeric field '") + key + "'");
  }
  if (!j.at(key).is_number()) fail(where + "." + key, "expected a number");
  return j.at(key).get<double>();
}

FourVector four(const json& j, const char* key, const std::string& where,
                bool required = true) {
  if (!j.contains(key)) {
    if (!required) return {};
    fail(where, std::string("missing 4-vector field '") + key + "'");
  }
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 4) fail(where + "." + key, "expected 4 numbers");
  return FourVector{a[0].get<double>(), a[1].get<double>(), a[2].get<double>(),
                    a[3].get<double>()};
}

cplx cnum(const json& a, const std::string& where) {
  if (!a.is_array() || a.size() != 2) fail(where, "expected [re, im]");
  return {a[0].get<double>(), a[1].get<double>()};
}

Bivector parse_polarization(const json& j, const std::string& where) {
  Bivector F;
  if (!j.contains("polarization")) {
    F.time_space[0] = 1.0;
    return F;
  }
  const json& p = j.at("polarization");
  auto triple = [&](const char* key, std::array<cplx, 3>& out) {
    if (!p.contains(key)) return;
    const json& a = p.at(key);
    if (!a.is_array() || a.size() != 3) fail(where + ".polarization." + key, "expected 3 pairs");
    for (int i = 0; i < 3; ++i)
      out[std::size_t(i)] = cnum(a[std::size_t(i)], where + ".polarization." + key);
  };
  triple("time_space", F.time_space);
  triple("space_space", F.space_space);
  return F;
}

TaskType parse_task_type(const std::string& s, const std::string& where) {
  if (s == "gram") return TaskType::Gram;
  if (s == "causality-scan") return TaskType::CausalityScan;
  if (s == "commutators") return TaskType::Commutators;
  if (s == "charfn") return TaskType::CharFn;
  if (s == "gibbs-sweep") return TaskType::GibbsSweep;
  if (s == "fluctuation-regimes") return TaskType::FluctuationRegimes;
  if (s == "sample") return TaskType::Sample;
  if (s == "convolution") return TaskType::Convolution;
  fail(where, "unknown task type '" + s + "'");
}

}  // namespace

const TestFunction& Scenario::member(const std::string& id) const {
  return bank[std::size_t(member_index(id))];
}

int Scenario::member_index(const std::string& id) const {
  for (std::size_t i = 0; i < bank_ids.size(); ++i)
    if (bank_ids[i] == id) return int(i);
  throw ConfigError("unknown bank member '" + id + "'");
}

Scenario parse_scenario_text(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario parse error: ") + e.what());
  }

  Scenario sc;
  if (int(num(doc, "schema", "scenario", 0.0)) != 1)
    fail("scenario.schema", "unsupported schema version (expected 1)");
  sc.name = doc.contains("name") ? doc.at("name").get<std::string>() : "unnamed";
  sc.metric.hbar = num(doc, "hbar", "scenario", 1.0);
  if (!(sc.metric.hbar > 0.0)) fail("scenario.hbar", "must be positive");
  sc.seed = std::uint64_t(num(doc, "seed", "scenario", 0.0));
  sc.output_dir = doc.contains("output_dir") ? doc.at("output_dir").get<std::string>() : "out";

  if (doc.contains("quadrature")) {
    const json& q = doc.at("quadrature");
    sc.quadrature.radial_nodes = int(num(q, "radial_nodes", "quadrature", 48));
    sc.quadrature.theta_nodes = int(num(q, "theta_nodes", "quadrature", 24));
    sc.quadrature.phi_nodes = int(num(q, "phi_nodes", "quadrature", 48));
    sc.quadrature.radial_cutoff = num(q, "radial_cutoff", "quadrature", 12.0);
    sc.quadrature.refinement_tolerance = num(q, "tolerance", "quadrature", 1e-8);
    sc.quadrature.max_rounds = int(num(q, "max_rounds", "quadrature", 6));
  }
  sc.quadrature.validate();

  if (doc.contains("fock")) {
    const json& f = doc.at("fock");
    sc.fock_cutoff = int(num(f, "cutoff", "fock", 12));
    sc.eigen_floor = num(f, "eigen_floor", "fock", 1e-10);
    if (sc.fock_cutoff < 2 || sc.fock_cutoff > 250) fail("fock.cutoff", "out of range [2,250]");
    if (!(sc.eigen_floor > 0.0 && sc.eigen_floor < 1.0)) fail("fock.eigen_floor", "out of (0,1)");
  }

  const json& bank = need(doc, "bank", "scenario");
  if (!bank.is_array()) fail("scenario.bank", "expected an array");
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const std::string where = "bank[" + std::to_string(i) + "]";
    const json& e = bank[i];
    const std::string id = need(e, "id", where).get<std::string>();
    for (const auto& prev : sc.bank_ids)
      if (prev == id) fail(where + ".id", "duplicate bank id '" + id + "'");
    const std::string type = need(e, "type", where).get<std::string>();
    const Bivector pol = parse_polarization(e, where);
    const FourVector center = four(e, "center", where, false);
    const FourVector carrier = four(e, "carrier", where, false);
    const cplx amp = e.contains("amplitude") ? cnum(e.at("amplitude"), where + ".amplitude")
                                             : cplx{1.0, 0.0};
    TestFunction f;
    if (type == "packet") {
      GaussianPacket p;
      p.polarization = pol;
      p.center = center;
      p.carrier = carrier;
      p.amplitude = amp;
      p.sigma = num(e, "sigma", where);
      p.tau = num(e, "tau", where);
      if (!(p.sigma > 0.0 && p.tau > 0.0)) fail(where, "sigma and tau must be positive");
      f = TestFunction(p);
    } else if (type == "bump") {
      const json& hw = need(e, "half_widths", where);
      if (!hw.is_array() || hw.size() != 4) fail(where + ".half_widths", "expected 4 numbers");
      std::array<double, 4> widths{hw[0].get<double>(), hw[1].get<double>(),
                                   hw[2].get<double>(), hw[3].get<double>()};
      f = TestFunction(BumpGrid(pol, center, widths, num(e, "sharpness", where, 2.0), carrier,
                                amp, int(num(e, "points_per_axis", where, 40)),
                                num(e, "nyquist_margin", where, 1.0),
                                num(e, "band_epsilon", where, 1e-4)));
    } else {
      fail(where + ".type", "expected 'packet' or 'bump'");
    }
    if (e.contains("real_part") && e.at("real_part").get<bool>()) f = real_part(f);
    if (e.contains("normalize") && e.at("normalize").get<bool>()) {
      if (sc.quadrature.radial_cutoff < f.shell_bandwidth())
        fail(where, "quadrature cutoff below this member's bandwidth");
      const double n = pair(f, f, sc.quadrature, sc.metric).value.real();
      if (!(n > 0.0)) fail(where, "cannot normalize a null function");
      f = f * cplx{1.0 / std::sqrt(n), 0.0};
    }
    sc.bank_ids.push_back(id);
    sc.bank.push_back(std::move(f));
  }

  if (doc.contains("tasks")) {
    const json& tasks = doc.at("tasks");
    if (!tasks.is_array()) fail("scenario.tasks", "expected an array");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const std::string where = "tasks[" + std::to_string(i) + "]";
      const json& t = tasks[i];
      TaskSpec spec;
      spec.type = parse_task_type(need(t, "type", where).get<std::string>(), where + ".type");
      spec.name = t.contains("name") ? t.at("name").get<std::string>()
                                     : need(t, "type", where).get<std::string>() + "-" +
                                           std::to_string(i);
      if (t.contains("members")) {
        for (const auto& m : t.at("members")) {
          const std::string id = m.get<std::string>();
          bool known = false;
          for (const auto& b : sc.bank_ids) known = known || b == id;
          if (!known) fail(where + ".members", "unknown bank member '" + id + "'");
          spec.members.push_back(id);
        }
      }
      if (t.contains("source")) spec.source = t.at("source").get<std::string>();
      if (t.contains("values")) {
        for (const auto& v : t.at("values")) spec.values.push_back(v.get<double>());
      }
      for (auto it = t.begin(); it != t.end(); ++it) {
        if (it.value().is_number()) spec.params[it.key()] = it.value().get<double>();
      }
      sc.tasks.push_back(std::move(spec));
    }
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

// ---------------------------------------------------------------------------
// Task execution

namespace {

struct TaskContext {
  const Scenario& sc;
  std::filesystem::path outdir;
  TaskReport& rep;

  void check(const std::string& label, double measured, double bound) {
    const bool ok = measured <= bound;
    rep.checks.push_back({label, measured, bound, ok});
    rep.pass = rep.pass && ok;
  }
  void check_flag(const std::string& label, bool ok) {
    rep.checks.push_back({label, ok ? 1.0 : 0.0, 1.0, ok});
    rep.pass = rep.pass && ok;
  }
  void write(const std::string& filename, const std::string& content) {
    std::ofstream out(outdir / filename);
    out << content;
    rep.outputs.push_back(filename);
  }
};

std::vector<TestFunction> resolve_members(const Scenario& sc, const TaskSpec& t,
                                          std::vector<std::string>* ids = nullptr) {
  std::vector<TestFunction> out;
  const auto& names = t.members.empty() ? sc.bank_ids : t.members;
  for (const auto& id : names) out.push_back(sc.member(id));
  if (ids) *ids = names;
  return out;
}

void run_gram(TaskContext& ctx, const TaskSpec& t) {
  std::vector<std::string> ids;
  const auto bank = resolve_members(ctx.sc, t, &ids);
  const Sheet sheet = t.source == "negative" ? Sheet::Negative : Sheet::Positive;
  const GramMatrix g = gram_matrix(bank, sheet, ctx.sc.quadrature, ctx.sc.metric, ids);
  ctx.check("hermiticity_defect", g.hermiticity_defect, 1e-8);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g.entries);
  const double lmax = std::max(es.eigenvalues().maxCoeff(), 1e-300);
  ctx.check("psd_negative_eigenvalue", std::max(0.0, -es.eigenvalues().minCoeff()),
            1e-10 * lmax);
  ctx.write(t.name + ".csv", gram_to_csv(g));
  ctx.write(t.name + ".json", gram_to_json_text(g));
}

void run_causality_scan(TaskContext& ctx, const TaskSpec& t) {
  if (t.members.size() != 2) throw ConfigError("causality-scan needs exactly two members");
  const TestFunction& f = ctx.sc.member(t.members[0]);
  const TestFunction g0 = ctx.sc.member(t.members[1]);
  const int axis = int(t.params.count("axis") ? t.params.at("axis") : 1.0);
  if (axis < 0 || axis > 3) throw ConfigError("causality-scan axis must be 0..3");
  std::vector<double> seps = t.values;
  if (seps.empty())
    for (int i = 0; i <= 12; ++i) seps.push_back(0.5 * double(i));

  const double scale = pair(f, f, ctx.sc.quadrature, ctx.sc.metric).value.real();

  auto offset = [&](double s) {
    FourVector d;
    if (axis == 0) d.t = s;
    else d.x[axis - 1] = s;
    return d;
  };

  std::ostringstream csv;
  csv.precision(12);
  csv << "separation,axis,classification,abs_commutator,re,im\n";
  std::map<double, double> measured;
  for (double s : seps) {
    const TestFunction g = translate(g0, offset(s));
    std::string cls = "unknown";
    if (f.support() && g.support())
      cls = causal_separation(*f.support(), *g.support()) == CausalClass::Spacelike
                ? "spacelike"
                : "non-spacelike";
    const PairingResult c = commutator_functional(f, g, ctx.sc.quadrature, ctx.sc.metric, scale);
    measured[s] = std::abs(c.value);
    csv << s << ',' << axis << ',' << cls << ',' << std::abs(c.value) << ','
        << c.value.real() << ',' << c.value.imag() << '\n';
  }
  ctx.write(t.name + ".csv", csv.str());

  if (t.params.count("assert_at") && t.params.count("timelike_reference")) {
    const double at = t.params.at("assert_at");
    const TestFunction gt = translate(g0, FourVector{t.params.at("timelike_reference"), 0, 0, 0});
    const PairingResult ct =
        commutator_functional(f, gt, ctx.sc.quadrature, ctx.sc.metric, scale);
    const double ratio = t.params.count("assert_ratio") ? t.params.at("assert_ratio") : 1e-6;
    const TestFunction gs = translate(g0, offset(at));
    const PairingResult cs =
        commutator_functional(f, gs, ctx.sc.quadrature, ctx.sc.metric, scale);
    ctx.check("spacelike_over_timelike", std::abs(cs.value),
              ratio * std::max(std::abs(ct.value), 1e-300));
  }
}

struct FockSetup {
  ModeBasis basis_a, basis_b;
  std::shared_ptr<const FockSpace> space;
};

FockSetup build_fock(const Scenario& sc, const std::vector<TestFunction>& bank, int cutoff) {
  FockSetup s{build_mode_basis(bank, Sheet::Positive, sc.quadrature, sc.metric, {},
                               sc.eigen_floor),
              build_mode_basis(bank, Sheet::Negative, sc.quadrature, sc.metric, {},
                               sc.eigen_floor),
              nullptr};
  s.space = std::make_shared<FockSpace>(s.basis_a.modes(), s.basis_b.modes(), cutoff);
  return s;
}

void run_commutators(TaskContext& ctx, const TaskSpec& t) {
  std::vector<std::string> ids;
  const auto bank = resolve_members(ctx.sc, t, &ids);
  if (bank.size() < 2) throw ConfigError("commutators task needs at least two members");
  const FockSetup s = build_fock(ctx.sc, bank, ctx.sc.fock_cutoff);

  std::ostringstream csv;
  csv.precision(12);
  csv << "f,g,ccr_residual,ccr_scale,chi_comm_norm,chi_scale\n";
  for (std::size_t i = 0; i < bank.size(); ++i) {
    for (std::size_t j = i + 1; j < bank.size(); ++j) {
      const auto a_i =
          ladder_operator_bank(s.basis_a, int(i), LadderKind::Annihilate, SectorTag::A, s.space);
      const auto adag_j =
          ladder_operator_bank(s.basis_a, int(j), LadderKind::Create, SectorTag::A, s.space);
      const OperatorMatrix ccr = commutator(a_i, adag_j);
      const cplx gji = s.basis_a.gram().entries(long(j), long(i));
      const OperatorMatrix resid = op_sub(ccr, op_scale(op_identity(s.space), gji));
      const double rnorm = restricted_frobenius(resid, ccr.safe_level());
      const double rscale =
          std::abs(gji) * std::sqrt(double(s.space->prefix_dimension(ccr.safe_level())));
      ctx.check("ccr[" + ids[i] + "," + ids[j] + "]", rnorm, 1e-8 * std::max(rscale, 1e-300));

      const auto chi_i =
          observable_from_bank(ObservableKind::Chi, 1, 1, int(i), s.basis_a, s.basis_b, s.space);
      const auto chi_j =
          observable_from_bank(ObservableKind::Chi, 1, 1, int(j), s.basis_a, s.basis_b, s.space);
      const OperatorMatrix cc = commutator(chi_i, chi_j);
      const int lvl = cc.safe_level();
      const double cscale =
          restricted_frobenius(chi_i, lvl) * restricted_frobenius(chi_j, lvl);
      const double cnorm = restricted_frobenius(cc, lvl);
      ctx.check("chi_comm[" + ids[i] + "," + ids[j] + "]", cnorm, 1e-10 * cscale);
      csv << ids[i] << ',' << ids[j] << ',' << rnorm << ',' << rscale << ',' << cnorm << ','
          << cscale << '\n';
    }
  }
  ctx.write(t.name + ".csv", csv.str());
}

void run_charfn(TaskContext& ctx, const TaskSpec& t) {
  if (t.members.empty()) throw ConfigError("charfn task needs an observable member");
  const double alpha = t.params.count("alpha") ? t.params.at("alpha") : 1.0;
  const double beta = t.params.count("beta") ? t.params.at("beta") : 0.0;
  const int n_l = int(t.params.count("lambda_points") ? t.params.at("lambda_points") : 13.0);
  const double lmax = t.params.count("lambda_max") ? t.params.at("lambda_max") : 3.0;
  const int cutoff = int(t.params.count("cutoff") ? t.params.at("cutoff") : 40.0);

  std::vector<TestFunction> bank{ctx.sc.member(t.members[0])};
  const bool one_quantum = t.members.size() > 1;
  if (one_quantum) bank.push_back(ctx.sc.member(t.members[1]));
  // observable member first; optional state member second
  const FockSetup s = build_fock(ctx.sc, bank, cutoff);

  const auto obs = observable_from_bank(beta == 0.0 ? ObservableKind::Phi : ObservableKind::Xi,
                                        alpha, beta, 0, s.basis_a, s.basis_b, s.space);
  DensityOperator state =
      one_quantum ? projector_density(s.basis_a, bank[1], s.space)
                  : DensityOperator::from_state(vacuum_state(s.space));

  CharacteristicQuery q;
  for (int j = 0; j < n_l; ++j) q.lambdas.push_back(lmax * double(j) / double(n_l - 1));
  const double gff = s.basis_a.gram().entries(0, 0).real();
  const double gffm = s.basis_b.gram().entries(0, 0).real();
  if (!one_quantum) q.analytic_variance = alpha * alpha * gff + beta * beta * gffm;
  const CharFnResult r = characteristic_function(state, obs, q);

  std::ostringstream csv;
  csv.precision(12);
  csv << "lambda,re,im,analytic\n";
  for (std::size_t j = 0; j < q.lambdas.size(); ++j) {
    const double ana = q.analytic_variance >= 0.0
                           ? std::exp(-0.5 * q.lambdas[j] * q.lambdas[j] * q.analytic_variance)
                           : std::nan("");
    csv << q.lambdas[j] << ',' << r.values[j].real() << ',' << r.values[j].imag() << ',' << ana
        << '\n';
  }
  ctx.write(t.name + ".csv", csv.str());
  if (!one_quantum) {
    const double tol = t.params.count("tol") ? t.params.at("tol") : 1e-6;
    ctx.check("max_numeric_vs_gaussian", r.max_cross_difference, tol);
    ctx.check_flag("no_truncation_warning", !r.truncation_warning);
  }
}

void run_gibbs_sweep(TaskContext& ctx, const TaskSpec& t) {
  if (t.members.empty()) throw ConfigError("gibbs-sweep needs an observable member");
  const double alpha =
      t.params.count("alpha") ? t.params.at("alpha") : 1.0 / std::sqrt(2.0);
  const double beta = t.params.count("beta") ? t.params.at("beta") : 1.0 / std::sqrt(2.0);
  std::vector<double> grid = t.values;
  if (grid.empty()) grid = {0.5, 1.0, 2.0};
  const double fit_tol = t.params.count("fit_tol") ? t.params.at("fit_tol") : 1e-3;

  std::vector<TestFunction> bank{ctx.sc.member(t.members[0])};

  std::ostringstream csv;
  csv.precision(12);
  csv << "mu,nu,fitted_multiplier,expected_multiplier,tail_bound\n";
  std::map<std::pair<double, double>, double> fitted;
  for (double mu : grid) {
    for (double nu : grid) {
      const GibbsSpec spec{mu, nu};
      const int cutoff = gibbs_cutoff_for(spec, 2);
      const FockSetup s = build_fock(ctx.sc, bank, cutoff);
      const auto xi =
          observable_from_bank(ObservableKind::Xi, alpha, beta, 0, s.basis_a, s.basis_b, s.space);
      const GibbsResult gr = gibbs_weight(spec, s.space);
      CharacteristicQuery q;
      for (int j = 0; j < 13; ++j) q.lambdas.push_back(1.2 * double(j) / 12.0);
      const CharFnResult r = characteristic_function(gr.rho, xi, q);
      // weighted least squares of -2 ln Phi against lambda^2 (f,f)
      const double gsum = alpha * alpha * s.basis_a.gram().entries(0, 0).real() +
                          beta * beta * s.basis_b.gram().entries(0, 0).real();
      double sxy = 0.0, sxx = 0.0;
      for (std::size_t j = 1; j < q.lambdas.size(); ++j) {
        const double x = q.lambdas[j] * q.lambdas[j];
        const double y = -2.0 * std::log(std::abs(r.values[j]));
        sxy += x * y;
        sxx += x * x;
      }
      const double mult = (sxy / sxx) / std::max(gsum, 1e-300) *
                          (alpha * alpha + beta * beta);
      const double expected =
          (alpha * alpha / std::tanh(mu) + beta * beta / std::tanh(nu)) /
          (alpha * alpha + beta * beta) * (alpha * alpha + beta * beta);
      fitted[{mu, nu}] = mult;
      csv << mu << ',' << nu << ',' << mult << ',' << expected << ',' << gr.tail_bound_rel
          << '\n';
      ctx.check("coth_law[mu=" + std::to_string(mu) + ",nu=" + std::to_string(nu) + "]",
                std::abs(mult - expected), fit_tol);
    }
  }
  // monotone decrease in mu for each nu
  for (double nu : grid) {
    bool mono = true;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
      mono = mono && fitted[{grid[i], nu}] > fitted[{grid[i + 1], nu}];
    ctx.check_flag("monotone_in_mu[nu=" + std::to_string(nu) + "]", mono);
  }
  ctx.write(t.name + ".csv", csv.str());
}

void run_fluctuation_regimes(TaskContext& ctx, const TaskSpec& t) {
  if (t.members.size() != 2) throw ConfigError("fluctuation-regimes needs two members");
  std::vector<double> grid = t.values;
  if (grid.empty()) grid = {0.0, 0.5, 1.0, std::sqrt(2.0)};
  const auto bank = resolve_members(ctx.sc, t);
  const FockSetup s = build_fock(ctx.sc, bank, ctx.sc.fock_cutoff);
  const auto phi_f =
      observable_from_bank(ObservableKind::Phi, 1, 0, 0, s.basis_a, s.basis_b, s.space);
  const auto phi_g =
      observable_from_bank(ObservableKind::Phi, 1, 0, 1, s.basis_a, s.basis_b, s.space);
  const OperatorMatrix pp = commutator(phi_f, phi_g);
  const DensityOperator vac = DensityOperator::from_state(vacuum_state(s.space));
  const double gff = s.basis_a.gram().entries(0, 0).real();
  const double gffm = s.basis_b.gram().entries(0, 0).real();

  std::ostringstream csv;
  csv.precision(12);
  csv << "alpha,beta,comm_norm,comm_residual,variance,variance_expected\n";
  for (double al : grid) {
    for (double be : grid) {
      const auto xf =
          observable_from_bank(ObservableKind::Xi, al, be, 0, s.basis_a, s.basis_b, s.space);
      const auto xg =
          observable_from_bank(ObservableKind::Xi, al, be, 1, s.basis_a, s.basis_b, s.space);
      const OperatorMatrix cc = commutator(xf, xg);
      const OperatorMatrix resid = op_sub(cc, op_scale(pp, al * al - be * be));
      const int lvl = cc.safe_level();
      const double sc_norm = restricted_frobenius(xf, lvl) * restricted_frobenius(xg, lvl) +
                             std::abs(al * al - be * be) * restricted_frobenius(pp, lvl);
      const double rnorm = restricted_frobenius(resid, lvl);
      const double var = expectation_of_square(vac, xf);
      const double var_want = al * al * gff + be * be * gffm;
      csv << al << ',' << be << ',' << restricted_frobenius(cc, lvl) << ',' << rnorm << ','
          << var << ',' << var_want << '\n';
      ctx.check("xi_law[a=" + std::to_string(al) + ",b=" + std::to_string(be) + "]", rnorm,
                1e-8 * std::max(sc_norm, 1e-300));
      if (al == be) {
        ctx.check("compensated_comm[a=b=" + std::to_string(al) + "]",
                  restricted_frobenius(cc, lvl),
                  1e-10 * std::max(restricted_frobenius(xf, lvl) *
                                       restricted_frobenius(xg, lvl),
                                   1e-300));
        ctx.check("compensated_variance[a=b=" + std::to_string(al) + "]",
                  std::abs(var - var_want), 1e-6 * std::max(var_want, 1e-12));
      }
    }
  }
  ctx.write(t.name + ".csv", csv.str());
}

void run_sample(TaskContext& ctx, const TaskSpec& t) {
  std::vector<std::string> ids;
  const auto bank = resolve_members(ctx.sc, t, &ids);
  const long count = long(t.params.count("count") ? t.params.at("count") : 10000.0);
  const CovarianceSource source =
      t.source == "gibbs" ? CovarianceSource::Gibbs : CovarianceSource::Vacuum;
  const GibbsSpec gibbs{t.params.count("mu") ? t.params.at("mu") : 1.0,
                        t.params.count("nu") ? t.params.at("nu") : 1.0};
  const CovarianceModel model =
      covariance(bank, source, ctx.sc.quadrature, ctx.sc.metric, gibbs, ids);
  const SampleBatch batch = sample_batch(model, count, ctx.sc.seed);

  for (long i = 0; i < model.matrix.rows(); ++i)
    for (long j = i; j < model.matrix.cols(); ++j)
      ctx.check("covariance[" + ids[std::size_t(i)] + "," + ids[std::size_t(j)] + "]",
                std::abs(batch.empirical_covariance(i, j) - model.matrix(i, j)),
                4.0 * batch.standard_errors(i, j));

  ctx.write(t.name + "_draws.csv", batch_to_csv(batch));
  ctx.write(t.name + "_model.json", covariance_to_json_text(model));
  std::ostringstream stats;
  stats.precision(12);
  stats << "i,j,model,empirical,standard_error\n";
  for (long i = 0; i < model.matrix.rows(); ++i)
    for (long j = 0; j < model.matrix.cols(); ++j)
      stats << i << ',' << j << ',' << model.matrix(i, j) << ','
            << batch.empirical_covariance(i, j) << ',' << batch.standard_errors(i, j) << '\n';
  ctx.write(t.name + "_stats.csv", stats.str());
}

void run_convolution(TaskContext& ctx, const TaskSpec& t) {
  if (t.members.size() != 2)
    throw ConfigError("convolution needs [observable, state] members");
  const TestFunction& f = ctx.sc.member(t.members[0]);
  const TestFunction& h = ctx.sc.member(t.members[1]);
  const int cutoff = int(t.params.count("cutoff") ? t.params.at("cutoff") : 30.0);
  const double lmax = t.params.count("lambda_max") ? t.params.at("lambda_max") : 3.0;
  const int n_l = int(t.params.count("lambda_points") ? t.params.at("lambda_points") : 13.0);
  const double tol = t.params.count("tol") ? t.params.at("tol") : 1e-8;

  const std::vector<TestFunction> bank_a{h, f};
  const std::vector<TestFunction> bank_b{f};
  const ModeBasis ba = build_mode_basis(bank_a, Sheet::Positive, ctx.sc.quadrature,
                                        ctx.sc.metric, {}, ctx.sc.eigen_floor);
  const ModeBasis bb = build_mode_basis(bank_b, Sheet::Negative, ctx.sc.quadrature,
                                        ctx.sc.metric, {}, ctx.sc.eigen_floor);
  const auto space = std::make_shared<FockSpace>(ba.modes(), bb.modes(), cutoff);

  std::vector<double> grid;
  for (int j = 0; j < n_l; ++j) grid.push_back(lmax * double(j) / double(n_l - 1));

  const DensityOperator vac = DensityOperator::from_state(vacuum_state(space));
  const ConvolutionReport rv = convolution_check(vac, f, grid, ba, bb, space);
  ctx.check("vacuum_max_difference", rv.max_difference, 1e-10);

  const DensityOperator one = projector_density(ba, h, space);
  const ConvolutionReport r1 = convolution_check(one, f, grid, ba, bb, space);
  ctx.check("one_quantum_max_difference", r1.max_difference, tol);
  ctx.check_flag("smoothing_variance_nonnegative", r1.smoothing_variance >= 0.0);

  std::ostringstream csv;
  csv.precision(12);
  csv << "lambda,state,chi_re,chi_im,smoothed_phi_re,smoothed_phi_im\n";
  for (std::size_t j = 0; j < grid.size(); ++j) {
    csv << grid[j] << ",vacuum," << rv.chi_side[j].real() << ',' << rv.chi_side[j].imag()
        << ',' << rv.smoothed_phi_side[j].real() << ',' << rv.smoothed_phi_side[j].imag()
        << '\n';
    csv << grid[j] << ",one_quantum," << r1.chi_side[j].real() << ',' << r1.chi_side[j].imag()
        << ',' << r1.smoothed_phi_side[j].real() << ',' << r1.smoothed_phi_side[j].imag()
        << '\n';
  }
  ctx.write(t.name + ".csv", csv.str());
}

}  // namespace

std::string Report::to_json_text() const {
  json j;
  j["scenario"] = scenario;
  j["pass"] = pass;
  j["version"] = kVersion;
  j["generator"] = kRngVersion;
  j["conventions"] = {{"metric", kMetricSignature},
                      {"fourier", kFourierConvention},
                      {"threads_contract", "results independent of worker count"}};
  json tl = json::array();
  for (const auto& t : tasks) {
    json tj;
    tj["name"] = t.name;
    tj["type"] = t.type;
    tj["pass"] = t.pass;
    tj["ms"] = t.ms;  // timing: excluded from the determinism contract
    json checks = json::array();
    for (const auto& c : t.checks)
      checks.push_back({{"label", c.label},
                        {"measured", c.measured},
                        {"bound", c.bound},
                        {"pass", c.pass}});
    tj["checks"] = checks;
    tj["outputs"] = t.outputs;
    tl.push_back(tj);
  }
  j["tasks"] = tl;
  return j.dump(2);
}

Report run_scenario(const Scenario& sc, const std::string& out_override) {
  const std::filesystem::path outdir = out_override.empty() ? sc.output_dir : out_override;
  std::filesystem::create_directories(outdir);

  Report report;
  report.scenario = sc.name;
  static const char* type_names[] = {"gram",        "causality-scan", "commutators",
                                     "charfn",      "gibbs-sweep",    "fluctuation-regimes",
                                     "sample",      "convolution"};
  for (const auto& t : sc.tasks) {
    TaskReport tr;
    tr.name = t.name;
    tr.type = type_names[int(t.type)];
    const double t0 = now_ms();
    TaskContext ctx{sc, outdir, tr};
    try {
      switch (t.type) {
        case TaskType::Gram: run_gram(ctx, t); break;
        case TaskType::CausalityScan: run_causality_scan(ctx, t); break;
        case TaskType::Commutators: run_commutators(ctx, t); break;
        case TaskType::CharFn: run_charfn(ctx, t); break;
        case TaskType::GibbsSweep: run_gibbs_sweep(ctx, t); break;
        case TaskType::FluctuationRegimes: run_fluctuation_regimes(ctx, t); break;
        case TaskType::Sample: run_sample(ctx, t); break;
        case TaskType::Convolution: run_convolution(ctx, t); break;
      }
    } catch (const NumericsError& e) {
      tr.pass = false;
      tr.checks.push_back({std::string("numerics error: ") + e.what(), 1.0, 0.0, false});
    }
    tr.ms = now_ms() - t0;
    report.pass = report.pass && tr.pass;
    report.tasks.push_back(std::move(tr));
  }

  std::ofstream out(outdir / "report.json");
  out << report.to_json_text() << '\n';
  return report;
}

int exit_code_for(const Report& report) { return report.pass ? 0 : 1; }

int exit_code_for_exception(const std::exception& e) {
  if (dynamic_cast<const ConvergenceError*>(&e)) return 3;
  if (dynamic_cast<const NumericsError*>(&e)) return 1;
  return 2;  // config-level problems: parse errors, bad members, bandwidths...
}

}  // namespace lcf
