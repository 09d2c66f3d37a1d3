#include "lcf/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lcf/parallel.hpp"

namespace lcf {

namespace {

constexpr double kMeasure = 1.0 / (2.0 * 8.0 * M_PI * M_PI * M_PI);  // 1/(2 (2pi)^3)

/// One integrand request: sum of signed conjugated dots over cached v-fields,
///   K(k) = sum_t coeff_t * conj(v[a_t]) . eta . v[b_t].
struct Request {
  struct Term {
    int a, b;
    double coeff;
  };
  std::vector<Term> terms;
};

struct LevelValues {
  std::vector<cplx> values;
  std::vector<double> l1;  // integrand mass per request; the noise-floor scale
};

/// Evaluates all requests at one quadrature level. Per radial shell the
/// v-fields of every function are computed once and reused by all requests;
/// shell partials are reduced serially in shell order so results do not
/// depend on the worker count.
LevelValues evaluate_level(const std::vector<const TestFunction*>& fns,
                           const std::vector<Request>& requests, const LightConeQuadrature& q) {
  const RadialRule radial = radial_rule(q.radial_nodes, q.radial_cutoff);
  const SphereRule sphere = sphere_rule(q.theta_nodes, q.phi_nodes);
  const double sheet_sign = q.sheet == Sheet::Positive ? 1.0 : -1.0;
  const std::size_t nf = fns.size();
  const std::size_t nr = radial.omega.size();
  const std::size_t nreq = requests.size();

  std::vector<cplx> shell_partial(nr * nreq);
  std::vector<double> shell_l1(nr * nreq);
  std::mutex err_mutex;
  std::exception_ptr worker_error;

  parallel_for(nr, [&](std::size_t r) {
    try {
      const double omega = radial.omega[r];
      std::vector<CFourVector> v(nf);
      std::vector<cplx> acc(nreq, cplx{0.0, 0.0});
      std::vector<double> amag(nreq, 0.0);
      for (const auto& node : sphere.nodes) {
        const FourVector k{sheet_sign * omega, omega * node.nx, omega * node.ny,
                           omega * node.nz};
        for (std::size_t i = 0; i < nf; ++i)
          v[i] = contract_wave_bivector(k, fns[i]->fourier_interp(k));
        for (std::size_t t = 0; t < nreq; ++t) {
          cplx kval{0.0, 0.0};
          for (const auto& term : requests[t].terms)
            kval += term.coeff * conj_minkowski_dot(v[std::size_t(term.a)], v[std::size_t(term.b)]);
          acc[t] += node.weight * kval;
          amag[t] += node.weight * std::abs(kval);
        }
      }
      const double wr = radial.weight[r] * omega;  // omega factor of the reduced measure
      for (std::size_t t = 0; t < nreq; ++t) {
        shell_partial[r * nreq + t] = wr * acc[t];
        shell_l1[r * nreq + t] = wr * amag[t];
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mutex);
      if (!worker_error) worker_error = std::current_exception();
    }
  });
  if (worker_error) std::rethrow_exception(worker_error);

  LevelValues out;
  out.values.assign(nreq, cplx{0.0, 0.0});
  out.l1.assign(nreq, 0.0);
  for (std::size_t r = 0; r < nr; ++r)
    for (std::size_t t = 0; t < nreq; ++t) {
      out.values[t] += shell_partial[r * nreq + t];
      out.l1[t] += shell_l1[r * nreq + t];
    }
  return out;
}

void check_cutoff(const std::vector<const TestFunction*>& fns, const LightConeQuadrature& q) {
  double bw = 0.0;
  for (const auto* f : fns) bw = std::max(bw, f->shell_bandwidth());
  if (q.radial_cutoff < bw) {
    std::ostringstream msg;
    msg << "quadrature cutoff " << q.radial_cutoff << " below input bandwidth " << bw;
    throw CutoffError(msg.str());
  }
}

struct RefinedValues {
  std::vector<cplx> values;
  std::vector<double> errors;
  long nodes_used = 0;
};

/// Collective refinement: every request must settle below
/// tol * max(|value|, integrand L1 mass, anchor) between consecutive levels.
/// The L1 term is the quadrature's own noise floor: a value cancelling below
/// tol of the integrand mass is "zero to quadrature tolerance".
RefinedValues refine(const std::vector<const TestFunction*>& fns,
                     const std::vector<Request>& requests, const LightConeQuadrature& quad,
                     const std::vector<double>& anchors) {
  quad.validate();
  check_cutoff(fns, quad);
  LightConeQuadrature level = quad;
  LevelValues prev = evaluate_level(fns, requests, level);
  for (int round = 1; round <= quad.max_rounds; ++round) {
    level = level.refined();
    LevelValues next = evaluate_level(fns, requests, level);
    bool ok = true;
    std::vector<double> deltas(requests.size());
    for (std::size_t t = 0; t < requests.size(); ++t) {
      deltas[t] = std::abs(next.values[t] - prev.values[t]);
      const double scale = std::max({std::abs(next.values[t]), next.l1[t], anchors[t]});
      if (scale == 0.0) {
        if (deltas[t] != 0.0) ok = false;
      } else if (deltas[t] > quad.refinement_tolerance * scale) {
        ok = false;
      }
    }
    if (ok) {
      RefinedValues out;
      out.values = std::move(next.values);
      out.errors = std::move(deltas);
      out.nodes_used = long(level.radial_nodes) * long(level.theta_nodes) * long(level.phi_nodes);
      return out;
    }
    prev = std::move(next);
  }
  throw ConvergenceError("light-cone quadrature failed to settle within max_rounds");
}

PairingResult scaled_single(const RefinedValues& rv, double hbar) {
  PairingResult out;
  out.value = -hbar * kMeasure * rv.values[0];
  out.error_estimate = hbar * kMeasure * rv.errors[0];
  out.nodes_used = rv.nodes_used;
  return out;
}

}  // namespace

PairingResult pair(const TestFunction& g, const TestFunction& f, const LightConeQuadrature& quad,
                   const MetricConstants& metric, double absolute_anchor) {
  if (g.is_zero() || f.is_zero()) return PairingResult{cplx{0.0, 0.0}, 0.0, 0};
  const std::vector<const TestFunction*> fns{&g, &f};
  const std::vector<Request> reqs{Request{{{0, 1, 1.0}}}};
  const double anchor =
      absolute_anchor > 0.0 ? absolute_anchor / (metric.hbar * kMeasure) : 0.0;
  const RefinedValues rv = refine(fns, reqs, quad, {anchor});
  return scaled_single(rv, metric.hbar);
}

PairingResult pair_negative_via_conjugates(const TestFunction& g, const TestFunction& f,
                                           const LightConeQuadrature& quad,
                                           const MetricConstants& metric) {
  const TestFunction fc = conjugate(f);
  const TestFunction gc = conjugate(g);
  return pair(fc, gc, quad.with_sheet(Sheet::Positive), metric);
}

PairingResult commutator_functional(const TestFunction& f, const TestFunction& g,
                                    const LightConeQuadrature& quad,
                                    const MetricConstants& metric, double absolute_anchor) {
  if (g.is_zero() || f.is_zero()) return PairingResult{cplx{0.0, 0.0}, 0.0, 0};
  const TestFunction fc = conjugate(f);
  const TestFunction gc = conjugate(g);
  const std::vector<const TestFunction*> fns{&gc, &f, &fc, &g};
  // (g*,f) - (f*,g) as one difference integrand.
  const std::vector<Request> reqs{Request{{{0, 1, 1.0}, {2, 3, -1.0}}}};
  const double anchor =
      absolute_anchor > 0.0 ? absolute_anchor / (metric.hbar * kMeasure) : 0.0;
  const RefinedValues rv = refine(fns, reqs, quad.with_sheet(Sheet::Positive), {anchor});
  return scaled_single(rv, metric.hbar);
}

GramMatrix gram_matrix(const std::vector<TestFunction>& bank, Sheet sector,
                       const LightConeQuadrature& quad, const MetricConstants& metric,
                       std::vector<std::string> ids) {
  if (bank.empty()) throw ConfigError("gram_matrix: empty bank");
  const std::size_t n = bank.size();
  std::vector<const TestFunction*> fns(n);
  for (std::size_t i = 0; i < n; ++i) fns[i] = &bank[i];

  std::vector<Request> reqs;
  reqs.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      reqs.push_back(Request{{{int(i), int(j), 1.0}}});

  // First pass fixes the matrix scale; entries then settle against it so a
  // near-zero off-diagonal cannot stall the collective refinement.
  LightConeQuadrature q = quad.with_sheet(sector);
  q.validate();
  check_cutoff(fns, q);
  const LevelValues first = evaluate_level(fns, reqs, q);
  double gmax = 0.0;
  for (const auto& v : first.values) gmax = std::max(gmax, std::abs(v));
  const std::vector<double> anchors(reqs.size(), gmax);
  const RefinedValues rv = refine(fns, reqs, q, anchors);

  Eigen::MatrixXcd G(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      G(long(i), long(j)) = -metric.hbar * kMeasure * rv.values[i * n + j];

  const double scale = std::max(G.cwiseAbs().maxCoeff(), 1e-300);
  const double defect = (G - G.adjoint().eval()).cwiseAbs().maxCoeff() / scale;
  if (defect > 1e-8)
    throw NumericsError("gram matrix Hermiticity defect exceeds 1e-8 of the largest entry");

  GramMatrix out;
  out.entries = 0.5 * (G + G.adjoint().eval());
  out.sector = sector;
  out.hermiticity_defect = defect;
  if (ids.empty()) {
    ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = "f" + std::to_string(i);
  }
  out.bank = std::move(ids);
  return out;
}

std::string gram_to_csv(const GramMatrix& G) {
  std::ostringstream os;
  os.precision(17);
  const long n = G.entries.rows();
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) {
      if (j) os << ',';
      os << G.entries(i, j).real() << ',' << G.entries(i, j).imag();
    }
    os << '\n';
  }
  return os.str();
}

std::string gram_to_json_text(const GramMatrix& G) {
  nlohmann::json j;
  j["sector"] = G.sector == Sheet::Positive ? "positive" : "negative";
  j["bank"] = G.bank;
  j["hermiticity_defect"] = G.hermiticity_defect;
  nlohmann::json rows = nlohmann::json::array();
  for (long i = 0; i < G.entries.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (long jj = 0; jj < G.entries.cols(); ++jj)
      row.push_back({G.entries(i, jj).real(), G.entries(i, jj).imag()});
    rows.push_back(row);
  }
  j["entries"] = rows;
  return j.dump(2);
}

}  // namespace lcf
