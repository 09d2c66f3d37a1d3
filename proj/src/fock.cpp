#include "lcf/fock.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <unordered_map>

namespace lcf {

namespace {

double binomial(int n, int k) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

std::uint64_t pack_key(const std::array<std::uint8_t, 8>& occ) {
  std::uint64_t key = 0;
  for (int i = 0; i < 8; ++i) key |= std::uint64_t(occ[std::size_t(i)]) << (8 * i);
  return key;
}

Footprint merge(Footprint a, Footprint b) { return a == b ? a : Footprint::Mixed; }

void require_same_space(const OperatorMatrix& A, const OperatorMatrix& B) {
  if (A.space.get() != B.space.get() || A.mat.rows() != B.mat.rows())
    throw DimensionError("operators live on different Fock spaces");
}

}  // namespace

// ---------------------------------------------------------------------------
// ModeBasis

ModeBasis build_mode_basis(const std::vector<TestFunction>& bank, Sheet sector,
                           const LightConeQuadrature& quad, const MetricConstants& metric,
                           std::vector<std::string> ids, double eigen_floor) {
  ModeBasis basis;
  basis.gram_ = gram_matrix(bank, sector, quad.with_sheet(sector), metric, std::move(ids));
  const long n = basis.gram_.entries.rows();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(basis.gram_.entries);
  if (es.info() != Eigen::Success) throw NumericsError("gram eigendecomposition failed");
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmax > 0.0)) throw NumericsError("degenerate bank: no positive Gram eigenvalue");
  if (es.eigenvalues().minCoeff() < -1e-10 * lmax)
    throw NumericsError("gram matrix violates positive semidefiniteness beyond slack");

  std::vector<long> kept;
  for (long i = n - 1; i >= 0; --i)  // descending eigenvalue order
    if (es.eigenvalues()(i) >= eigen_floor * lmax) kept.push_back(i);
  if (kept.empty()) throw NumericsError("degenerate bank: all eigenvalues below floor");

  const long m = long(kept.size());
  basis.coefficients_.resize(m, n);
  basis.inv_sqrt_map_.resize(m, n);
  basis.eigenvalues_.resize(m);
  for (long a = 0; a < m; ++a) {
    const long src = kept[std::size_t(a)];
    const double lam = es.eigenvalues()(src);
    basis.eigenvalues_(a) = lam;
    basis.coefficients_.row(a) = std::sqrt(lam) * es.eigenvectors().col(src).adjoint();
    basis.inv_sqrt_map_.row(a) = (1.0 / std::sqrt(lam)) * es.eigenvectors().col(src).adjoint();
  }
  basis.eigen_floor_ = eigen_floor;
  basis.bank_ = std::make_shared<const std::vector<TestFunction>>(bank);
  basis.quad_ = quad.with_sheet(sector);
  basis.metric_ = metric;
  return basis;
}

Eigen::VectorXcd ModeBasis::expand(const TestFunction& f, double* residual_rel) const {
  const long n = long(bank_->size());
  if (f.is_zero()) {
    if (residual_rel) *residual_rel = 0.0;
    return Eigen::VectorXcd::Zero(modes());
  }
  Eigen::VectorXcd y(n);
  for (long i = 0; i < n; ++i)
    y(i) = pair((*bank_)[std::size_t(i)], f, quad_, metric_).value;
  const Eigen::VectorXcd c = inv_sqrt_map_ * y;
  if (residual_rel) {
    const double norm_here = pair(f, f, quad_, metric_).value.real();
    const Sheet other = quad_.sheet == Sheet::Positive ? Sheet::Negative : Sheet::Positive;
    const double norm_other =
        pair(f, f, quad_.with_sheet(other), metric_, std::max(norm_here, 1e-300)).value.real();
    const double scale = std::max({norm_here, norm_other, 1e-300});
    *residual_rel = std::max(0.0, norm_here - c.squaredNorm()) / scale;
  }
  return c;
}

// ---------------------------------------------------------------------------
// FockSpace

FockSpace::FockSpace(int a_modes, int b_modes, int total_cutoff)
    : a_modes_(a_modes), b_modes_(b_modes), cutoff_(total_cutoff) {
  const int M = a_modes_ + b_modes_;
  if (a_modes_ < 0 || b_modes_ < 0 || M < 1 || M > 8)
    throw ConfigError("FockSpace supports 1..8 modes in total");
  if (cutoff_ < 0 || cutoff_ > 250) throw ConfigError("FockSpace cutoff out of range");

  std::array<std::uint8_t, 8> occ{};
  std::vector<int> tuple(std::size_t(M), 0);
  prefix_.assign(std::size_t(cutoff_) + 1, 0);
  // Graded lexicographic: levels ascending, first mode most significant.
  for (int lvl = 0; lvl <= cutoff_; ++lvl) {
    // enumerate compositions of lvl over M modes, descending lex
    std::function<void(int, int)> rec = [&](int mode, int remaining) {
      if (mode == M - 1) {
        tuple[std::size_t(mode)] = remaining;
        occ.fill(0);
        int la = 0;
        for (int i = 0; i < M; ++i) {
          occ[std::size_t(i)] = std::uint8_t(tuple[std::size_t(i)]);
          if (i < a_modes_) la += tuple[std::size_t(i)];
        }
        states_.push_back(occ);
        level_.push_back(lvl);
        level_a_.push_back(la);
        return;
      }
      for (int n = remaining; n >= 0; --n) {
        tuple[std::size_t(mode)] = n;
        rec(mode + 1, remaining - n);
      }
    };
    rec(0, lvl);
    prefix_[std::size_t(lvl)] = long(states_.size());
  }

  const double want = binomial(cutoff_ + M, M);
  if (std::llround(want) != long(states_.size()))
    throw NumericsError("Fock enumeration dimension mismatch");

  std::unordered_map<std::uint64_t, long> index;
  index.reserve(states_.size() * 2);
  for (long i = 0; i < long(states_.size()); ++i) index[pack_key(states_[std::size_t(i)])] = i;

  lower_.assign(states_.size() * std::size_t(M), -1);
  raise_.assign(states_.size() * std::size_t(M), -1);
  for (long i = 0; i < long(states_.size()); ++i) {
    for (int m = 0; m < M; ++m) {
      auto s = states_[std::size_t(i)];
      if (s[std::size_t(m)] > 0) {
        --s[std::size_t(m)];
        lower_[std::size_t(i) * std::size_t(M) + std::size_t(m)] = index.at(pack_key(s));
        ++s[std::size_t(m)];
      }
      if (level_[std::size_t(i)] < cutoff_) {
        ++s[std::size_t(m)];
        raise_[std::size_t(i) * std::size_t(M) + std::size_t(m)] = index.at(pack_key(s));
      }
    }
  }
}

long FockSpace::prefix_dimension(int lvl) const {
  if (lvl < 0) return 0;
  if (lvl >= cutoff_) return dimension();
  return prefix_[std::size_t(lvl)];
}

// ---------------------------------------------------------------------------
// Operator combinators

OperatorMatrix op_identity(std::shared_ptr<const FockSpace> space) {
  OperatorMatrix out;
  const long d = space->dimension();
  out.mat = SparseC(d, d);
  out.mat.setIdentity();
  out.space = std::move(space);
  out.footprint = Footprint::Mixed;
  out.degree = 0;
  out.raise = 0;
  out.exact_level = out.space->cutoff();
  return out;
}

OperatorMatrix op_scale(const OperatorMatrix& A, cplx s) {
  OperatorMatrix out = A;
  out.mat = (A.mat * s).eval();
  return out;
}

OperatorMatrix op_add(const OperatorMatrix& A, const OperatorMatrix& B) {
  require_same_space(A, B);
  OperatorMatrix out;
  out.mat = A.mat + B.mat;
  out.space = A.space;
  out.footprint = merge(A.footprint, B.footprint);
  out.degree = std::max(A.degree, B.degree);
  out.raise = std::max(A.raise, B.raise);
  out.exact_level = std::min(A.exact_level, B.exact_level);
  return out;
}

OperatorMatrix op_sub(const OperatorMatrix& A, const OperatorMatrix& B) {
  return op_add(A, op_scale(B, cplx{-1.0, 0.0}));
}

OperatorMatrix op_product(const OperatorMatrix& A, const OperatorMatrix& B) {
  require_same_space(A, B);
  OperatorMatrix out;
  out.mat = (A.mat * B.mat).pruned(1e-300);
  out.space = A.space;
  out.footprint = merge(A.footprint, B.footprint);
  out.degree = A.degree + B.degree;
  out.raise = A.raise + B.raise;
  // B acts first; A must stay exact on what B can raise into.
  out.exact_level = std::min(B.exact_level, A.exact_level - B.raise);
  return out;
}

OperatorMatrix commutator(const OperatorMatrix& A, const OperatorMatrix& B) {
  return op_sub(op_product(A, B), op_product(B, A));
}

double restricted_frobenius(const OperatorMatrix& A, int lvl) {
  if (lvl < 0) throw ConfigError("restricted norm requested on an empty safe subspace");
  const long p = A.space->prefix_dimension(lvl);
  double acc = 0.0;
  for (int k = 0; k < A.mat.outerSize(); ++k)
    for (SparseC::InnerIterator it(A.mat, k); it; ++it)
      if (it.row() < p && it.col() < p) acc += std::norm(it.value());
  return std::sqrt(acc);
}

double max_abs_entry(const OperatorMatrix& A) {
  double m = 0.0;
  for (int k = 0; k < A.mat.outerSize(); ++k)
    for (SparseC::InnerIterator it(A.mat, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

// ---------------------------------------------------------------------------
// Ladder operators

namespace {

OperatorMatrix ladder_from_coeffs(const Eigen::VectorXcd& c, LadderKind kind, SectorTag sector,
                                  std::shared_ptr<const FockSpace> space) {
  const int offset = sector == SectorTag::A ? 0 : space->a_modes();
  const int nm = sector == SectorTag::A ? space->a_modes() : space->b_modes();
  if (c.size() != nm) throw DimensionError("mode coefficient count does not match the space");

  const long dim = space->dimension();
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(std::size_t(dim) * std::size_t(nm) / 2 + 8);
  for (long s = 0; s < dim; ++s) {
    for (int alpha = 0; alpha < nm; ++alpha) {
      if (c(alpha) == cplx{0.0, 0.0}) continue;
      const int mode = offset + alpha;
      const int n = space->occupation(s, mode);
      if (n == 0) continue;
      const long t = space->lowered_index(s, mode);
      trips.emplace_back(t, s, c(alpha) * std::sqrt(double(n)));
    }
  }
  SparseC annihilate(dim, dim);
  annihilate.setFromTriplets(trips.begin(), trips.end());

  OperatorMatrix out;
  out.space = std::move(space);
  out.footprint = sector == SectorTag::A ? Footprint::AOnly : Footprint::BOnly;
  out.degree = 1;
  if (kind == LadderKind::Annihilate) {
    out.mat = annihilate;
    out.raise = 0;
    out.exact_level = out.space->cutoff();
  } else {
    out.mat = SparseC(annihilate.adjoint());
    out.raise = 1;
    out.exact_level = out.space->cutoff() - 1;
  }
  return out;
}

}  // namespace

OperatorMatrix ladder_operator(const ModeBasis& basis, const TestFunction& f, LadderKind kind,
                               SectorTag sector, std::shared_ptr<const FockSpace> space) {
  const int nm = sector == SectorTag::A ? space->a_modes() : space->b_modes();
  if (nm != basis.modes()) throw DimensionError("mode basis does not match the Fock space sector");
  double residual = 0.0;
  const Eigen::VectorXcd c = basis.expand(f, &residual);
  if (residual > 1e-8)
    throw SpanError("bank does not span the requested test function (residual " +
                    std::to_string(residual) + ")");
  return ladder_from_coeffs(c, kind, sector, std::move(space));
}

OperatorMatrix ladder_operator_bank(const ModeBasis& basis, int bank_index, LadderKind kind,
                                    SectorTag sector, std::shared_ptr<const FockSpace> space) {
  if (bank_index < 0 || bank_index >= basis.bank_size())
    throw DimensionError("bank index out of range");
  return ladder_from_coeffs(basis.expand_bank_member(bank_index), kind, sector,
                            std::move(space));
}

// ---------------------------------------------------------------------------
// Observables

ObservableSpec phi_spec(TestFunction f) { return {ObservableKind::Phi, std::move(f), 1.0, 0.0}; }
ObservableSpec chi_spec(TestFunction f) { return {ObservableKind::Chi, std::move(f), 1.0, 1.0}; }
ObservableSpec xi_spec(TestFunction f, double alpha, double beta) {
  return {ObservableKind::Xi, std::move(f), alpha, beta};
}

namespace {

OperatorMatrix observable_from_parts(double alpha, double beta, const Eigen::VectorXcd& ca,
                                     const Eigen::VectorXcd& ca_star,
                                     const Eigen::VectorXcd& cb, const Eigen::VectorXcd& cb_star,
                                     std::shared_ptr<const FockSpace> space) {
  OperatorMatrix out;
  bool first = true;
  auto accumulate = [&](const OperatorMatrix& part) {
    out = first ? part : op_add(out, part);
    first = false;
  };
  if (alpha != 0.0) {
    accumulate(op_scale(ladder_from_coeffs(ca, LadderKind::Annihilate, SectorTag::A, space),
                        alpha));
    accumulate(
        op_scale(ladder_from_coeffs(ca_star, LadderKind::Create, SectorTag::A, space), alpha));
  }
  if (beta != 0.0) {
    accumulate(op_scale(ladder_from_coeffs(cb, LadderKind::Annihilate, SectorTag::B, space),
                        beta));
    accumulate(
        op_scale(ladder_from_coeffs(cb_star, LadderKind::Create, SectorTag::B, space), beta));
  }
  if (first) {
    out = op_scale(op_identity(space), cplx{0.0, 0.0});
    out.degree = 1;
    out.raise = 1;
    out.exact_level = space->cutoff() - 1;
  }
  out.footprint = beta == 0.0 ? Footprint::AOnly
                              : (alpha == 0.0 ? Footprint::BOnly : Footprint::Mixed);

  const double scale = std::max(max_abs_entry(out), 1e-300);
  const OperatorMatrix defect = op_sub(out, [&] {
    OperatorMatrix adj = out;
    adj.mat = SparseC(out.mat.adjoint());
    return adj;
  }());
  if (max_abs_entry(defect) > 1e-10 * scale)
    throw NumericsError("observable failed the Hermiticity check");
  // Exact Hermitization absorbs reality-defect dust at or below 1e-10.
  OperatorMatrix sym = out;
  sym.mat = SparseC(0.5 * (out.mat + SparseC(out.mat.adjoint())));
  return sym;
}

}  // namespace

OperatorMatrix observable(const ObservableSpec& spec, const ModeBasis& basis_a,
                          const ModeBasis& basis_b, std::shared_ptr<const FockSpace> space) {
  if (reality_defect(spec.test_function) > 1e-10)
    throw RealityError("observable smearing functions must be real (defect > 1e-10)");
  const TestFunction fstar = conjugate(spec.test_function);
  double ra = 0.0, rast = 0.0, rb = 0.0, rbst = 0.0;
  Eigen::VectorXcd ca = Eigen::VectorXcd::Zero(std::max(1, basis_a.modes()));
  Eigen::VectorXcd ca_star = ca, cb = Eigen::VectorXcd::Zero(std::max(1, basis_b.modes())),
                  cb_star = cb;
  if (spec.alpha != 0.0) {
    ca = basis_a.expand(spec.test_function, &ra);
    ca_star = basis_a.expand(fstar, &rast);
  }
  if (spec.beta != 0.0) {
    cb = basis_b.expand(spec.test_function, &rb);
    cb_star = basis_b.expand(fstar, &rbst);
  }
  const double worst = std::max({ra, rast, rb, rbst});
  if (worst > 1e-8)
    throw SpanError("mode bases do not span the observable's test function");
  return observable_from_parts(spec.alpha, spec.beta, ca, ca_star, cb, cb_star, std::move(space));
}

OperatorMatrix observable_from_bank(ObservableKind kind, double alpha, double beta,
                                    int bank_index, const ModeBasis& basis_a,
                                    const ModeBasis& basis_b,
                                    std::shared_ptr<const FockSpace> space) {
  if (kind == ObservableKind::Phi) beta = 0.0, alpha = 1.0;
  if (kind == ObservableKind::Chi) alpha = 1.0, beta = 1.0;
  if (bank_index < 0 || bank_index >= basis_a.bank_size() ||
      (beta != 0.0 && bank_index >= basis_b.bank_size()))
    throw DimensionError("bank index out of range");
  const TestFunction& f = basis_a.bank()[std::size_t(bank_index)];
  if (reality_defect(f) > 1e-10)
    throw RealityError("observable smearing functions must be real (defect > 1e-10)");
  // Real bank member: f* = f, so the Gram-exact column serves all four parts.
  const Eigen::VectorXcd ca = basis_a.expand_bank_member(bank_index);
  const Eigen::VectorXcd cb = beta != 0.0 ? basis_b.expand_bank_member(bank_index)
                                          : Eigen::VectorXcd::Zero(std::max(1, basis_b.modes()));
  return observable_from_parts(alpha, beta, ca, ca, cb, cb, std::move(space));
}

OperatorMatrix number_operator(SectorTag sector, std::shared_ptr<const FockSpace> space) {
  const long dim = space->dimension();
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(std::size_t(dim));
  for (long s = 0; s < dim; ++s) {
    const int n = sector == SectorTag::A ? space->level_a(s) : space->level_b(s);
    if (n != 0) trips.emplace_back(s, s, cplx(double(n), 0.0));
  }
  OperatorMatrix out;
  out.mat = SparseC(dim, dim);
  out.mat.setFromTriplets(trips.begin(), trips.end());
  out.space = std::move(space);
  out.footprint = sector == SectorTag::A ? Footprint::AOnly : Footprint::BOnly;
  out.degree = 2;  // a^dag a
  out.raise = 0;
  out.exact_level = out.space->cutoff();  // diagonal action is never truncated
  return out;
}

// ---------------------------------------------------------------------------
// States

DensityOperator DensityOperator::from_state(StateVector psi) {
  DensityOperator rho;
  rho.kind = Kind::Pure;
  rho.space = psi.space;
  rho.pure = std::move(psi);
  return rho;
}

StateVector vacuum_state(std::shared_ptr<const FockSpace> space) {
  StateVector psi;
  psi.coeffs = Eigen::VectorXcd::Zero(space->dimension());
  psi.coeffs(0) = 1.0;
  psi.space = std::move(space);
  return psi;
}

namespace {
StateVector one_quantum_impl(const ModeBasis& basis_a, const TestFunction& f,
                             std::shared_ptr<const FockSpace> space, double* norm_defect) {
  const double norm_pos = pair(f, f, basis_a.quadrature().with_sheet(Sheet::Positive),
                               basis_a.metric())
                              .value.real();
  if (std::abs(norm_pos - 1.0) > 1e-8)
    throw NumericsError("single-quantum state requires (f,f) = 1 to 1e-8");
  const double norm_neg = pair(f, f, basis_a.quadrature().with_sheet(Sheet::Negative),
                               basis_a.metric(), norm_pos)
                              .value.real();
  if (norm_neg > 1e-8 * std::max(1.0, norm_pos))
    throw NumericsError("single-quantum state requires a positive-frequency test function");

  const OperatorMatrix adag =
      ladder_operator(basis_a, f, LadderKind::Create, SectorTag::A, space);
  StateVector psi = vacuum_state(space);
  psi.coeffs = adag.mat * psi.coeffs;
  const double n = psi.coeffs.norm();
  if (norm_defect) *norm_defect = std::abs(n - 1.0);
  if (n == 0.0) throw NumericsError("single-quantum state collapsed to zero");
  psi.coeffs /= n;
  return psi;
}
}  // namespace

StateVector single_quantum_state(const ModeBasis& basis_a, const TestFunction& f,
                                 std::shared_ptr<const FockSpace> space, double* norm_defect) {
  return one_quantum_impl(basis_a, f, std::move(space), norm_defect);
}

DensityOperator projector_density(const ModeBasis& basis_a, const TestFunction& f,
                                  std::shared_ptr<const FockSpace> space) {
  return DensityOperator::from_state(one_quantum_impl(basis_a, f, std::move(space), nullptr));
}

// ---------------------------------------------------------------------------
// Gibbs weights

GibbsResult gibbs_weight(const GibbsSpec& spec, std::shared_ptr<const FockSpace> space) {
  if (!(spec.mu > 0.0) || !(spec.nu > 0.0)) throw ConfigError("gibbs weights require mu, nu > 0");
  const long dim = space->dimension();
  Eigen::VectorXd w(dim);
  for (long s = 0; s < dim; ++s)
    w(s) = std::exp(-2.0 * spec.mu * space->level_a(s) - 2.0 * spec.nu * space->level_b(s));
  const double z = w.sum();

  // Discarded-weight bound: sum over levels beyond the cutoff of the level
  // degeneracy times the largest per-level weight.
  const int M = space->modes();
  const double m2 = 2.0 * std::min(spec.mu, spec.nu);
  double tail = 0.0;
  for (int n = space->cutoff() + 1; n < space->cutoff() + 4000; ++n) {
    const double term = std::exp(-m2 * n + std::lgamma(n + M) - std::lgamma(n + 1.0) -
                                 std::lgamma(double(M)));
    tail += term;
    if (term < 1e-22 * (tail + z)) break;
  }

  GibbsResult out;
  out.rho.kind = DensityOperator::Kind::Diagonal;
  out.rho.weights = w / z;
  out.rho.space = space;
  out.tail_bound_rel = tail / (z + tail);
  out.tail_warning = out.tail_bound_rel > 1e-6;
  return out;
}

int gibbs_cutoff_for(const GibbsSpec& spec, int modes, double bound, int max_n) {
  if (!(spec.mu > 0.0) || !(spec.nu > 0.0)) throw ConfigError("gibbs weights require mu, nu > 0");
  const double m2 = 2.0 * std::min(spec.mu, spec.nu);
  const double z_floor = 1.0;  // trace is at least the vacuum weight
  for (int N = 4; N <= max_n; ++N) {
    double tail = 0.0;
    for (int n = N + 1; n < N + 4000; ++n) {
      const double term = std::exp(-m2 * n + std::lgamma(n + modes) - std::lgamma(n + 1.0) -
                                   std::lgamma(double(modes)));
      tail += term;
      if (term < 1e-22 * (tail + z_floor)) break;
    }
    if (tail / z_floor < bound) return N;
  }
  throw ConvergenceError("no cutoff satisfies the Gibbs tail rule");
}

// ---------------------------------------------------------------------------
// Characteristic functions

namespace {

bool uniform_from_zero(const std::vector<double>& l, double& step) {
  if (l.empty()) return false;
  if (std::abs(l[0]) > 1e-14) return false;
  if (l.size() == 1) {
    step = 0.0;
    return true;
  }
  step = l[1] - l[0];
  if (!(step > 0.0)) return false;
  for (std::size_t j = 0; j < l.size(); ++j)
    if (std::abs(l[j] - double(j) * step) > 1e-12 * (1.0 + std::abs(l.back()))) return false;
  return true;
}

void check_hermitian(const OperatorMatrix& O) {
  const double scale = std::max(max_abs_entry(O), 1e-300);
  OperatorMatrix adj = O;
  adj.mat = SparseC(O.mat.adjoint());
  if (max_abs_entry(op_sub(O, adj)) > 1e-10 * scale)
    throw NumericsError("characteristic function requires a Hermitian observable");
}

double truncation_model(double lam2V, int cutoff) {
  if (lam2V <= 0.0) return 0.0;
  // Amplitude model for boundary leakage of a displaced vacuum:
  // (lambda^2 V)^{(N+1)/2} / sqrt((N+1)!), doubled for safety.
  const double ln = 0.5 * (double(cutoff + 1) * std::log(lam2V) - std::lgamma(cutoff + 2.0));
  return std::min(2.0, 2.0 * std::exp(ln));
}

std::vector<cplx> charfn_dense(const DensityOperator& rho, const OperatorMatrix& O,
                               const std::vector<double>& lambdas) {
  const Eigen::MatrixXcd H = Eigen::MatrixXcd(O.mat);
  std::vector<cplx> vals(lambdas.size());
  double step = 0.0;
  const bool uniform = uniform_from_zero(lambdas, step) && lambdas.size() >= 3;
  if (uniform) {
    const Eigen::MatrixXcd U = unitary_exp_dense(H, step);
    if (rho.kind == DensityOperator::Kind::Pure) {
      Eigen::VectorXcd v = rho.pure.coeffs;
      for (std::size_t j = 0; j < lambdas.size(); ++j) {
        vals[j] = rho.pure.coeffs.dot(v);
        if (j + 1 < lambdas.size()) v = U * v;
      }
    } else {
      Eigen::MatrixXcd E = Eigen::MatrixXcd::Identity(H.rows(), H.cols());
      for (std::size_t j = 0; j < lambdas.size(); ++j) {
        cplx acc{0.0, 0.0};
        for (long n = 0; n < H.rows(); ++n) acc += rho.weights(n) * E(n, n);
        vals[j] = acc;
        if (j + 1 < lambdas.size()) E = (E * U).eval();
      }
    }
    return vals;
  }
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    const Eigen::MatrixXcd E = unitary_exp_dense(H, lambdas[j]);
    if (rho.kind == DensityOperator::Kind::Pure) {
      vals[j] = rho.pure.coeffs.dot(E * rho.pure.coeffs);
    } else {
      cplx acc{0.0, 0.0};
      for (long n = 0; n < H.rows(); ++n) acc += rho.weights(n) * E(n, n);
      vals[j] = acc;
    }
  }
  return vals;
}

std::vector<cplx> charfn_krylov(const DensityOperator& rho, const OperatorMatrix& O,
                                const std::vector<double>& lambdas) {
  std::vector<cplx> vals(lambdas.size(), cplx{0.0, 0.0});
  double step = 0.0;
  const bool uniform = uniform_from_zero(lambdas, step) && lambdas.size() >= 3;

  auto propagate_pure = [&](const Eigen::VectorXcd& start,
                            const std::function<void(std::size_t, const Eigen::VectorXcd&)>& sink) {
    if (uniform) {
      Eigen::VectorXcd v = start;
      for (std::size_t j = 0; j < lambdas.size(); ++j) {
        sink(j, v);
        if (j + 1 < lambdas.size()) v = unitary_exp_krylov(O.mat, step, v);
      }
    } else {
      for (std::size_t j = 0; j < lambdas.size(); ++j)
        sink(j, unitary_exp_krylov(O.mat, lambdas[j], start));
    }
  };

  if (rho.kind == DensityOperator::Kind::Pure) {
    propagate_pure(rho.pure.coeffs, [&](std::size_t j, const Eigen::VectorXcd& v) {
      vals[j] = rho.pure.coeffs.dot(v);
    });
    return vals;
  }
  // Diagonal density: propagate each significant occupation column.
  std::vector<long> order(std::size_t(rho.weights.size()));
  for (long i = 0; i < rho.weights.size(); ++i) order[std::size_t(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](long a, long b) { return rho.weights(a) > rho.weights(b); });
  double kept = 0.0;
  for (long n : order) {
    if (1.0 - kept < 1e-12) break;
    kept += rho.weights(n);
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(rho.weights.size());
    e(n) = 1.0;
    propagate_pure(e, [&](std::size_t j, const Eigen::VectorXcd& v) {
      vals[j] += rho.weights(n) * e.dot(v);
    });
  }
  return vals;
}

}  // namespace

CharFnResult characteristic_function(const DensityOperator& rho, const OperatorMatrix& O,
                                     const CharacteristicQuery& query) {
  if (rho.space.get() != O.space.get())
    throw DimensionError("state and observable live on different spaces");
  check_hermitian(O);
  for (double l : query.lambdas)
    if (!std::isfinite(l)) throw ConfigError("characteristic query lambdas must be finite");

  CharFnResult out;
  if (query.method == CharacteristicQuery::Method::AnalyticGaussian) {
    if (query.analytic_variance < 0.0)
      throw ConfigError("analytic-gaussian method needs analytic_variance >= 0");
    out.values.reserve(query.lambdas.size());
    for (double l : query.lambdas)
      out.values.push_back(std::exp(-0.5 * l * l * query.analytic_variance));
    return out;
  }

  out.values = O.space->dimension() <= 2000 ? charfn_dense(rho, O, query.lambdas)
                                            : charfn_krylov(rho, O, query.lambdas);
  // exp(i*0*O) = 1 on any trace-normalized state; pin the exact value
  for (std::size_t j = 0; j < query.lambdas.size(); ++j)
    if (query.lambdas[j] == 0.0) out.values[j] = cplx{1.0, 0.0};

  if (query.analytic_variance >= 0.0) {
    double maxdiff = 0.0, bound = 0.0;
    for (std::size_t j = 0; j < query.lambdas.size(); ++j) {
      const double l = query.lambdas[j];
      maxdiff = std::max(maxdiff,
                         std::abs(out.values[j] - std::exp(-0.5 * l * l * query.analytic_variance)));
      bound = std::max(bound, truncation_model(l * l * query.analytic_variance,
                                               O.space->cutoff()));
    }
    out.max_cross_difference = maxdiff;
    out.truncation_bound = bound;
    out.truncation_warning = maxdiff > std::max(bound, 1e-11);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Expectations and Jacobi report

cplx expectation(const DensityOperator& rho, const OperatorMatrix& A) {
  if (rho.space.get() != A.space.get()) throw DimensionError("state/operator space mismatch");
  if (rho.kind == DensityOperator::Kind::Pure)
    return rho.pure.coeffs.dot(A.mat * rho.pure.coeffs);
  cplx acc{0.0, 0.0};
  for (int k = 0; k < A.mat.outerSize(); ++k)
    for (SparseC::InnerIterator it(A.mat, k); it; ++it)
      if (it.row() == it.col()) acc += rho.weights(it.row()) * it.value();
  return acc;
}

cplx matrix_element(const StateVector& bra, const OperatorMatrix& A, const StateVector& ket) {
  if (bra.space.get() != A.space.get() || ket.space.get() != A.space.get())
    throw DimensionError("state/operator space mismatch");
  return bra.coeffs.dot(A.mat * ket.coeffs);
}

double expectation_of_square(const DensityOperator& rho, const OperatorMatrix& A) {
  if (rho.kind == DensityOperator::Kind::Pure) return (A.mat * rho.pure.coeffs).squaredNorm();
  double acc = 0.0;
  for (int k = 0; k < A.mat.outerSize(); ++k)
    for (SparseC::InnerIterator it(A.mat, k); it; ++it)
      acc += std::norm(it.value()) * rho.weights(it.col());
  return acc;
}

JacobiReport jacobi_check(const std::vector<std::array<OperatorMatrix, 3>>& triples,
                          const std::vector<std::array<std::string, 3>>& names) {
  JacobiReport report;
  for (std::size_t t = 0; t < triples.size(); ++t) {
    const auto& [A, B, C] = triples[t];
    const OperatorMatrix J = op_add(
        op_add(commutator(A, commutator(B, C)), commutator(B, commutator(C, A))),
        commutator(C, commutator(A, B)));
    const int lvl = J.safe_level();
    if (lvl < 0) throw ConfigError("jacobi check needs a larger excitation cutoff");
    JacobiReport::Entry e;
    e.names = t < names.size() ? names[t] : std::array<std::string, 3>{"A", "B", "C"};
    e.level = lvl;
    e.residual = restricted_frobenius(J, lvl);
    e.scale = restricted_frobenius(A, lvl) * restricted_frobenius(B, lvl) *
              restricted_frobenius(C, lvl);
    report.entries.push_back(e);
    if (e.scale > 0.0) report.max_ratio = std::max(report.max_ratio, e.residual / e.scale);
  }
  return report;
}

std::string operator_to_triplet_text(const OperatorMatrix& A) {
  std::ostringstream os;
  os.precision(17);
  os << "# sparse operator triplets: row,col,re,im ; dim=" << A.mat.rows()
     << " cutoff=" << A.space->cutoff() << " safe_level=" << A.safe_level() << '\n';
  for (int k = 0; k < A.mat.outerSize(); ++k)
    for (SparseC::InnerIterator it(A.mat, k); it; ++it)
      os << it.row() << ',' << it.col() << ',' << it.value().real() << ',' << it.value().imag()
         << '\n';
  return os.str();
}

}  // namespace lcf
