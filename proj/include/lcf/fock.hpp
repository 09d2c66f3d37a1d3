#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <memory>
#include <string>
#include <vector>

#include "lcf/expm.hpp"
#include "lcf/pairing.hpp"

namespace lcf {

enum class SectorTag { A, B };  // A: positive-frequency quanta, B: negative
enum class LadderKind { Annihilate, Create };
enum class Footprint { AOnly, BOnly, Mixed };

/// Orthonormal one-particle modes from the eigendecomposition of a bank Gram
/// matrix. Column j of `coefficients` holds the coordinates c_alpha(f_j) of
/// bank function j in the kept modes, so C^H C reproduces the Gram matrix.
/// Ladder convention: a_f = sum_alpha c_alpha(f) A_alpha, which realizes
/// [a_f, a_g^dag] = (g,f) with the mode CCR [A_alpha, A_beta^dag] = delta.
class ModeBasis {
 public:
  Sheet sheet() const { return gram_.sector; }
  int modes() const { return int(coefficients_.rows()); }
  int bank_size() const { return int(coefficients_.cols()); }
  const GramMatrix& gram() const { return gram_; }
  const Eigen::MatrixXcd& coefficients() const { return coefficients_; }
  const Eigen::VectorXd& kept_eigenvalues() const { return eigenvalues_; }
  const std::vector<TestFunction>& bank() const { return *bank_; }
  const LightConeQuadrature& quadrature() const { return quad_; }
  const MetricConstants& metric() const { return metric_; }

  /// Coordinates of an arbitrary f in the kept modes; residual_rel receives
  /// the unspanned norm fraction relative to max of the two sheet norms (so
  /// functions with no support on this sheet expand to ~0 instead of failing).
  Eigen::VectorXcd expand(const TestFunction& f, double* residual_rel) const;

  /// Expansion of bank member j (exact, no quadrature).
  Eigen::VectorXcd expand_bank_member(int j) const { return coefficients_.col(j); }

  friend ModeBasis build_mode_basis(const std::vector<TestFunction>& bank, Sheet sector,
                                    const LightConeQuadrature& quad, const MetricConstants& metric,
                                    std::vector<std::string> ids, double eigen_floor);

 private:
  GramMatrix gram_;
  Eigen::MatrixXcd coefficients_;   // modes x bank
  Eigen::MatrixXcd inv_sqrt_map_;   // Lambda^{-1/2} V^H (modes x bank), for expand()
  Eigen::VectorXd eigenvalues_;     // kept, descending
  double eigen_floor_ = 1e-10;
  std::shared_ptr<const std::vector<TestFunction>> bank_;
  LightConeQuadrature quad_;
  MetricConstants metric_;
};

/// Eigendecomposes the bank Gram on the requested sheet, discards directions
/// below eigen_floor * lambda_max, and returns the orthonormal mode basis.
ModeBasis build_mode_basis(const std::vector<TestFunction>& bank, Sheet sector,
                           const LightConeQuadrature& quad, const MetricConstants& metric = {},
                           std::vector<std::string> ids = {}, double eigen_floor = 1e-10);

/// Two-sector truncated Fock space: occupation tuples over a_modes + b_modes
/// with total excitation <= cutoff, enumerated graded-lexicographically
/// (level-major), so every safe subspace is a contiguous index prefix.
class FockSpace {
 public:
  FockSpace(int a_modes, int b_modes, int total_cutoff);

  int a_modes() const { return a_modes_; }
  int b_modes() const { return b_modes_; }
  int modes() const { return a_modes_ + b_modes_; }
  int cutoff() const { return cutoff_; }
  long dimension() const { return long(states_.size()); }

  int occupation(long idx, int mode) const { return states_[std::size_t(idx)][std::size_t(mode)]; }
  int level(long idx) const { return level_[std::size_t(idx)]; }
  int level_a(long idx) const { return level_a_[std::size_t(idx)]; }
  int level_b(long idx) const { return level(idx) - level_a(idx); }

  long lowered_index(long idx, int mode) const { return lower_[std::size_t(idx) * std::size_t(modes()) + std::size_t(mode)]; }
  long raised_index(long idx, int mode) const { return raise_[std::size_t(idx) * std::size_t(modes()) + std::size_t(mode)]; }

  /// Number of states with total excitation <= lvl (prefix of the enumeration).
  long prefix_dimension(int lvl) const;

 private:
  int a_modes_, b_modes_, cutoff_;
  std::vector<std::array<std::uint8_t, 8>> states_;
  std::vector<int> level_, level_a_;
  std::vector<long> lower_, raise_;
  std::vector<long> prefix_;
};

/// Sparse operator on a FockSpace with truncation bookkeeping:
///   degree      polynomial degree in ladder factors (spec safe-level rule),
///   raise       max total-excitation increase of the action,
///   exact_level action is truncation-exact on states with level <= this.
struct OperatorMatrix {
  SparseC mat;
  std::shared_ptr<const FockSpace> space;
  Footprint footprint = Footprint::Mixed;
  int degree = 0;
  int raise = 0;
  int exact_level = 0;

  int safe_level() const { return std::min(exact_level, space->cutoff() - degree); }
  long rows() const { return mat.rows(); }
};

OperatorMatrix op_identity(std::shared_ptr<const FockSpace> space);
OperatorMatrix op_scale(const OperatorMatrix& A, cplx s);
OperatorMatrix op_add(const OperatorMatrix& A, const OperatorMatrix& B);
OperatorMatrix op_sub(const OperatorMatrix& A, const OperatorMatrix& B);
OperatorMatrix op_product(const OperatorMatrix& A, const OperatorMatrix& B);

/// AB - BA with combined safe-level bookkeeping.
OperatorMatrix commutator(const OperatorMatrix& A, const OperatorMatrix& B);

/// Frobenius norm of the block on states with level <= lvl.
double restricted_frobenius(const OperatorMatrix& A, int lvl);
double max_abs_entry(const OperatorMatrix& A);

/// a_f / a_f^dag (sector A) or b_f / b_f^dag (sector B) for f expanded in the
/// sector's mode basis. Throws SpanError when the bank does not span f.
OperatorMatrix ladder_operator(const ModeBasis& basis, const TestFunction& f, LadderKind kind,
                               SectorTag sector, std::shared_ptr<const FockSpace> space);

/// Same, for a bank member: uses the Gram-exact expansion column, so ladder
/// commutators reproduce the Gram entries to roundoff (no fresh quadrature).
OperatorMatrix ladder_operator_bank(const ModeBasis& basis, int bank_index, LadderKind kind,
                                    SectorTag sector, std::shared_ptr<const FockSpace> space);

enum class ObservableKind { Phi, Chi, Xi };

/// Smearing spec: phi pins (alpha,beta)=(1,0), chi pins (1,1), xi is free.
/// The test function must be observably real (reality_defect <= 1e-10).
struct ObservableSpec {
  ObservableKind kind;
  TestFunction test_function;
  double alpha = 1.0;
  double beta = 0.0;
};
ObservableSpec phi_spec(TestFunction f);
ObservableSpec chi_spec(TestFunction f);
ObservableSpec xi_spec(TestFunction f, double alpha, double beta);

/// alpha (a_f + a^dag_{f*}) + beta (b_f + b^dag_{f*}); Hermitian to 1e-12.
OperatorMatrix observable(const ObservableSpec& spec, const ModeBasis& basis_a,
                          const ModeBasis& basis_b, std::shared_ptr<const FockSpace> space);

/// Observable for a real bank member shared by both bases; uses Gram-exact
/// expansion columns (see ladder_operator_bank).
OperatorMatrix observable_from_bank(ObservableKind kind, double alpha, double beta,
                                    int bank_index, const ModeBasis& basis_a,
                                    const ModeBasis& basis_b,
                                    std::shared_ptr<const FockSpace> space);

/// Total mode-number operator of a sector (diagonal); [Xi_a, b-anything] = 0
/// holds exactly on the truncated space.
OperatorMatrix number_operator(SectorTag sector, std::shared_ptr<const FockSpace> space);

struct StateVector {
  Eigen::VectorXcd coeffs;  // unit norm
  std::shared_ptr<const FockSpace> space;
};

/// Diagonal (Gibbs) or pure density operator; trace fixed to 1.
struct DensityOperator {
  enum class Kind { Diagonal, Pure };
  Kind kind = Kind::Pure;
  Eigen::VectorXd weights;  // Diagonal: normalized occupation-basis weights
  StateVector pure;
  std::shared_ptr<const FockSpace> space;

  static DensityOperator from_state(StateVector psi);
};

StateVector vacuum_state(std::shared_ptr<const FockSpace> space);

/// a_f^dag |0> for normalized positive-frequency f ((f,f)=1 to 1e-8,
/// (f,f)_- below tolerance); result normalized exactly, the defect reported
/// through norm_defect when non-null.
StateVector single_quantum_state(const ModeBasis& basis_a, const TestFunction& f,
                                 std::shared_ptr<const FockSpace> space,
                                 double* norm_defect = nullptr);

DensityOperator projector_density(const ModeBasis& basis_a, const TestFunction& f,
                                  std::shared_ptr<const FockSpace> space);

struct GibbsSpec {
  double mu = 1.0;
  double nu = 1.0;
};

struct GibbsResult {
  DensityOperator rho;
  double tail_bound_rel = 0.0;  // discarded-weight bound relative to the trace
  bool tail_warning = false;    // set when the bound exceeds 1e-6
};

/// Gibbs super-vacuum weights. The per-quantum weight is exp(-2 mu) per
/// a-quantum and exp(-2 nu) per b-quantum (symmetrized-quadratic generator
/// convention: its normal-ordering constant cancels in the normalized trace),
/// which makes the variance multiplier exactly alpha^2 coth(mu) + beta^2 coth(nu).
GibbsResult gibbs_weight(const GibbsSpec& spec, std::shared_ptr<const FockSpace> space);

/// Smallest cutoff N whose discarded Gibbs tail bound is below `bound`.
int gibbs_cutoff_for(const GibbsSpec& spec, int modes, double bound = 1e-8, int max_n = 400);

struct CharacteristicQuery {
  std::vector<double> lambdas;
  enum class Method { MatrixExponential, AnalyticGaussian } method = Method::MatrixExponential;
  /// Variance V for the analytic route (assembled by the caller from
  /// pairings); also enables the truncation-dominance cross-check.
  double analytic_variance = -1.0;
};

struct CharFnResult {
  std::vector<cplx> values;
  double max_cross_difference = 0.0;  // numeric vs analytic, when available
  double truncation_bound = 0.0;      // modeled boundary-leakage bound
  bool truncation_warning = false;
};

/// Tr[rho exp(i lambda O)] per lambda. Dense scaling-and-squaring for
/// dimension <= 2000, Lanczos propagation above; uniform lambda grids reuse
/// the single-step propagator. O must be Hermitian to 1e-10.
CharFnResult characteristic_function(const DensityOperator& rho, const OperatorMatrix& O,
                                     const CharacteristicQuery& query);

cplx expectation(const DensityOperator& rho, const OperatorMatrix& A);
cplx matrix_element(const StateVector& bra, const OperatorMatrix& A, const StateVector& ket);
double expectation_of_square(const DensityOperator& rho, const OperatorMatrix& A);

struct JacobiReport {
  struct Entry {
    std::array<std::string, 3> names;
    double residual = 0.0;  // restricted Frobenius of the cyclic sum
    double scale = 0.0;     // product of restricted norms
    int level = 0;
  };
  std::vector<Entry> entries;
  double max_ratio = 0.0;
};

JacobiReport jacobi_check(const std::vector<std::array<OperatorMatrix, 3>>& triples,
                          const std::vector<std::array<std::string, 3>>& names);

/// Documented sparse export: "row,col,re,im" lines after a header comment.
std::string operator_to_triplet_text(const OperatorMatrix& A);

}  // namespace lcf
