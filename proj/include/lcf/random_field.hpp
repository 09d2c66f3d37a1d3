#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lcf/fock.hpp"
#include "lcf/pairing.hpp"

namespace lcf {

enum class CovarianceSource { Vacuum, Gibbs };

/// Classical covariance of the commuting observables chi_f over a real bank:
///   vacuum:  <chi_f chi_g> = Re[(g,f) + (g,f)_-]            (= 2 Re (g,f))
///   gibbs:   coth(mu) Re(g,f) + coth(nu) Re(g,f)_-
/// The state-independent imaginary parts cancel between the sheets; the
/// residue is checked and discarded.
struct CovarianceModel {
  Eigen::MatrixXd matrix;
  CovarianceSource source = CovarianceSource::Vacuum;
  GibbsSpec gibbs;  // meaningful for the Gibbs source
  std::vector<std::string> bank;
  double imag_residue = 0.0;
};

CovarianceModel covariance(const std::vector<TestFunction>& bank, CovarianceSource source,
                           const LightConeQuadrature& quad, const MetricConstants& metric = {},
                           const GibbsSpec& gibbs = {1.0, 1.0},
                           std::vector<std::string> ids = {});

/// Seeded multivariate normal draws with empirical statistics. Every draw is
/// a pure function of (seed, draw index), so batches are bit-reproducible for
/// any worker count; statistics reduce in fixed index order.
struct SampleBatch {
  std::uint64_t seed = 0;
  long count = 0;
  Eigen::MatrixXd draws;                // count x n
  Eigen::VectorXd empirical_mean;       // n
  Eigen::MatrixXd empirical_covariance; // n x n, unbiased
  Eigen::MatrixXd standard_errors;      // n x n, delete-one jackknife
  std::string generator = "philox4x32-10/v1";
};

SampleBatch sample_batch(const CovarianceModel& model, long count, std::uint64_t seed);

std::string batch_to_csv(const SampleBatch& batch);
std::string covariance_to_json_text(const CovarianceModel& model);

/// Characteristic-function form of the smoothing identity: for any a-sector
/// state tensored with the b vacuum and real f,
///   Phi_chi(lambda) = Phi_phi(lambda) * exp(-lambda^2 (f*,f)_- / 2).
/// Both sides are evaluated through the Fock machinery; the report carries the
/// worst absolute mismatch over the grid and the implied smoothing variance.
struct ConvolutionReport {
  std::vector<double> lambdas;
  std::vector<cplx> chi_side;
  std::vector<cplx> smoothed_phi_side;
  double max_difference = 0.0;
  double smoothing_variance = 0.0;  // (f*,f)_-
};

ConvolutionReport convolution_check(const DensityOperator& state, const TestFunction& f,
                                    const std::vector<double>& lambda_grid,
                                    const ModeBasis& basis_a, const ModeBasis& basis_b,
                                    std::shared_ptr<const FockSpace> space);

}  // namespace lcf
