#include "lcf/random_field.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lcf/parallel.hpp"
#include "lcf/rng.hpp"

namespace lcf {

CovarianceModel covariance(const std::vector<TestFunction>& bank, CovarianceSource source,
                           const LightConeQuadrature& quad, const MetricConstants& metric,
                           const GibbsSpec& gibbs, std::vector<std::string> ids) {
  for (const auto& f : bank)
    if (reality_defect(f) > 1e-10)
      throw RealityError("covariance banks must consist of real test functions");

  const GramMatrix gp = gram_matrix(bank, Sheet::Positive, quad, metric, ids);
  const GramMatrix gm = gram_matrix(bank, Sheet::Negative, quad, metric, gp.bank);
  const long n = gp.entries.rows();

  double ca = 1.0, cb = 1.0;
  if (source == CovarianceSource::Gibbs) {
    if (!(gibbs.mu > 0.0) || !(gibbs.nu > 0.0))
      throw ConfigError("gibbs covariance requires mu, nu > 0");
    ca = 1.0 / std::tanh(gibbs.mu);
    cb = 1.0 / std::tanh(gibbs.nu);
  }

  CovarianceModel model;
  model.matrix.resize(n, n);
  double residue = 0.0, scale = 0.0;
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      const cplx sheet_sum = gp.entries(i, j) + gm.entries(i, j);
      residue = std::max(residue, std::abs(sheet_sum.imag()));
      scale = std::max(scale, std::abs(sheet_sum));
      model.matrix(i, j) = ca * gp.entries(i, j).real() + cb * gm.entries(i, j).real();
    }
  model.imag_residue = scale > 0.0 ? residue / scale : 0.0;
  if (model.imag_residue > 1e-10)
    throw NumericsError("covariance imaginary residue exceeds 1e-10 of scale");

  model.matrix = 0.5 * (model.matrix + model.matrix.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.matrix);
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(es.eigenvalues().maxCoeff(), 1e-300))
    throw NumericsError("covariance violates positive semidefiniteness beyond slack");

  model.source = source;
  model.gibbs = gibbs;
  model.bank = gp.bank;
  return model;
}

SampleBatch sample_batch(const CovarianceModel& model, long count, std::uint64_t seed) {
  if (count < 2) throw ConfigError("sample_batch needs count >= 2");
  const long n = model.matrix.rows();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.matrix);
  const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
  Eigen::VectorXd lam = es.eigenvalues();
  for (long i = 0; i < n; ++i) {
    if (lam(i) < -1e-10 * std::max(lmax, 1e-300))
      throw NumericsError("sample_batch: covariance factorization failed (indefinite input)");
    lam(i) = std::max(lam(i), 0.0);
  }
  const Eigen::MatrixXd L = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();

  SampleBatch batch;
  batch.seed = seed;
  batch.count = count;
  batch.draws.resize(count, n);
  const RandomStream rs(seed);
  parallel_for(std::size_t(count), [&](std::size_t i) {
    Eigen::VectorXd z(n);
    for (long j = 0; j < n; ++j)
      z(j) = rs.normal(std::uint64_t(i) * std::uint64_t(n) + std::uint64_t(j));
    batch.draws.row(long(i)) = (L * z).transpose();
  });

  // Fixed-order reductions keep the statistics bit-stable across worker counts.
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(n, n);
  for (long i = 0; i < count; ++i) {
    s1 += batch.draws.row(i).transpose();
    s2 += batch.draws.row(i).transpose() * batch.draws.row(i);
  }
  batch.empirical_mean = s1 / double(count);
  batch.empirical_covariance =
      (s2 - double(count) * batch.empirical_mean * batch.empirical_mean.transpose()) /
      double(count - 1);

  // Delete-one jackknife of the unbiased covariance estimator.
  Eigen::MatrixXd jk_mean = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd jk_msq = Eigen::MatrixXd::Zero(n, n);
  const double nm1 = double(count - 1), nm2 = double(count - 2);
  for (long i = 0; i < count; ++i) {
    const Eigen::VectorXd xi = batch.draws.row(i).transpose();
    const Eigen::VectorXd mi = (s1 - xi) / nm1;
    const Eigen::MatrixXd ci = (s2 - xi * xi.transpose() - nm1 * mi * mi.transpose()) / nm2;
    jk_mean += ci;
    jk_msq += ci.cwiseProduct(ci);
  }
  jk_mean /= double(count);
  jk_msq /= double(count);
  batch.standard_errors =
      ((jk_msq - jk_mean.cwiseProduct(jk_mean)).cwiseMax(0.0) * nm1).cwiseSqrt();
  return batch;
}

std::string batch_to_csv(const SampleBatch& batch) {
  std::ostringstream os;
  os.precision(17);
  for (long i = 0; i < batch.draws.rows(); ++i) {
    for (long j = 0; j < batch.draws.cols(); ++j) {
      if (j) os << ',';
      os << batch.draws(i, j);
    }
    os << '\n';
  }
  return os.str();
}

std::string covariance_to_json_text(const CovarianceModel& model) {
  nlohmann::json j;
  j["source"] = model.source == CovarianceSource::Vacuum ? "vacuum" : "gibbs";
  if (model.source == CovarianceSource::Gibbs) {
    j["mu"] = model.gibbs.mu;
    j["nu"] = model.gibbs.nu;
  }
  j["bank"] = model.bank;
  j["imag_residue"] = model.imag_residue;
  nlohmann::json rows = nlohmann::json::array();
  for (long i = 0; i < model.matrix.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (long jj = 0; jj < model.matrix.cols(); ++jj) row.push_back(model.matrix(i, jj));
    rows.push_back(row);
  }
  j["matrix"] = rows;
  return j.dump(2);
}

ConvolutionReport convolution_check(const DensityOperator& state, const TestFunction& f,
                                    const std::vector<double>& lambda_grid,
                                    const ModeBasis& basis_a, const ModeBasis& basis_b,
                                    std::shared_ptr<const FockSpace> space) {
  if (reality_defect(f) > 1e-10)
    throw RealityError("convolution check requires a real test function");
  const auto xi_b = number_operator(SectorTag::B, space);
  if (std::abs(expectation(state, xi_b)) > 1e-12)
    throw ConfigError("convolution check requires a state in the b-sector vacuum");

  const OperatorMatrix chi = observable(chi_spec(f), basis_a, basis_b, space);
  const OperatorMatrix phi = observable(phi_spec(f), basis_a, basis_b, space);

  CharacteristicQuery q;
  q.lambdas = lambda_grid;
  const CharFnResult chi_fn = characteristic_function(state, chi, q);
  const CharFnResult phi_fn = characteristic_function(state, phi, q);

  const double v_minus =
      pair(conjugate(f), f, basis_a.quadrature().with_sheet(Sheet::Negative), basis_a.metric())
          .value.real();

  ConvolutionReport rep;
  rep.lambdas = lambda_grid;
  rep.chi_side = chi_fn.values;
  rep.smoothing_variance = v_minus;
  rep.smoothed_phi_side.resize(lambda_grid.size());
  for (std::size_t j = 0; j < lambda_grid.size(); ++j) {
    const double l = lambda_grid[j];
    rep.smoothed_phi_side[j] = phi_fn.values[j] * std::exp(-0.5 * l * l * v_minus);
    rep.max_difference =
        std::max(rep.max_difference, std::abs(rep.chi_side[j] - rep.smoothed_phi_side[j]));
  }
  return rep;
}

}  // namespace lcf
