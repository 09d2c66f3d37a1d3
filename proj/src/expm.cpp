#include "lcf/expm.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "lcf/errors.hpp"

namespace lcf {

Eigen::MatrixXcd unitary_exp_dense(const Eigen::MatrixXcd& H, double s) {
  const Eigen::MatrixXcd A = std::complex<double>(0.0, s) * H;
  return A.exp();
}

Eigen::VectorXcd unitary_exp_krylov(const SparseC& H, double s, const Eigen::VectorXcd& x,
                                    double tol, int max_dim) {
  const double xnorm = x.norm();
  if (xnorm == 0.0) return x;
  const long n = x.size();

  std::vector<Eigen::VectorXcd> basis;
  std::vector<double> alpha, beta;  // Lanczos tridiagonal
  basis.push_back(x / xnorm);

  auto small_exp_first_col = [&](int m) {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alpha[std::size_t(i)];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[std::size_t(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const Eigen::VectorXd& d = es.eigenvalues();
    const Eigen::MatrixXd& U = es.eigenvectors();
    Eigen::VectorXcd col(m);
    for (int i = 0; i < m; ++i) {
      std::complex<double> acc{0.0, 0.0};
      for (int j = 0; j < m; ++j) {
        const std::complex<double> ph{std::cos(s * d(j)), std::sin(s * d(j))};
        acc += U(i, j) * ph * U(0, j);
      }
      col(i) = acc;
    }
    return col;
  };

  for (int m = 1; m <= max_dim; ++m) {
    Eigen::VectorXcd w = H * basis.back();
    const double a = std::real(basis.back().dot(w));
    alpha.push_back(a);
    w -= a * basis.back();
    if (m >= 2) w -= beta[std::size_t(m - 2)] * basis[std::size_t(m - 2)];
    // Full reorthogonalization keeps the tiny residuals the characteristic
    // function tolerances require.
    for (const auto& v : basis) w -= v.dot(w) * v;
    const double b = w.norm();

    const Eigen::VectorXcd col = small_exp_first_col(m);
    const double happy = b < 1e-14 * xnorm ? 0.0 : b * std::abs(col(m - 1)) * std::abs(s);
    if (happy <= tol || b < 1e-14 * xnorm || m == max_dim) {
      if (happy > tol && m == max_dim)
        throw ConvergenceError("Krylov propagator did not reach tolerance at max dimension");
      Eigen::VectorXcd y = Eigen::VectorXcd::Zero(n);
      for (int i = 0; i < m; ++i) y += col(i) * basis[std::size_t(i)];
      return xnorm * y;
    }
    beta.push_back(b);
    basis.push_back(w / b);
  }
  throw ConvergenceError("Krylov propagator failed");  // unreachable
}

}  // namespace lcf
