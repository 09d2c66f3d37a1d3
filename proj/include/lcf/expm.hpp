#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>

namespace lcf {

using SparseC = Eigen::SparseMatrix<std::complex<double>>;

/// exp(i s H) for Hermitian H, dense scaling-and-squaring (Pade) path.
Eigen::MatrixXcd unitary_exp_dense(const Eigen::MatrixXcd& H, double s);

/// y = exp(i s H) x for Hermitian sparse H via Lanczos with full
/// reorthogonalization; the Krylov dimension grows until the standard
/// a-posteriori bound drops below tol * |x|.
Eigen::VectorXcd unitary_exp_krylov(const SparseC& H, double s, const Eigen::VectorXcd& x,
                                    double tol = 1e-13, int max_dim = 160);

}  // namespace lcf
