#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>

namespace pclna {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when a computation cannot produce a finite, well-defined result
/// (non-finite rates, integrator underflow, covariance beyond repair).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void symmetrize(Mat& m) { m = 0.5 * (m + m.transpose()).eval(); }

/// Clips eigenvalues in (-rel_tol * max(trace, scale), 0) to zero. Anything more
/// negative is a genuine failure and throws NumericalError. Pass the magnitude of
/// the terms when m is a difference.
void repair_psd(Mat& m, double rel_tol = 1e-8, double scale = 0.0);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Mat& m);

/// Log-density of N(x | mean, cov). Uses a Cholesky factor; on failure adds
/// 1e-10 * trace to the diagonal once. Returns nullopt if the covariance is
/// still not positive definite.
std::optional<double> mvn_logpdf(const Vec& x, const Vec& mean, const Mat& cov);

/// A matrix square root L with L * L^T = cov for symmetric PSD input.
/// Tries Cholesky first, falls back to a clipped eigen-decomposition.
Mat psd_sqrt(const Mat& cov);

}  // namespace pclna
