#include "pclna/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pclna {

void repair_psd(Mat& m, double rel_tol, double scale) {
  symmetrize(m);
  if (Eigen::LLT<Mat>(m).info() == Eigen::Success) return;
  const double tr = std::abs(m.trace());
  const double ref = std::max(tr, scale);
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  const Vec& ev = es.eigenvalues();
  if (ev.minCoeff() >= 0.0) return;
  if (ev.minCoeff() < -rel_tol * ref) {
    throw NumericalError("covariance is not positive semi-definite (min eigenvalue " +
                         std::to_string(ev.minCoeff()) + ", trace " + std::to_string(tr) + ")");
  }
  Vec clipped = ev.cwiseMax(0.0);
  m = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  symmetrize(m);
}

double min_eigenvalue(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

std::optional<double> mvn_logpdf(const Vec& x, const Vec& mean, const Mat& cov) {
  const auto k = static_cast<double>(x.size());
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) {
    Mat jittered = cov;
    jittered.diagonal().array() += 1e-10 * std::abs(cov.trace());
    llt.compute(jittered);
    if (llt.info() != Eigen::Success) return std::nullopt;
  }
  const Mat& l = llt.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0)) return std::nullopt;
    log_det += 2.0 * std::log(l(i, i));
  }
  const Vec z = llt.matrixL().solve(x - mean);
  const double value = -0.5 * (k * std::log(2.0 * std::numbers::pi) + log_det + z.squaredNorm());
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

Mat psd_sqrt(const Mat& cov) {
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

}  // namespace pclna
