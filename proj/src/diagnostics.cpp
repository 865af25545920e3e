#include "pclna/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pclna {

EssResult ess(const std::vector<double>& chain) {
  const auto n = chain.size();
  if (n < 10) throw std::invalid_argument("ESS needs at least 10 samples");
  EssResult out;
  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = chain[i] - mean;
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += c[i] * c[i + lag];
    return s / static_cast<double>(n);
  };
  const double var = autocov(0);
  if (!(var > 1e-300 * (1.0 + mean * mean))) {
    out.constant = true;
    return out;
  }
  // Gamma_k = rho_{2k} + rho_{2k+1}; Gamma_0 is always kept.
  double sum = 0.0;
  double prev = INFINITY;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double gamma = (autocov(2 * k) + autocov(2 * k + 1)) / var;
    if (k > 0 && gamma <= 0.0) break;
    gamma = std::min(gamma, prev);
    prev = gamma;
    sum += gamma;
  }
  const double nd = static_cast<double>(n);
  const double tau = std::max(-1.0 + 2.0 * sum, 1.0 / std::log10(nd));
  out.ess = nd / tau;
  out.super_efficient = out.ess > nd;
  return out;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<ParamSummary> summarize(const Mat& samples, const std::vector<std::string>& names,
                                    double alpha, Scale scale) {
  if (static_cast<Eigen::Index>(names.size()) != samples.cols()) {
    throw std::invalid_argument("one name per sample column required");
  }
  if (samples.rows() < 10) throw std::invalid_argument("too few samples to summarize");
  std::vector<ParamSummary> out;
  for (Eigen::Index k = 0; k < samples.cols(); ++k) {
    std::vector<double> v(static_cast<std::size_t>(samples.rows()));
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      v[static_cast<std::size_t>(i)] = scale == Scale::log ? std::exp(samples(i, k)) : samples(i, k);
    }
    ParamSummary s;
    s.name = names[static_cast<std::size_t>(k)];
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    s.mean = mean;
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    s.cov = s.sd == 0.0 ? 0.0 : s.sd / mean;
    s.ci_low = quantile(v, alpha / 2.0);
    s.ci_high = quantile(v, 1.0 - alpha / 2.0);
    s.ess = ess(v);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace pclna
