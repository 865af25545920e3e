#pragma once

#include "pclna/linalg.hpp"
#include "pclna/sensitivity.hpp"

#include <string>
#include <vector>

namespace pclna {

struct EssResult {
  double ess = 0.0;
  bool constant = false;         // zero variance: ess = 0
  bool super_efficient = false;  // ess > n (negatively correlated chain)
};

/// Effective sample size with Geyer's initial positive (and monotone)
/// sequence estimator of the integrated autocorrelation time.
EssResult ess(const std::vector<double>& chain);

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double cov = 0.0;  // sd / mean
  EssResult ess;
};

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double p);

/// Posterior summaries on the raw scale (samples in sampling space are
/// back-transformed when scale = log). Rows of `samples` are draws.
std::vector<ParamSummary> summarize(const Mat& samples, const std::vector<std::string>& names,
                                    double alpha = 0.05, Scale scale = Scale::raw);

}  // namespace pclna
