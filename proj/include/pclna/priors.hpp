#pragma once

#include "pclna/linalg.hpp"
#include "pclna/sensitivity.hpp"

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace pclna {

enum class PriorFamily { gamma, inverse_gamma, flat, uniform };

/// Gamma and InverseGamma use the shape-rate convention: Gamma(a, b) has
/// mean a / b. `flat` is the improper constant density; `uniform(lo, hi)`.
struct Prior {
  PriorFamily family = PriorFamily::flat;
  double a = 0.0;
  double b = 0.0;

  double log_density(double x) const;
  std::string describe() const;

  /// Parses "gamma(1, 10)", "inverse_gamma(0.001, 0.001)", "flat", "uniform(0, 5)".
  static Prior parse(std::string_view text);
};

using PriorSpec = std::vector<Prior>;

double log_prior(const PriorSpec& priors, const Vec& theta);

using LogLikFn = std::function<double(const Vec& theta)>;

/// Log posterior in sampling space. With scale = log, theta = exp(psi) and the
/// Jacobian sum(psi) is added. Returns -inf outside the prior support or when
/// the log-likelihood is not finite.
double log_posterior(const LogLikFn& loglik, const PriorSpec& priors, const Vec& psi, Scale scale);

Vec to_raw(const Vec& psi, Scale scale);
Vec to_sampling(const Vec& theta, Scale scale);

}  // namespace pclna
