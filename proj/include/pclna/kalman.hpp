#pragma once

#include "pclna/phase.hpp"
#include "pclna/ssa.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pclna {

/// y_i = B x_i + eps_i, eps_i ~ N(0, sigma_e).
struct ObservationModel {
  Mat B;
  Mat sigma_e;

  /// Rows of B select the named species; sigma_e = variance * I.
  static ObservationModel select(const ReactionNetwork& net, const std::vector<std::string>& observed,
                                 double variance);
  void validate(Eigen::Index n) const;
};

/// Prior of x at the first observation time (count units).
struct PriorState {
  Vec mu0;
  Mat sigma0;
};

struct FilterResult {
  double loglik = 0.0;
  bool ok = true;
  std::string diagnostic;
  long ode_integrations = 0;
};

/// Filter steps shared by every variant. Exposed for testing.
struct Conditioned {
  Vec mu;   // posterior mean
  Mat cov;  // posterior covariance
  double log_density = 0.0;
  bool ok = true;
};

/// Marginal log N(y | B mu, B sigma B^T + sigma_e) and the Gaussian update.
Conditioned condition_on_observation(const Vec& mu, const Mat& sigma, const ObservationModel& obs,
                                     const Vec& y);

/// Covariance conditioned on the tangential coordinate along e1, expressed
/// back in the original coordinates (E2 Sigma_{22|1} E2^T).
Mat transversal_conditional(const Mat& sigma, const TransversalBasis& basis);

/// pcLNA Kalman filter. `s_init` is a phase hint for the first observation;
/// without it the first phase is found by grid search.
FilterResult pclna_loglik(const LimitCycleBundle& lc, const ObservationModel& obs,
                          const PriorState& prior, const Trajectory& series,
                          std::optional<double> s_init = std::nullopt);

/// LNA Kalman filter without phase correction. The prior mean sits at path
/// time s_start for the first observation; the path time advances with the
/// observation times.
FilterResult lna_loglik(const LnaPath& path, double omega, const ObservationModel& obs,
                        const PriorState& prior, const Trajectory& series, double s_start = 0.0);

/// Restarting LNA filter: the ODEs for phi, C, V are re-integrated from the
/// posterior mean over every inter-observation interval.
FilterResult restart_loglik(const ReactionNetwork& net, const Vec& theta,
                            const ObservationModel& obs, const PriorState& prior,
                            const Trajectory& series, const OdeOptions& options = {});

enum class Backend { pclna, lna, restart };

Backend parse_backend(std::string_view name);
std::string_view to_string(Backend b);

/// Sum of per-series log-likelihoods. `lc` is required for the pclna and lna
/// backends and ignored for restart.
FilterResult multi_series_loglik(Backend backend, const LimitCycleBundle* lc,
                                 const ReactionNetwork& net, const Vec& theta,
                                 const ObservationModel& obs, const PriorState& prior,
                                 const Dataset& data, const OdeOptions& restart_options = {});

}  // namespace pclna
