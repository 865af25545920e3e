#include "pclna/kalman.hpp"

#include <cmath>
#include <limits>

namespace pclna {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

FilterResult failure(std::string why, long integrations = 0) {
  FilterResult r;
  r.loglik = kNegInf;
  r.ok = false;
  r.diagnostic = std::move(why);
  r.ode_integrations = integrations;
  return r;
}

void check_dims(const ObservationModel& obs, const PriorState& prior, const Trajectory& series,
                Eigen::Index n) {
  obs.validate(n);
  if (prior.mu0.size() != n || prior.sigma0.rows() != n || prior.sigma0.cols() != n) {
    throw std::invalid_argument("prior dimension does not match the network");
  }
  if (series.states.cols() != obs.B.rows()) {
    throw std::invalid_argument("series has " + std::to_string(series.states.cols()) +
                                " columns but the observation model has " +
                                std::to_string(obs.B.rows()) + " rows");
  }
  if (series.times.empty() || static_cast<Eigen::Index>(series.times.size()) != series.states.rows()) {
    throw std::invalid_argument("series times and states do not match");
  }
}

}  // namespace

ObservationModel ObservationModel::select(const ReactionNetwork& net,
                                          const std::vector<std::string>& observed,
                                          double variance) {
  if (observed.empty()) throw std::invalid_argument("no observed species");
  ObservationModel obs;
  const auto q = static_cast<Eigen::Index>(observed.size());
  obs.B = Mat::Zero(q, net.n_species());
  for (Eigen::Index i = 0; i < q; ++i) {
    auto idx = net.species_index(observed[static_cast<std::size_t>(i)]);
    if (!idx) throw std::invalid_argument("unknown observed species '" + observed[static_cast<std::size_t>(i)] + "'");
    obs.B(i, *idx) = 1.0;
  }
  obs.sigma_e = variance * Mat::Identity(q, q);
  return obs;
}

void ObservationModel::validate(Eigen::Index n) const {
  if (B.cols() != n) throw std::invalid_argument("observation matrix has wrong number of columns");
  if (B.rows() < 1 || B.rows() > n) throw std::invalid_argument("observation matrix must have 1..n rows");
  if (sigma_e.rows() != B.rows() || sigma_e.cols() != B.rows()) {
    throw std::invalid_argument("measurement covariance has wrong size");
  }
}

Conditioned condition_on_observation(const Vec& mu, const Mat& sigma, const ObservationModel& obs,
                                     const Vec& y) {
  Conditioned out;
  const Vec mu_y = obs.B * mu;
  const Mat sb = sigma * obs.B.transpose();
  Mat sigma_y = obs.B * sb + obs.sigma_e;
  symmetrize(sigma_y);
  const auto q = static_cast<double>(y.size());

  Eigen::LLT<Mat> llt(sigma_y);
  if (llt.info() != Eigen::Success) {
    sigma_y.diagonal().array() += 1e-10 * std::abs(sigma_y.trace());
    llt.compute(sigma_y);
  }
  if (llt.info() != Eigen::Success) {
    out.ok = false;
    return out;
  }
  const Mat& L = llt.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    if (!(L(i, i) > 0.0)) {
      out.ok = false;
      return out;
    }
    log_det += 2.0 * std::log(L(i, i));
  }
  const Vec resid = y - mu_y;
  const Vec z = llt.matrixL().solve(resid);
  out.log_density = -0.5 * (q * std::log(2.0 * M_PI) + log_det + z.squaredNorm());

  // gain K = sigma B^T sigma_y^{-1}
  const Mat gain_t = llt.solve(sb.transpose());
  out.mu = mu + gain_t.transpose() * resid;
  out.cov = sigma - sb * gain_t;
  symmetrize(out.cov);
  out.ok = std::isfinite(out.log_density) && out.mu.allFinite() && out.cov.allFinite();
  return out;
}

Mat transversal_conditional(const Mat& sigma, const TransversalBasis& basis) {
  const Vec se1 = sigma * basis.e1;
  const double s11 = basis.e1.dot(se1);
  const Vec s12 = basis.E2.transpose() * se1;
  Mat s22 = basis.E2.transpose() * sigma * basis.E2;
  if (s11 > 1e-14 * std::abs(sigma.trace())) s22 -= s12 * s12.transpose() / s11;
  Mat out = basis.E2 * s22 * basis.E2.transpose();
  symmetrize(out);
  return out;
}

FilterResult pclna_loglik(const LimitCycleBundle& lc, const ObservationModel& obs,
                          const PriorState& prior, const Trajectory& series,
                          std::optional<double> s_init) {
  const auto n = lc.dim();
  check_dims(obs, prior, series, n);
  const double omega = lc.network().omega();
  const double root = std::sqrt(omega);
  FilterResult res;
  Vec mu = prior.mu0;
  Mat sigma = prior.sigma0;
  std::optional<double> hint = s_init;
  Mat C, V;
  Vec phi;
  try {
    for (std::size_t i = 0; i < series.times.size(); ++i) {
      const Conditioned post =
          condition_on_observation(mu, sigma, obs, series.states.row(static_cast<Eigen::Index>(i)).transpose());
      if (!post.ok) return failure("observation covariance not positive definite at index " + std::to_string(i));
      res.loglik += post.log_density;
      if (i + 1 == series.times.size()) break;

      const PhaseCorrection pc = phase_correct(lc, post.mu, hint);
      const Mat sigma_perp = transversal_conditional(post.cov, pc.basis);
      const double dt = series.times[i + 1] - series.times[i];
      lc.transition(pc.s_star, dt, C, V);
      lc.phi(pc.s_star + dt, phi);
      mu = omega * phi + root * (C * pc.kappa);
      sigma = C * sigma_perp * C.transpose() + omega * V;
      symmetrize(sigma);
      hint = lc.wrap(pc.s_star + dt);
      if (!mu.allFinite() || !sigma.allFinite()) return failure("non-finite prediction at index " + std::to_string(i + 1));
    }
  } catch (const NumericalError& e) {
    return failure(e.what());
  }
  if (!std::isfinite(res.loglik)) return failure("non-finite log-likelihood");
  return res;
}

FilterResult lna_loglik(const LnaPath& path, double omega, const ObservationModel& obs,
                        const PriorState& prior, const Trajectory& series, double s_start) {
  const auto n = path.dim();
  check_dims(obs, prior, series, n);
  FilterResult res;
  Vec mu = prior.mu0;
  Mat sigma = prior.sigma0;
  Mat C, V;
  Vec phi0, phi1;
  try {
    for (std::size_t i = 0; i < series.times.size(); ++i) {
      const Conditioned post =
          condition_on_observation(mu, sigma, obs, series.states.row(static_cast<Eigen::Index>(i)).transpose());
      if (!post.ok) return failure("observation covariance not positive definite at index " + std::to_string(i));
      res.loglik += post.log_density;
      if (i + 1 == series.times.size()) break;

      const double s = s_start + series.times[i] - series.times.front();
      const double dt = series.times[i + 1] - series.times[i];
      path.transition(s, dt, C, V);
      path.phi(s, phi0);
      path.phi(s + dt, phi1);
      mu = omega * phi1 + C * (post.mu - omega * phi0);
      sigma = C * post.cov * C.transpose() + omega * V;
      symmetrize(sigma);
      if (!mu.allFinite() || !sigma.allFinite()) return failure("non-finite prediction at index " + std::to_string(i + 1));
    }
  } catch (const NumericalError& e) {
    return failure(e.what());
  }
  if (!std::isfinite(res.loglik)) return failure("non-finite log-likelihood");
  return res;
}

FilterResult restart_loglik(const ReactionNetwork& net, const Vec& theta,
                            const ObservationModel& obs, const PriorState& prior,
                            const Trajectory& series, const OdeOptions& options) {
  const auto n = net.n_species();
  check_dims(obs, prior, series, n);
  const double omega = net.omega();
  FilterResult res;
  Vec mu = prior.mu0;
  Mat sigma = prior.sigma0;
  try {
    for (std::size_t i = 0; i < series.times.size(); ++i) {
      const Conditioned post =
          condition_on_observation(mu, sigma, obs, series.states.row(static_cast<Eigen::Index>(i)).transpose());
      if (!post.ok) return failure("observation covariance not positive definite at index " + std::to_string(i), res.ode_integrations);
      res.loglik += post.log_density;
      if (i + 1 == series.times.size()) break;

      const double dt = series.times[i + 1] - series.times[i];
      const LnaStep st = integrate_lna(net, theta, post.mu / omega, dt, options);
      ++res.ode_integrations;
      mu = omega * st.phi;
      sigma = st.C * post.cov * st.C.transpose() + omega * st.V;
      symmetrize(sigma);
      if (!mu.allFinite() || !sigma.allFinite()) return failure("non-finite prediction at index " + std::to_string(i + 1), res.ode_integrations);
    }
  } catch (const NumericalError& e) {
    return failure(e.what(), res.ode_integrations);
  }
  if (!std::isfinite(res.loglik)) return failure("non-finite log-likelihood", res.ode_integrations);
  return res;
}

Backend parse_backend(std::string_view name) {
  if (name == "pclna") return Backend::pclna;
  if (name == "lna") return Backend::lna;
  if (name == "restart") return Backend::restart;
  throw std::invalid_argument("unknown likelihood backend '" + std::string(name) + "' (pclna|lna|restart)");
}

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::pclna:
      return "pclna";
    case Backend::lna:
      return "lna";
    case Backend::restart:
      return "restart";
  }
  return "?";
}

FilterResult multi_series_loglik(Backend backend, const LimitCycleBundle* lc,
                                 const ReactionNetwork& net, const Vec& theta,
                                 const ObservationModel& obs, const PriorState& prior,
                                 const Dataset& data, const OdeOptions& restart_options) {
  FilterResult total;
  std::optional<double> s0;
  if (backend != Backend::restart) {
    if (!lc) throw std::invalid_argument("backend needs a limit-cycle bundle");
    try {
      s0 = phase(*lc, prior.mu0 / lc->network().omega());
    } catch (const NumericalError& e) {
      return failure(e.what());
    }
  }
  for (const Trajectory& series : data) {
    FilterResult r;
    switch (backend) {
      case Backend::pclna:
        r = pclna_loglik(*lc, obs, prior, series, s0);
        break;
      case Backend::lna:
        r = lna_loglik(*lc, lc->network().omega(), obs, prior, series, *s0);
        break;
      case Backend::restart:
        r = restart_loglik(net, theta, obs, prior, series, restart_options);
        break;
    }
    total.ode_integrations += r.ode_integrations;
    if (!r.ok) {
      r.ode_integrations = total.ode_integrations;
      r.diagnostic = "series " + std::to_string(series.series_id) + ": " + r.diagnostic;
      return r;
    }
    total.loglik += r.loglik;
  }
  return total;
}

}  // namespace pclna
