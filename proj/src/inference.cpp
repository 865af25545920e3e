#include "pclna/inference.hpp"

#include "pclna/io.hpp"

#include <cmath>
#include <ctime>
#include <algorithm>
#include <limits>

namespace pclna {

void CallTimer::record(double seconds) {
  const double us = seconds * 1e6;
  int bin = us < 1.0 ? 0 : static_cast<int>(std::floor(std::log2(us)));
  bin = std::clamp(bin, 0, kBins - 1);
  bins_[static_cast<std::size_t>(bin)].fetch_add(1);
  calls_.fetch_add(1);
  total_ns_.fetch_add(static_cast<long long>(seconds * 1e9));
}

std::array<long, CallTimer::kBins> CallTimer::histogram() const {
  std::array<long, kBins> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bins_[i].load();
  return out;
}

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

InferenceProblem::InferenceProblem(const InferConfig& config, ReactionNetwork net, Dataset data)
    : config_(config),
      net_(std::move(net)),
      data_(std::move(data)),
      timer_(std::make_unique<CallTimer>()),
      ode_integrations_(std::make_unique<std::atomic<long>>(0)) {
  base_theta_ = net_.parameter_values();
  for (const auto& [name, value] : config_.fixed) {
    auto idx = net_.parameter_index(name);
    if (!idx) throw std::invalid_argument("[fixed] names unknown parameter '" + name + "'");
    base_theta_(*idx) = value;
  }
  for (const auto& name : config_.estimate) {
    if (name == "sigma") {
      index_.push_back(-1);
      continue;
    }
    auto idx = net_.parameter_index(name);
    if (!idx) throw std::invalid_argument("[estimate] names unknown parameter '" + name + "'");
    index_.push_back(*idx);
  }
  for (const auto& [name, value] : config_.initial) {
    if (name != "sigma" && !net_.parameter_index(name)) {
      throw std::invalid_argument("[initial] names unknown parameter '" + name + "'");
    }
  }
  if (config_.prior_mean_mode == PriorMeanMode::explicit_values &&
      config_.prior_mean.size() != net_.n_species()) {
    throw std::invalid_argument("[prior_state] mean needs one value per species");
  }
  if (config_.scale == Scale::log) {
    for (std::size_t k = 0; k < index_.size(); ++k) {
      if (index_[k] >= 0 && !net_.parameters()[static_cast<std::size_t>(index_[k])].constrained) {
        throw std::invalid_argument("log scale needs positive parameters; '" + config_.estimate[k] +
                                    "' is unconstrained");
      }
    }
  }
}

InferenceProblem InferenceProblem::from_config(const InferConfig& config) {
  ReactionNetwork net = load_model(config.model_path);
  std::vector<std::string> columns;
  Dataset raw = parse_data_csv(read_file(config.data_path), &columns);
  if (raw.empty()) throw std::invalid_argument("data file has no rows");
  return InferenceProblem(config, std::move(net), select_columns(raw, columns, config.observed));
}

Vec InferenceProblem::full_theta(const Vec& estimated) const {
  Vec theta = base_theta_;
  for (std::size_t k = 0; k < index_.size(); ++k) {
    if (index_[k] >= 0) theta(index_[k]) = estimated(static_cast<Eigen::Index>(k));
  }
  return theta;
}

double InferenceProblem::sigma(const Vec& estimated) const {
  for (std::size_t k = 0; k < index_.size(); ++k) {
    if (index_[k] < 0) return estimated(static_cast<Eigen::Index>(k));
  }
  return config_.sigma;
}

Vec InferenceProblem::initial_point() const {
  Vec init(static_cast<Eigen::Index>(index_.size()));
  for (std::size_t k = 0; k < index_.size(); ++k) {
    const auto& name = config_.estimate[k];
    auto it = config_.initial.find(name);
    if (it != config_.initial.end()) {
      init(static_cast<Eigen::Index>(k)) = it->second;
    } else if (index_[k] >= 0) {
      init(static_cast<Eigen::Index>(k)) = base_theta_(index_[k]);
    } else {
      init(static_cast<Eigen::Index>(k)) = config_.sigma;
    }
  }
  return init;
}

double InferenceProblem::loglik(const Vec& estimated, FilterResult* info) const {
  const double start = thread_cpu_seconds();
  FilterResult result;
  try {
    const Vec theta = full_theta(estimated);
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      if (net_.parameters()[static_cast<std::size_t>(k)].constrained && !(theta(k) > 0.0)) {
        throw NumericalError("parameter outside its domain");
      }
    }
    const double var = sigma(estimated);
    if (!(var >= 0.0)) throw NumericalError("negative measurement variance");
    const ObservationModel obs = ObservationModel::select(net_, config_.observed, var);
    const double omega = net_.omega();

    std::optional<LimitCycleBundle> lc;
    const bool need_cycle = config_.backend != Backend::restart || config_.prior_mean_mode == PriorMeanMode::cycle;
    if (need_cycle) {
      CycleOptions co;
      co.burn_in = config_.cycle_burn_in;
      co.search_time = config_.cycle_search;
      co.ode = config_.ode;
      Vec guess = config_.prior_mean_mode == PriorMeanMode::explicit_values
                      ? Vec(config_.prior_mean / omega)
                      : net_.initial_concentrations();
      lc.emplace(find_limit_cycle(net_, theta, guess, co));
    }
    PriorState prior;
    switch (config_.prior_mean_mode) {
      case PriorMeanMode::cycle:
        prior.mu0 = omega * lc->anchor();
        break;
      case PriorMeanMode::initial:
        prior.mu0 = omega * net_.initial_concentrations();
        break;
      case PriorMeanMode::explicit_values:
        prior.mu0 = config_.prior_mean;
        break;
    }
    prior.sigma0 = config_.prior_variance * Mat::Identity(net_.n_species(), net_.n_species());
    result = multi_series_loglik(config_.backend, lc ? &*lc : nullptr, net_, theta, obs, prior,
                                 data_, config_.ode);
  } catch (const NumericalError& e) {
    result.loglik = -std::numeric_limits<double>::infinity();
    result.ok = false;
    result.diagnostic = e.what();
  }
  ode_integrations_->fetch_add(result.ode_integrations);
  timer_->record(thread_cpu_seconds() - start);
  const double value = result.ok ? result.loglik : -std::numeric_limits<double>::infinity();
  if (info) *info = std::move(result);
  return value;
}

}  // namespace pclna
