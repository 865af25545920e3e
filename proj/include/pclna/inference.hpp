#pragma once

#include "pclna/config.hpp"

#include <array>
#include <atomic>
#include <memory>

namespace pclna {

/// CPU-time statistics of likelihood calls (thread CPU clock).
class CallTimer {
 public:
  static constexpr int kBins = 24;  // bin b: [2^b, 2^(b+1)) microseconds

  void record(double seconds);
  long calls() const { return calls_.load(); }
  double total_seconds() const { return static_cast<double>(total_ns_.load()) * 1e-9; }
  std::array<long, kBins> histogram() const;

 private:
  std::atomic<long> calls_{0};
  std::atomic<long long> total_ns_{0};
  std::array<std::atomic<long>, kBins> bins_{};
};

double thread_cpu_seconds();

/// The inference target assembled from a config: network, data, observation
/// model and the map from estimated parameters to the full theta.
class InferenceProblem {
 public:
  InferenceProblem(const InferConfig& config, ReactionNetwork net, Dataset data);

  static InferenceProblem from_config(const InferConfig& config);

  /// Estimated parameters (raw scale) -> log-likelihood; -inf on failure.
  double loglik(const Vec& estimated, FilterResult* info = nullptr) const;

  Vec full_theta(const Vec& estimated) const;
  double sigma(const Vec& estimated) const;
  Vec initial_point() const;  // raw scale
  const std::vector<std::string>& names() const { return config_.estimate; }
  const ReactionNetwork& network() const { return net_; }
  const Dataset& data() const { return data_; }
  const InferConfig& config() const { return config_; }
  const CallTimer& timer() const { return *timer_; }
  long ode_integrations() const { return ode_integrations_->load(); }

 private:
  InferConfig config_;
  ReactionNetwork net_;
  Dataset data_;
  Vec base_theta_;
  std::vector<int> index_;  // into theta, -1 for sigma
  std::unique_ptr<CallTimer> timer_;
  std::unique_ptr<std::atomic<long>> ode_integrations_;
};

}  // namespace pclna
