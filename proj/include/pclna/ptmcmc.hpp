#pragma once

#include "pclna/linalg.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace pclna {

struct PtConfig {
  std::vector<double> betas{1.0};
  int n_iter = 50;     // Metropolis steps per chain between swap attempts
  int n_swaps = 600;   // swap attempts (blocks)
  int n_adapt = 200;   // blocks with proposal adaptation
  double adapt_low = 0.2;
  double adapt_high = 0.3;
  double adapt_factor = 0.2;
  int freeze_window = 50;  // blocks averaged when adaptation stops
  long burn_in = 10000;    // beta = 1 iterations dropped
  bool thin_to_block_ends = false;
  std::uint64_t seed = 1;
  int threads = 1;
  std::optional<Mat> initial_cov;  // default diag((0.01 |psi| + 1e-4)^2)

  void validate() const;
};

/// Log target in sampling space; -inf marks the rejected region.
using TargetFn = std::function<double(const Vec& psi)>;

struct ChainTrace {
  double beta = 1.0;
  Mat states;                    // one row per iteration (sampling space)
  std::vector<double> energies;  // E = -log target
  std::vector<double> block_acceptance;
  std::vector<double> block_scale;  // covariance multiplier used in each block
  Mat final_cov;
  long accepted = 0;
};

struct PtResult {
  Mat samples;                   // kept beta = 1 iterations
  std::vector<double> energies;  // matching energies
  std::vector<long> sample_iter; // iteration index of each kept sample
  std::vector<ChainTrace> chains;
  std::vector<long> swap_attempts;  // pair (j-1, j) at index j-1
  std::vector<long> swap_accepts;
  long target_evaluations = 0;
};

/// Probability of exchanging the states of temperatures j-1 and j:
/// min(1, exp((beta_j - beta_{j-1}) (E_j - E_{j-1}))).
double swap_probability(double beta_prev, double beta, double energy_prev, double energy);

/// Parallel-tempered adaptive random-walk Metropolis. Each chain owns its
/// generator stream; swap decisions use a separate stream.
PtResult pt_run(const TargetFn& target, const Vec& init, const PtConfig& config);

}  // namespace pclna
