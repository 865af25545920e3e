#include "pclna/ptmcmc.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace pclna {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), id};
  return std::mt19937_64(seq);
}

struct Chain {
  double beta;
  Vec psi;
  double energy;
  Mat base_cov;
  double scale = 1.0;
  Mat chol;
  std::mt19937_64 rng;
  long block_accepts = 0;
  ChainTrace trace;
  long evaluations = 0;

  void refresh_chol() {
    const Mat cov = scale * base_cov;
    chol = psd_sqrt(cov);
  }
};

void run_block(Chain& c, const TargetFn& target, int n_iter, long first_row) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto d = c.psi.size();
  Vec z(d);
  c.block_accepts = 0;
  for (int it = 0; it < n_iter; ++it) {
    for (Eigen::Index i = 0; i < d; ++i) z(i) = normal(c.rng);
    const Vec proposal = c.psi + c.chol * z;
    const double u = unif(c.rng);
    const double lt = target(proposal);
    ++c.evaluations;
    const double e_new = std::isfinite(lt) ? -lt : kInf;
    if (e_new < kInf) {
      const double log_alpha = -c.beta * (e_new - c.energy);
      if (log_alpha >= 0.0 || std::log(u) < log_alpha) {
        c.psi = proposal;
        c.energy = e_new;
        ++c.block_accepts;
      }
    }
    c.trace.states.row(first_row + it) = c.psi.transpose();
    c.trace.energies[static_cast<std::size_t>(first_row + it)] = c.energy;
  }
  c.trace.accepted += c.block_accepts;
}

}  // namespace

void PtConfig::validate() const {
  if (betas.empty() || betas.front() != 1.0) throw std::invalid_argument("temperature ladder must start at beta = 1");
  for (std::size_t j = 1; j < betas.size(); ++j) {
    if (!(betas[j] < betas[j - 1]) || !(betas[j] > 0.0)) {
      throw std::invalid_argument("betas must be strictly decreasing and positive");
    }
  }
  if (n_iter < 1 || n_swaps < 1) throw std::invalid_argument("n_iter and n_swaps must be >= 1");
  if (n_adapt < 0 || n_adapt > n_swaps) throw std::invalid_argument("n_adapt must be in [0, n_swaps]");
  if (!(adapt_factor > 0.0 && adapt_factor < 1.0)) throw std::invalid_argument("adapt_factor must be in (0, 1)");
  if (!(adapt_low <= adapt_high)) throw std::invalid_argument("adaptation band is empty");
  if (freeze_window < 1) throw std::invalid_argument("freeze_window must be >= 1");
  if (burn_in < 0) throw std::invalid_argument("burn_in must be >= 0");
}

double swap_probability(double beta_prev, double beta, double energy_prev, double energy) {
  const double x = (beta - beta_prev) * (energy - energy_prev);
  if (std::isnan(x)) return energy == energy_prev ? 1.0 : 0.0;
  return x >= 0.0 ? 1.0 : std::exp(x);
}

PtResult pt_run(const TargetFn& target, const Vec& init, const PtConfig& config) {
  config.validate();
  const double t0 = target(init);
  if (!std::isfinite(t0)) throw std::invalid_argument("initial point outside support");
  const auto d = init.size();
  const auto J = config.betas.size();
  const long total = static_cast<long>(config.n_swaps) * config.n_iter;

  Mat cov0;
  if (config.initial_cov) {
    cov0 = *config.initial_cov;
    if (cov0.rows() != d || cov0.cols() != d) throw std::invalid_argument("initial covariance has wrong size");
  } else {
    cov0 = ((0.01 * init.array().abs() + 1e-4).square()).matrix().asDiagonal();
  }

  std::vector<Chain> chains;
  chains.reserve(J);
  for (std::size_t j = 0; j < J; ++j) {
    Chain c{config.betas[j], init, -t0, cov0, 1.0, Mat(), stream(config.seed, static_cast<std::uint32_t>(j + 1)), 0, {}, 0};
    c.refresh_chol();
    c.trace.beta = c.beta;
    c.trace.states.resize(total, d);
    c.trace.energies.resize(static_cast<std::size_t>(total));
    chains.push_back(std::move(c));
  }
  std::mt19937_64 swap_rng = stream(config.seed, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  PtResult res;
  res.swap_attempts.assign(J > 0 ? J - 1 : 0, 0);
  res.swap_accepts.assign(res.swap_attempts.size(), 0);
  res.target_evaluations = 1;

  for (int block = 0; block < config.n_swaps; ++block) {
    const long row = static_cast<long>(block) * config.n_iter;
    if (config.threads > 1 && J > 1) {
      std::vector<std::thread> pool;
      for (auto& c : chains) pool.emplace_back([&c, &target, &config, row] { run_block(c, target, config.n_iter, row); });
      for (auto& t : pool) t.join();
    } else {
      for (auto& c : chains) run_block(c, target, config.n_iter, row);
    }

    // swaps, hottest pair first
    for (std::size_t j = J; j-- > 1;) {
      Chain& hot = chains[j];
      Chain& cold = chains[j - 1];
      const double p = swap_probability(cold.beta, hot.beta, cold.energy, hot.energy);
      ++res.swap_attempts[j - 1];
      if (unif(swap_rng) < p) {
        std::swap(hot.psi, cold.psi);
        std::swap(hot.energy, cold.energy);
        ++res.swap_accepts[j - 1];
      }
    }

    for (auto& c : chains) {
      const double rate = static_cast<double>(c.block_accepts) / config.n_iter;
      c.trace.block_acceptance.push_back(rate);
      c.trace.block_scale.push_back(c.scale);
      if (block < config.n_adapt) {
        if (rate < config.adapt_low) c.scale *= 1.0 - config.adapt_factor;
        if (rate > config.adapt_high) c.scale *= 1.0 + config.adapt_factor;
        if (block + 1 == config.n_adapt) {
          const auto& h = c.trace.block_scale;
          const auto w = std::min<std::size_t>(static_cast<std::size_t>(config.freeze_window), h.size());
          double mean = 0.0;
          for (std::size_t i = h.size() - w; i < h.size(); ++i) mean += h[i];
          c.scale = mean / static_cast<double>(w);
        }
        c.refresh_chol();
      }
    }
  }

  for (auto& c : chains) {
    res.target_evaluations += c.evaluations;
    c.trace.final_cov = c.scale * c.base_cov;
  }
  const ChainTrace& cold = chains.front().trace;
  std::vector<long> keep;
  for (long it = config.burn_in; it < total; ++it) {
    if (config.thin_to_block_ends && (it + 1) % config.n_iter != 0) continue;
    keep.push_back(it);
  }
  res.samples.resize(static_cast<Eigen::Index>(keep.size()), d);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    res.samples.row(static_cast<Eigen::Index>(i)) = cold.states.row(keep[i]);
    res.energies.push_back(cold.energies[static_cast<std::size_t>(keep[i])]);
  }
  res.sample_iter = std::move(keep);
  for (auto& c : chains) res.chains.push_back(std::move(c.trace));
  return res;
}

}  // namespace pclna
