#include "pclna/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pclna {

namespace {

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("simulation grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("simulation grid must be increasing");
  }
}

Vec draw(const Vec& mean, const Mat& cov, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vec z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  if (cov.size() == 0 || cov.isZero(0.0)) return mean;
  return mean + psd_sqrt(cov) * z;
}

struct Event {
  double t;
  bool record;
  bool correct;
};

std::vector<Event> merge_events(const std::vector<double>& grid, const std::vector<double>& corr) {
  std::vector<Event> ev;
  std::size_t i = 0, j = 0;
  while (i < grid.size() || j < corr.size()) {
    if (j == corr.size() || (i < grid.size() && grid[i] < corr[j])) {
      ev.push_back({grid[i++], true, false});
    } else if (i == grid.size() || corr[j] < grid[i]) {
      ev.push_back({corr[j++], false, true});
    } else {
      ev.push_back({grid[i++], true, true});
      ++j;
    }
  }
  return ev;
}

}  // namespace

std::vector<double> correction_times(const std::vector<double>& grid, double period,
                                     const PclnaSimOptions& options) {
  std::vector<double> out;
  if (!options.correct || grid.empty()) return out;
  if (options.corrections_per_cycle < 1) throw std::invalid_argument("corrections_per_cycle must be >= 1");
  const double gap_max = period / options.corrections_per_cycle;
  if (options.correct_at_observations) {
    out.push_back(grid.front());
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double gap = grid[i] - grid[i - 1];
      const auto pieces = static_cast<long>(std::ceil(gap / gap_max - 1e-12));
      for (long k = 1; k < pieces; ++k) {
        out.push_back(grid[i - 1] + gap * static_cast<double>(k) / static_cast<double>(pieces));
      }
      out.push_back(grid[i]);
    }
  } else {
    for (long k = 1;; ++k) {
      const double t = grid.front() + static_cast<double>(k) * gap_max;
      if (t > grid.back()) break;
      out.push_back(t);
    }
  }
  return out;
}

Trajectory simulate_pclna(const LimitCycleBundle& lc, const NoiseInit& xi0,
                          const std::vector<double>& grid, const PclnaSimOptions& options,
                          std::uint64_t seed) {
  if (!options.correct) {
    return simulate_lna(lc, lc.network().omega(), xi0, grid, seed, options.s0);
  }
  check_grid(grid);
  const auto n = lc.dim();
  const double omega = lc.network().omega();
  const double root = std::sqrt(omega);
  const auto events = merge_events(grid, correction_times(grid, lc.period(), options));

  std::mt19937_64 rng(seed);
  Trajectory traj;
  traj.times = grid;
  traj.states.resize(static_cast<Eigen::Index>(grid.size()), n);

  Vec xi = draw(xi0.mean, xi0.cov, rng);
  double s = lc.wrap(options.s0);
  double t = events.front().t;
  Mat C, V;
  Vec phi, x;
  Eigen::Index row = 0;
  for (const Event& e : events) {
    const double dt = e.t - t;
    if (dt > 0.0) {
      lc.transition(s, dt, C, V);
      xi = draw(C * xi, V, rng);
      s = lc.wrap(s + dt);
      t = e.t;
    }
    lc.phi(s, phi);
    x = omega * phi + root * xi;
    if (!x.allFinite()) throw NumericalError("non-finite state in pcLNA simulation");
    if (e.correct) {
      PhaseCorrection pc = phase_correct(lc, x, s);
      s = pc.s_star;
      xi = std::move(pc.kappa);
    }
    if (e.record) traj.states.row(row++) = x.transpose();
  }
  return traj;
}

Trajectory simulate_lna(const LnaPath& path, double omega, const NoiseInit& xi0,
                        const std::vector<double>& grid, std::uint64_t seed, double s0) {
  check_grid(grid);
  const auto n = path.dim();
  const double root = std::sqrt(omega);
  std::mt19937_64 rng(seed);
  Trajectory traj;
  traj.times = grid;
  traj.states.resize(static_cast<Eigen::Index>(grid.size()), n);
  Vec xi = draw(xi0.mean, xi0.cov, rng);
  Mat C, V;
  Vec phi;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0) {
      path.transition(s0 + grid[i - 1] - grid[0], grid[i] - grid[i - 1], C, V);
      xi = draw(C * xi, V, rng);
    }
    path.phi(s0 + grid[i] - grid[0], phi);
    traj.states.row(static_cast<Eigen::Index>(i)) = (omega * phi + root * xi).transpose();
  }
  return traj;
}

}  // namespace pclna
