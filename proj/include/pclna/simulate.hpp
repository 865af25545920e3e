#pragma once

#include "pclna/phase.hpp"
#include "pclna/ssa.hpp"

#include <cstdint>
#include <vector>

namespace pclna {

/// Distribution of the initial noise xi_0 (concentration-scaled units).
struct NoiseInit {
  Vec mean;
  Mat cov;

  static NoiseInit zero(Eigen::Index n) { return {Vec::Zero(n), Mat::Zero(n, n)}; }
};

struct PclnaSimOptions {
  int corrections_per_cycle = 4;
  bool correct = true;                  // false: plain LNA along the cycle
  bool correct_at_observations = true;  // false: correct only at t0 + k period / corrections_per_cycle
  double s0 = 0.0;                      // phase at the first grid time
};

/// pcLNA forward simulation. States x = omega phi(s) + sqrt(omega) xi at the
/// grid times. Between events xi follows xi' = C xi + eta, eta ~ N(0, V); at
/// correction times the phase is reset to the closest cycle point and xi to
/// the projected noise kappa.
Trajectory simulate_pclna(const LimitCycleBundle& lc, const NoiseInit& xi0,
                          const std::vector<double>& grid, const PclnaSimOptions& options,
                          std::uint64_t seed);

/// Plain LNA simulation along any path (no phase correction, s = t - t0).
Trajectory simulate_lna(const LnaPath& path, double omega, const NoiseInit& xi0,
                        const std::vector<double>& grid, std::uint64_t seed, double s0 = 0.0);

/// Times at which corrections are applied for the given grid.
std::vector<double> correction_times(const std::vector<double>& grid, double period,
                                     const PclnaSimOptions& options);

}  // namespace pclna
