#pragma once

#include "pclna/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pclna {

/// States of one series at its observation times. Row i of `states` is the
/// state at times[i] (counts for SSA, real-valued for the LNA simulators).
struct Trajectory {
  std::vector<double> times;
  Mat states;
  int series_id = 0;
};

using Dataset = std::vector<Trajectory>;

/// Gillespie direct method. The state recorded at a grid time is the state
/// holding at that time (after every event with time <= grid time). Once the
/// total propensity reaches zero the remaining grid points keep the absorbed
/// state. A reaction whose reactants are not available has propensity zero.
Trajectory simulate_ssa(const ReactionNetwork& net, const Vec& theta, const Vec& x0,
                        const std::vector<double>& grid, std::uint64_t seed);

/// Replicate i uses seed base_seed + i and gets series_id i.
Dataset simulate_ssa_replicates(const ReactionNetwork& net, const Vec& theta, const Vec& x0,
                                const std::vector<double>& grid, std::uint64_t base_seed,
                                int replicates);

/// Data CSV: header `series,time,<species...>`, one row per (series, time).
void write_data_csv(std::ostream& out, const std::vector<std::string>& species,
                    const Dataset& data);
std::string data_csv(const std::vector<std::string>& species, const Dataset& data);

/// Parses a data CSV. Columns after `time` are returned in file order through
/// `columns`. Series keep their file order; rows of one series must be
/// contiguous with strictly increasing times.
Dataset parse_data_csv(std::string_view text, std::vector<std::string>* columns = nullptr);

/// Picks the named columns (in the given order) out of every series.
Dataset select_columns(const Dataset& data, const std::vector<std::string>& available,
                       const std::vector<std::string>& wanted);

/// Uniform grid t0, t0 + dt, ..., up to and including t1 (within round-off).
std::vector<double> uniform_grid(double t0, double t1, double dt);

}  // namespace pclna
