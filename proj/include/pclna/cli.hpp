#pragma once

#include "pclna/diagnostics.hpp"
#include "pclna/linalg.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace pclna {

inline constexpr const char* kVersion = "0.1.0";

/// Runs the command line. Exit codes: 0 success, 1 usage error, 2 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// One chain file: `iter,beta,<params...>,energy`.
struct ChainFile {
  std::vector<std::string> names;
  std::vector<long> iter;
  std::vector<double> beta;
  Mat values;  // raw-scale parameters, one row per iteration
  std::vector<double> energy;
};

std::string chain_csv(const std::vector<std::string>& names, double beta, const Mat& raw_values,
                      const std::vector<double>& energies);
ChainFile parse_chain_csv(std::string_view text);

/// Samples of the beta = 1 chain kept by the burn-in / thinning rule.
Mat kept_samples(const ChainFile& chain, long burn_in, long block = 0);

/// Posterior summary JSON (mean, sd, credible interval, CoV, ESS per parameter).
std::string summary_json(const std::vector<ParamSummary>& rows, double alpha, long n_samples);

}  // namespace pclna
