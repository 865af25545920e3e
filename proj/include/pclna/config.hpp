#pragma once

#include "pclna/kalman.hpp"
#include "pclna/priors.hpp"
#include "pclna/ptmcmc.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pclna {

/// Sectioned key/value text in the model-file dialect:
///   [section]
///   key = value    # comment
class ConfigFile {
 public:
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };

  static ConfigFile parse(std::string_view text);

  bool has_section(const std::string& name) const { return sections_.count(name) > 0; }
  const std::vector<Entry>& section(const std::string& name) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::vector<std::string> section_names() const;

  /// Sets or replaces a value (used for command-line overrides).
  void set(const std::string& section, const std::string& key, const std::string& value);

  /// Rejects sections or keys outside the allowed sets.
  void check_keys(const std::map<std::string, std::vector<std::string>>& allowed) const;

 private:
  std::map<std::string, std::vector<Entry>> sections_;
};

enum class PriorMeanMode { cycle, initial, explicit_values };

struct InferConfig {
  std::filesystem::path model_path;
  std::filesystem::path data_path;
  std::filesystem::path output_dir = "infer_out";

  std::vector<std::string> observed;
  bool estimate_sigma = false;
  double sigma = 1.0;  // measurement error variance when fixed

  std::vector<std::string> estimate;  // parameter names; "sigma" allowed
  PriorSpec priors;                   // aligned with `estimate`
  std::map<std::string, double> initial;
  std::map<std::string, double> fixed;  // overrides of model values

  PriorMeanMode prior_mean_mode = PriorMeanMode::cycle;
  Vec prior_mean;  // counts, explicit mode
  double prior_variance = 1.0;

  Backend backend = Backend::pclna;
  double cycle_burn_in = 50.0;
  double cycle_search = 100.0;
  OdeOptions ode{};

  PtConfig pt;
  Scale scale = Scale::log;
  bool fim_proposal = false;
  double fim_proposal_scale = 1.0;
};

/// Reads an inference config. Relative paths resolve against `base_dir`.
InferConfig parse_infer_config(const ConfigFile& cfg, const std::filesystem::path& base_dir);

std::vector<double> parse_number_list(std::string_view text);
bool parse_bool(std::string_view text);

}  // namespace pclna
