#pragma once

#include "pclna/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pclna {

/// Error raised by the model and config readers. Carries a 1-based position.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

enum class LawKind { mass_action, michaelis_menten, hill, constant };

std::string_view to_string(LawKind kind);

/// Macroscopic rate law r_j(phi) of one reaction. All laws act on
/// concentrations phi = x / omega.
///
///   mass_action        c * prod_l phi_l^k_l      (k_l = reactant multiplicity)
///   michaelis_menten   c * phi/(k + phi)  (substrate) or c * k/(k + phi) (inhibitor)
///   hill               v * phi^h/(k^h + phi^h) (activator) or v * k^h/(k^h + phi^h) (repressor)
///   constant           c
///
/// The leading constant is the product of the parameters in `rate_params`.
struct RateLaw {
  LawKind kind = LawKind::mass_action;
  std::vector<std::pair<int, int>> species_refs;  // (species, exponent); mass action only
  std::vector<int> rate_params;
  int threshold = -1;   // k
  int hill_coef = -1;   // h
  int modifier = -1;    // species read by MM / Hill laws
  bool repressive = false;

  bool operator==(const RateLaw&) const = default;
};

struct Reaction {
  std::vector<std::pair<int, int>> reactants;  // (species, multiplicity)
  std::vector<std::pair<int, int>> products;
  RateLaw law;

  bool operator==(const Reaction&) const = default;
};

struct Parameter {
  std::string name;
  double value = 0.0;
  bool constrained = true;  // constrained parameters must stay > 0

  bool operator==(const Parameter&) const = default;
};

/// A reaction network with parameterised rate laws. Immutable once built;
/// every evaluation is a pure function of (phi, theta).
class ReactionNetwork {
 public:
  ReactionNetwork(std::vector<std::string> species, std::vector<Parameter> params,
                  std::vector<Reaction> reactions, double omega,
                  std::vector<std::pair<int, double>> initial = {});

  const std::vector<std::string>& species() const { return species_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  const std::vector<std::pair<int, double>>& initial() const { return initial_; }
  Eigen::Index n_species() const { return static_cast<Eigen::Index>(species_.size()); }
  Eigen::Index n_reactions() const { return static_cast<Eigen::Index>(reactions_.size()); }
  Eigen::Index n_params() const { return static_cast<Eigen::Index>(params_.size()); }
  double omega() const { return omega_; }

  /// Stoichiometry matrix A (n x R); column j is the net change of reaction j.
  const Mat& stoich() const { return stoich_; }

  /// Parameter values in declaration order; this is the theta indexing.
  Vec parameter_values() const;
  std::optional<int> parameter_index(std::string_view name) const;
  std::optional<int> species_index(std::string_view name) const;

  /// Initial concentrations from the optional [initial] section (zero elsewhere).
  Vec initial_concentrations() const;

  /// Same network with a different system size.
  ReactionNetwork with_omega(double omega) const;

  // Evaluation. The out-parameter forms do not allocate when the outputs
  // are already sized.
  void rates(const Vec& phi, const Vec& theta, Vec& r) const;
  void rate_gradient(const Vec& phi, const Vec& theta, Mat& dr) const;  // R x n

  Vec rates(const Vec& phi, const Vec& theta) const;
  Vec drift(const Vec& phi, const Vec& theta) const;
  Mat jacobian(const Vec& phi, const Vec& theta) const;
  Mat diffusion(const Vec& phi, const Vec& theta) const;

  /// Microscopic propensities w_j(x) = omega * r_j(x / omega) for counts x.
  void propensities(const Vec& counts, const Vec& theta, Vec& w) const;

  bool operator==(const ReactionNetwork& other) const;

 private:
  std::vector<std::string> species_;
  std::vector<Parameter> params_;
  std::vector<Reaction> reactions_;
  double omega_;
  std::vector<std::pair<int, double>> initial_;
  Mat stoich_;
};

/// Checked wrappers: throw NumericalError on non-finite output.
Vec macroscopic_rates(const ReactionNetwork& net, const Vec& phi, const Vec& theta);

/// Central finite-difference Jacobian of the drift, step max(1e-6 |phi_i|, 1e-8).
/// For validation only.
Mat jacobian_fd(const ReactionNetwork& net, const Vec& phi, const Vec& theta);

ReactionNetwork parse_model(std::string_view text);
ReactionNetwork load_model(const std::filesystem::path& path);
std::string serialize_model(const ReactionNetwork& net);

/// FNV-1a hash of the canonical serialisation.
std::uint64_t model_hash(const ReactionNetwork& net);
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace pclna
