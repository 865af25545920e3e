#pragma once

#include "pclna/lna.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pclna {

enum class Scale { raw, log };

Scale parse_scale(std::string_view name);
std::string_view to_string(Scale s);

struct MvnFactor {
  Vec mean;
  Mat cov;
};

/// The likelihood object as a function of theta: a product of independent
/// Gaussian factors.
using FactorFn = std::function<std::vector<MvnFactor>(const Vec& theta)>;

/// Fisher information of a product of Gaussians,
///   I_kl = sum_f [ dmu_k^T S^-1 dmu_l + 1/2 tr(S^-1 dS_k S^-1 dS_l) ],
/// with derivatives by central differences. Raw scale uses
/// h_k = max(1e-4 |theta_k|, 1e-7) unless `step` is given; log scale
/// differentiates in log theta with h = 1e-4 (or `step`).
Mat fim_from_factors(const FactorFn& factors, const Vec& theta, Scale scale,
                     std::optional<double> step = std::nullopt);

/// Fisher information for factors with analytic derivatives; derivs[k][f] is
/// the derivative of factor f with respect to parameter k.
Mat fisher_information(const std::vector<MvnFactor>& factors,
                       const std::vector<std::vector<MvnFactor>>& derivs);

struct FimDesign {
  int n_sections = 12;
  int n_cycles = 3;
};

struct FimResult {
  Mat fim;
  Vec eigenvalues;   // lambda_i^2, descending
  Mat eigenvectors;  // row i is v_i
  Mat U;             // u_ik = lambda_i v_ik
  Vec coeffs;        // |u_k|
  Scale scale = Scale::raw;
  FimDesign design;
  std::vector<std::string> warnings;
};

struct Decomposition {
  Vec eigenvalues;
  Mat eigenvectors;
  Mat U;
  Vec coeffs;
  std::vector<std::string> warnings;
};

Decomposition decompose(const Mat& fim);

/// 1/2 delta^T I delta.
double kl_quadratic(const Mat& fim, const Vec& delta);

/// Transition factors of the section design for one parameter vector:
/// factor m has mean omega phi((m+1) D) and covariance
/// omega (C K_m C^T + V) over [m D, (m+1) D], where D = reference_period /
/// n_sections, time starts at the cycle's own phase-zero point, and K_m is
/// the transversal covariance carried from the stationary section
/// covariance K_0.
std::vector<MvnFactor> section_factors(const LimitCycleBundle& lc, const FimDesign& design,
                                       double reference_period, const OdeOptions& options);

/// Stationary transversal covariance at phase zero: fixed point of the
/// one-cycle map K -> P (C K C^T + V) P applied section by section.
Mat stationary_section_covariance(const LimitCycleBundle& lc, int n_sections, double tol = 1e-10);

struct FimOptions {
  FimDesign design;
  Scale scale = Scale::log;
  std::optional<double> fd_step;
  OdeOptions ode{1e-11, 1e-13};
};

/// FIM of the pcLNA section likelihood at theta. `lc` seeds the cycle search;
/// every theta (base and perturbed) gets its own bundle, re-anchored at its
/// own first-species maximum.
FimResult fim(const ReactionNetwork& net, const Vec& theta, const LimitCycleBundle& lc,
              const FimOptions& options = {});

struct SensitivityReport {
  std::vector<std::string> names;
  std::vector<int> ranking;             // parameter indices by decreasing |u_k|
  std::vector<double> log_coeffs;       // log |u_k| in parameter order
  std::vector<double> singular_values;  // top m, divided by the largest
  Mat top_rows;                         // rows of U for the top m eigenvalues
};

SensitivityReport sensitivity_report(const FimResult& res, const std::vector<std::string>& names,
                                     int top_m);
std::string report_json(const FimResult& res, const SensitivityReport& rep);
std::string report_csv(const SensitivityReport& rep);

}  // namespace pclna
