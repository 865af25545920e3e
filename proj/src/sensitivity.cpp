#include "pclna/sensitivity.hpp"

#include "pclna/io.hpp"
#include "pclna/phase.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace pclna {

Scale parse_scale(std::string_view name) {
  if (name == "raw") return Scale::raw;
  if (name == "log") return Scale::log;
  throw std::invalid_argument("scale must be raw or log, got '" + std::string(name) + "'");
}

std::string_view to_string(Scale s) { return s == Scale::raw ? "raw" : "log"; }

Mat fisher_information(const std::vector<MvnFactor>& factors,
                       const std::vector<std::vector<MvnFactor>>& derivs) {
  const auto K = static_cast<Eigen::Index>(derivs.size());
  Mat I = Mat::Zero(K, K);
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const Mat& S = factors[f].cov;
    Eigen::LLT<Mat> llt(S);
    if (llt.info() != Eigen::Success) {
      Mat jittered = S;
      jittered.diagonal().array() += 1e-10 * std::abs(S.trace());
      llt.compute(jittered);
      if (llt.info() != Eigen::Success) {
        throw NumericalError("factor " + std::to_string(f) + " has a singular covariance");
      }
    }
    std::vector<Vec> sdmu(static_cast<std::size_t>(K));
    std::vector<Mat> a(static_cast<std::size_t>(K));
    for (Eigen::Index k = 0; k < K; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      sdmu[kk] = llt.solve(derivs[kk][f].mean);
      a[kk] = llt.solve(derivs[kk][f].cov);
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      for (Eigen::Index l = k; l < K; ++l) {
        const auto kk = static_cast<std::size_t>(k), ll = static_cast<std::size_t>(l);
        const double mean_term = derivs[kk][f].mean.dot(sdmu[ll]);
        const double cov_term = 0.5 * (a[kk].cwiseProduct(a[ll].transpose())).sum();
        I(k, l) += mean_term + cov_term;
      }
    }
  }
  I.triangularView<Eigen::StrictlyLower>() = I.transpose().triangularView<Eigen::StrictlyLower>();
  return I;
}

Mat fim_from_factors(const FactorFn& factors, const Vec& theta, Scale scale,
                     std::optional<double> step) {
  const auto K = theta.size();
  if (scale == Scale::log && (theta.array() <= 0.0).any()) {
    throw std::invalid_argument("log-scale FIM needs strictly positive parameters");
  }
  const std::vector<MvnFactor> base = factors(theta);
  std::vector<std::vector<MvnFactor>> derivs(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k) {
    double h;
    if (scale == Scale::raw) {
      h = step ? *step * std::max(std::abs(theta(k)), 1e-3) : std::max(1e-4 * std::abs(theta(k)), 1e-7);
    } else {
      h = step ? *step : 1e-4;
    }
    Vec up = theta, dn = theta;
    if (scale == Scale::raw) {
      up(k) += h;
      dn(k) -= h;
    } else {
      up(k) = theta(k) * std::exp(h);
      dn(k) = theta(k) * std::exp(-h);
    }
    std::vector<MvnFactor> fp, fm;
    try {
      fp = factors(up);
    } catch (const NumericalError& e) {
      throw NumericalError("FIM perturbation theta[" + std::to_string(k) + "] + h failed: " + e.what());
    }
    try {
      fm = factors(dn);
    } catch (const NumericalError& e) {
      throw NumericalError("FIM perturbation theta[" + std::to_string(k) + "] - h failed: " + e.what());
    }
    if (fp.size() != base.size() || fm.size() != base.size()) {
      throw NumericalError("perturbed likelihood has a different number of factors");
    }
    auto& d = derivs[static_cast<std::size_t>(k)];
    d.resize(base.size());
    for (std::size_t f = 0; f < base.size(); ++f) {
      d[f].mean = (fp[f].mean - fm[f].mean) / (2.0 * h);
      d[f].cov = (fp[f].cov - fm[f].cov) / (2.0 * h);
      symmetrize(d[f].cov);
    }
  }
  return fisher_information(base, derivs);
}

Decomposition decompose(const Mat& fim) {
  if (fim.rows() != fim.cols()) throw std::invalid_argument("FIM must be square");
  const double scale = std::max(1.0, fim.cwiseAbs().maxCoeff());
  if ((fim - fim.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw std::invalid_argument("FIM is not symmetric");
  }
  Mat sym = fim;
  symmetrize(sym);
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  const auto K = sym.rows();
  Decomposition d;
  d.eigenvalues.resize(K);
  d.eigenvectors.resize(K, K);
  for (Eigen::Index i = 0; i < K; ++i) {
    d.eigenvalues(i) = es.eigenvalues()(K - 1 - i);
    d.eigenvectors.row(i) = es.eigenvectors().col(K - 1 - i).transpose();
  }
  if (K > 0 && d.eigenvalues.minCoeff() < 0.0) {
    d.warnings.push_back("negative FIM eigenvalue " + format_double(d.eigenvalues.minCoeff()) +
                         " clipped to 0");
    d.eigenvalues = d.eigenvalues.cwiseMax(0.0);
  }
  d.U = d.eigenvalues.cwiseSqrt().asDiagonal() * d.eigenvectors;
  d.coeffs = d.U.colwise().norm().transpose();
  return d;
}

double kl_quadratic(const Mat& fim, const Vec& delta) {
  if (fim.rows() != delta.size()) throw std::invalid_argument("dimension mismatch in kl_quadratic");
  return 0.5 * delta.dot(fim * delta);
}

namespace {

Mat tangent_projector(const ReactionNetwork& net, const Vec& theta, const Vec& phi) {
  const TransversalBasis b = transversal_basis(net.drift(phi, theta));
  return b.E2 * b.E2.transpose();
}

}  // namespace

Mat stationary_section_covariance(const LimitCycleBundle& lc, int n_sections, double tol) {
  if (n_sections < 2) throw std::invalid_argument("need at least two sections");
  const auto n = lc.dim();
  const double width = lc.period() / n_sections;
  std::vector<Mat> C(static_cast<std::size_t>(n_sections)), V(C.size()), P(C.size());
  for (int j = 0; j < n_sections; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    lc.transition(j * width, width, C[jj], V[jj]);
    const double s_next = (j + 1 == n_sections) ? 0.0 : (j + 1) * width;
    P[jj] = tangent_projector(lc.network(), lc.theta(), lc.phi(s_next));
  }
  Mat K = Mat::Zero(n, n);
  for (int cycle = 0; cycle < 100000; ++cycle) {
    const Mat prev = K;
    for (std::size_t j = 0; j < C.size(); ++j) {
      K = P[j] * (C[j] * K * C[j].transpose() + V[j]) * P[j];
      symmetrize(K);
    }
    if ((K - prev).norm() <= tol * std::max(K.norm(), 1e-300)) return K;
  }
  throw NumericalError("section covariance map did not converge (cycle not attractive?)");
}

std::vector<MvnFactor> section_factors(const LimitCycleBundle& lc, const FimDesign& design,
                                       double reference_period, const OdeOptions& options) {
  if (design.n_sections < 2 || design.n_cycles < 1) throw std::invalid_argument("bad FIM design");
  const ReactionNetwork& net = lc.network();
  const double omega = net.omega();
  const double width = reference_period / design.n_sections;
  Mat K = stationary_section_covariance(lc, design.n_sections);
  Vec phi = lc.anchor();
  std::vector<MvnFactor> out;
  const int total = design.n_sections * design.n_cycles;
  out.reserve(static_cast<std::size_t>(total));
  for (int m = 0; m < total; ++m) {
    const LnaStep st = integrate_lna(net, lc.theta(), phi, width, options);
    Mat next = st.C * K * st.C.transpose() + st.V;
    symmetrize(next);
    out.push_back({omega * st.phi, omega * next});
    const Mat P = tangent_projector(net, lc.theta(), st.phi);
    K = P * next * P;
    symmetrize(K);
    phi = st.phi;
  }
  return out;
}

FimResult fim(const ReactionNetwork& net, const Vec& theta, const LimitCycleBundle& lc,
              const FimOptions& options) {
  CycleOptions co;
  co.ode = options.ode;
  co.burn_in = 0.0;
  co.search_time = 6.0 * lc.period();
  auto bundle_at = [&](const Vec& th) { return find_limit_cycle(net, th, lc.anchor(), co); };
  const double reference = bundle_at(theta).period();
  const FactorFn fn = [&](const Vec& th) {
    return section_factors(bundle_at(th), options.design, reference, options.ode);
  };

  FimResult res;
  res.scale = options.scale;
  res.design = options.design;
  res.fim = fim_from_factors(fn, theta, options.scale, options.fd_step);
  symmetrize(res.fim);
  Decomposition d = decompose(res.fim);
  res.eigenvalues = std::move(d.eigenvalues);
  res.eigenvectors = std::move(d.eigenvectors);
  res.U = std::move(d.U);
  res.coeffs = std::move(d.coeffs);
  res.warnings = std::move(d.warnings);
  return res;
}

SensitivityReport sensitivity_report(const FimResult& res, const std::vector<std::string>& names,
                                     int top_m) {
  const auto K = res.coeffs.size();
  if (static_cast<Eigen::Index>(names.size()) != K) throw std::invalid_argument("one name per parameter required");
  if (top_m < 1 || top_m > K) throw std::invalid_argument("top must be between 1 and the number of parameters");
  SensitivityReport rep;
  rep.names = names;
  rep.ranking.resize(static_cast<std::size_t>(K));
  std::iota(rep.ranking.begin(), rep.ranking.end(), 0);
  std::stable_sort(rep.ranking.begin(), rep.ranking.end(),
                   [&](int a, int b) { return res.coeffs(a) > res.coeffs(b); });
  for (Eigen::Index k = 0; k < K; ++k) rep.log_coeffs.push_back(std::log(res.coeffs(k)));
  const double lead = std::sqrt(std::max(res.eigenvalues(0), 0.0));
  for (int i = 0; i < top_m; ++i) {
    const double sv = std::sqrt(std::max(res.eigenvalues(i), 0.0));
    rep.singular_values.push_back(lead > 0.0 ? sv / lead : 0.0);
  }
  rep.top_rows = res.U.topRows(top_m);
  return rep;
}

namespace {

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

nlohmann::json matrix(const Mat& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    out.push_back(row);
  }
  return out;
}

}  // namespace

std::string report_json(const FimResult& res, const SensitivityReport& rep) {
  nlohmann::json j;
  j["scale"] = std::string(to_string(res.scale));
  j["design"] = {{"sections", res.design.n_sections}, {"cycles", res.design.n_cycles}};
  j["parameters"] = rep.names;
  j["fim"] = matrix(res.fim);
  j["eigenvalues"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < res.eigenvalues.size(); ++i) j["eigenvalues"].push_back(number(res.eigenvalues(i)));
  j["normalised_singular_values"] = rep.singular_values;
  nlohmann::json ranked = nlohmann::json::array();
  for (std::size_t r = 0; r < rep.ranking.size(); ++r) {
    const int k = rep.ranking[r];
    ranked.push_back({{"rank", r + 1},
                      {"parameter", rep.names[static_cast<std::size_t>(k)]},
                      {"coefficient", number(res.coeffs(k))},
                      {"log_coefficient", number(rep.log_coeffs[static_cast<std::size_t>(k)])}});
  }
  j["ranking"] = ranked;
  j["U_top"] = matrix(rep.top_rows);
  j["warnings"] = res.warnings;
  return j.dump(2) + "\n";
}

std::string report_csv(const SensitivityReport& rep) {
  std::ostringstream out;
  out << "rank,parameter,coefficient,log_coefficient\n";
  for (std::size_t r = 0; r < rep.ranking.size(); ++r) {
    const auto k = static_cast<std::size_t>(rep.ranking[r]);
    out << r + 1 << ',' << rep.names[k] << ',' << format_double(std::exp(rep.log_coeffs[k])) << ','
        << format_double(rep.log_coeffs[k]) << '\n';
  }
  return out.str();
}

}  // namespace pclna
