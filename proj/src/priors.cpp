#include "pclna/priors.hpp"

#include "pclna/io.hpp"

#include <cmath>
#include <limits>

namespace pclna {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double Prior::log_density(double x) const {
  if (!std::isfinite(x)) return kNegInf;
  switch (family) {
    case PriorFamily::flat:
      return 0.0;
    case PriorFamily::uniform:
      return (x >= a && x <= b) ? -std::log(b - a) : kNegInf;
    case PriorFamily::gamma:
      if (x <= 0.0) return kNegInf;
      return a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(x) - b * x;
    case PriorFamily::inverse_gamma:
      if (x <= 0.0) return kNegInf;
      return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
  }
  return kNegInf;
}

std::string Prior::describe() const {
  switch (family) {
    case PriorFamily::flat:
      return "flat";
    case PriorFamily::uniform:
      return "uniform(" + format_double(a) + ", " + format_double(b) + ")";
    case PriorFamily::gamma:
      return "gamma(" + format_double(a) + ", " + format_double(b) + ") [shape, rate]";
    case PriorFamily::inverse_gamma:
      return "inverse_gamma(" + format_double(a) + ", " + format_double(b) + ") [shape, rate]";
  }
  return "?";
}

Prior Prior::parse(std::string_view text) {
  text = trim(text);
  if (text == "flat") return {};
  const auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')') {
    throw std::invalid_argument("bad prior '" + std::string(text) + "'");
  }
  const auto name = trim(text.substr(0, open));
  const auto args = split(text.substr(open + 1, text.size() - open - 2), ',');
  if (args.size() != 2) throw std::invalid_argument("prior '" + std::string(text) + "' needs two arguments");
  Prior p;
  if (!parse_double(args[0], p.a) || !parse_double(args[1], p.b)) {
    throw std::invalid_argument("bad number in prior '" + std::string(text) + "'");
  }
  if (name == "gamma") {
    p.family = PriorFamily::gamma;
  } else if (name == "inverse_gamma" || name == "invgamma") {
    p.family = PriorFamily::inverse_gamma;
  } else if (name == "uniform") {
    p.family = PriorFamily::uniform;
    if (!(p.b > p.a)) throw std::invalid_argument("uniform prior needs lo < hi");
    return p;
  } else {
    throw std::invalid_argument("unknown prior family '" + std::string(name) + "'");
  }
  if (!(p.a > 0.0) || !(p.b > 0.0)) throw std::invalid_argument("prior hyperparameters must be > 0");
  return p;
}

double log_prior(const PriorSpec& priors, const Vec& theta) {
  if (static_cast<Eigen::Index>(priors.size()) != theta.size()) {
    throw std::invalid_argument("one prior per parameter required");
  }
  double lp = 0.0;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    lp += priors[static_cast<std::size_t>(k)].log_density(theta(k));
    if (lp == kNegInf) return kNegInf;
  }
  return lp;
}

Vec to_raw(const Vec& psi, Scale scale) {
  return scale == Scale::log ? Vec(psi.array().exp()) : psi;
}

Vec to_sampling(const Vec& theta, Scale scale) {
  if (scale == Scale::raw) return theta;
  if ((theta.array() <= 0.0).any()) throw std::invalid_argument("log scale needs positive values");
  return theta.array().log();
}

double log_posterior(const LogLikFn& loglik, const PriorSpec& priors, const Vec& psi, Scale scale) {
  if (!psi.allFinite()) return kNegInf;
  const Vec theta = to_raw(psi, scale);
  double lp = log_prior(priors, theta);
  if (!std::isfinite(lp)) return kNegInf;
  if (scale == Scale::log) lp += psi.sum();
  const double ll = loglik(theta);
  if (!std::isfinite(ll)) return kNegInf;
  return ll + lp;
}

}  // namespace pclna
