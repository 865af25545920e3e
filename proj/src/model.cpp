#include "pclna/model.hpp"

#include "pclna/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace pclna {

ParseError::ParseError(const std::string& message, int line, int column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + message),
      line_(line),
      column_(column) {}

std::string_view to_string(LawKind kind) {
  switch (kind) {
    case LawKind::mass_action: return "mass_action";
    case LawKind::michaelis_menten: return "michaelis_menten";
    case LawKind::hill: return "hill";
    case LawKind::constant: return "constant";
  }
  return "?";
}

ReactionNetwork::ReactionNetwork(std::vector<std::string> species, std::vector<Parameter> params,
                                 std::vector<Reaction> reactions, double omega,
                                 std::vector<std::pair<int, double>> initial)
    : species_(std::move(species)),
      params_(std::move(params)),
      reactions_(std::move(reactions)),
      omega_(omega),
      initial_(std::move(initial)) {
  if (!(omega_ > 0.0) || !std::isfinite(omega_)) {
    throw std::invalid_argument("system size omega must be positive and finite");
  }
  const auto n = n_species();
  const auto r = n_reactions();
  stoich_ = Mat::Zero(n, r);
  for (Eigen::Index j = 0; j < r; ++j) {
    const auto& rx = reactions_[static_cast<std::size_t>(j)];
    for (auto [s, m] : rx.reactants) stoich_(s, j) -= m;
    for (auto [s, m] : rx.products) stoich_(s, j) += m;
    if (stoich_.col(j).isZero()) {
      throw std::invalid_argument("reaction " + std::to_string(j) + " does not change the state");
    }
    const auto check_param = [&](int p) {
      if (p < 0 || p >= static_cast<int>(params_.size())) {
        throw std::invalid_argument("reaction " + std::to_string(j) +
                                    " references an undefined parameter");
      }
    };
    for (int p : rx.law.rate_params) check_param(p);
    if (rx.law.rate_params.empty()) {
      throw std::invalid_argument("reaction " + std::to_string(j) + " has no rate constant");
    }
    if (rx.law.kind == LawKind::michaelis_menten || rx.law.kind == LawKind::hill) {
      check_param(rx.law.threshold);
      if (rx.law.kind == LawKind::hill) check_param(rx.law.hill_coef);
      if (rx.law.modifier < 0 || rx.law.modifier >= n) {
        throw std::invalid_argument("reaction " + std::to_string(j) + " has no modifier species");
      }
    }
  }
}

Vec ReactionNetwork::parameter_values() const {
  Vec theta(n_params());
  for (Eigen::Index k = 0; k < n_params(); ++k) theta(k) = params_[static_cast<std::size_t>(k)].value;
  return theta;
}

std::optional<int> ReactionNetwork::parameter_index(std::string_view name) const {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (params_[k].name == name) return static_cast<int>(k);
  }
  return std::nullopt;
}

std::optional<int> ReactionNetwork::species_index(std::string_view name) const {
  for (std::size_t k = 0; k < species_.size(); ++k) {
    if (species_[k] == name) return static_cast<int>(k);
  }
  return std::nullopt;
}

Vec ReactionNetwork::initial_concentrations() const {
  Vec x0 = Vec::Zero(n_species());
  for (auto [s, v] : initial_) x0(s) = v;
  return x0;
}

ReactionNetwork ReactionNetwork::with_omega(double omega) const {
  return ReactionNetwork(species_, params_, reactions_, omega, initial_);
}

bool ReactionNetwork::operator==(const ReactionNetwork& other) const {
  return species_ == other.species_ && params_ == other.params_ &&
         reactions_ == other.reactions_ && omega_ == other.omega_ && initial_ == other.initial_;
}

namespace {

double rate_constant(const RateLaw& law, const Vec& theta) {
  double c = 1.0;
  for (int p : law.rate_params) c *= theta(p);
  return c;
}

double ipow(double x, int k) {
  double out = 1.0;
  for (int i = 0; i < k; ++i) out *= x;
  return out;
}

}  // namespace

void ReactionNetwork::rates(const Vec& phi, const Vec& theta, Vec& r) const {
  r.resize(n_reactions());
  for (std::size_t j = 0; j < reactions_.size(); ++j) {
    const RateLaw& law = reactions_[j].law;
    const double c = rate_constant(law, theta);
    double value = c;
    switch (law.kind) {
      case LawKind::mass_action:
        for (auto [s, k] : law.species_refs) value *= ipow(phi(s), k);
        break;
      case LawKind::constant:
        break;
      case LawKind::michaelis_menten: {
        const double x = std::max(phi(law.modifier), 0.0);
        const double k = theta(law.threshold);
        value = law.repressive ? c * k / (k + x) : c * x / (k + x);
        break;
      }
      case LawKind::hill: {
        const double x = std::max(phi(law.modifier), 0.0);
        const double kh = std::pow(theta(law.threshold), theta(law.hill_coef));
        const double xh = std::pow(x, theta(law.hill_coef));
        value = law.repressive ? c * kh / (kh + xh) : c * xh / (kh + xh);
        break;
      }
    }
    r(static_cast<Eigen::Index>(j)) = value;
  }
}

void ReactionNetwork::rate_gradient(const Vec& phi, const Vec& theta, Mat& dr) const {
  dr.setZero(n_reactions(), n_species());
  for (std::size_t jj = 0; jj < reactions_.size(); ++jj) {
    const auto j = static_cast<Eigen::Index>(jj);
    const RateLaw& law = reactions_[jj].law;
    const double c = rate_constant(law, theta);
    switch (law.kind) {
      case LawKind::mass_action:
        for (std::size_t a = 0; a < law.species_refs.size(); ++a) {
          const auto [sa, ka] = law.species_refs[a];
          double d = c * ka * ipow(phi(sa), ka - 1);
          for (std::size_t b = 0; b < law.species_refs.size(); ++b) {
            if (b == a) continue;
            const auto [sb, kb] = law.species_refs[b];
            d *= ipow(phi(sb), kb);
          }
          dr(j, sa) += d;
        }
        break;
      case LawKind::constant:
        break;
      case LawKind::michaelis_menten: {
        const double x = phi(law.modifier);
        if (x < 0.0) break;
        const double k = theta(law.threshold);
        const double d = c * k / ((k + x) * (k + x));
        dr(j, law.modifier) = law.repressive ? -d : d;
        break;
      }
      case LawKind::hill: {
        const double x = phi(law.modifier);
        if (x <= 0.0) break;
        const double h = theta(law.hill_coef);
        const double kh = std::pow(theta(law.threshold), h);
        const double xh = std::pow(x, h);
        const double d = c * h * kh * xh / (x * (kh + xh) * (kh + xh));
        dr(j, law.modifier) = law.repressive ? -d : d;
        break;
      }
    }
  }
}

Vec ReactionNetwork::rates(const Vec& phi, const Vec& theta) const {
  Vec r;
  rates(phi, theta, r);
  return r;
}

Vec ReactionNetwork::drift(const Vec& phi, const Vec& theta) const {
  return stoich_ * rates(phi, theta);
}

Mat ReactionNetwork::jacobian(const Vec& phi, const Vec& theta) const {
  Mat dr;
  rate_gradient(phi, theta, dr);
  return stoich_ * dr;
}

Mat ReactionNetwork::diffusion(const Vec& phi, const Vec& theta) const {
  const Vec r = rates(phi, theta);
  Mat s = stoich_ * r.asDiagonal() * stoich_.transpose();
  return s;
}

void ReactionNetwork::propensities(const Vec& counts, const Vec& theta, Vec& w) const {
  rates(counts / omega_, theta, w);
  w *= omega_;
}

Vec macroscopic_rates(const ReactionNetwork& net, const Vec& phi, const Vec& theta) {
  Vec r = net.rates(phi, theta);
  if (!r.allFinite()) throw NumericalError("non-finite reaction rate");
  return r;
}

Mat jacobian_fd(const ReactionNetwork& net, const Vec& phi, const Vec& theta) {
  const auto n = net.n_species();
  Mat jac(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = std::max(1e-6 * std::abs(phi(i)), 1e-8);
    Vec up = phi, dn = phi;
    up(i) += h;
    dn(i) -= h;
    jac.col(i) = (net.drift(up, theta) - net.drift(dn, theta)) / (2.0 * h);
  }
  return jac;
}

// ---------------------------------------------------------------------------
// Model text format

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_';
  });
}

struct Line {
  int number;
  std::string_view raw;   // whole line
  std::string_view text;  // trimmed, comment stripped
  int column_of(std::string_view part) const {
    return static_cast<int>(part.data() - raw.data()) + 1;
  }
};

class ModelParser {
 public:
  explicit ModelParser(std::string_view text) : text_(text) {}

  ReactionNetwork parse() {
    std::size_t pos = 0;
    int number = 0;
    std::string current;
    while (pos <= text_.size()) {
      const auto end = text_.find('\n', pos);
      const std::string_view raw =
          text_.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
      ++number;
      std::string_view body = raw;
      if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
      const Line line{number, raw, trim(body)};
      if (!line.text.empty()) {
        if (line.text.front() == '[') {
          if (line.text.back() != ']') throw error(line, line.text, "unterminated section header");
          current = std::string(trim(line.text.substr(1, line.text.size() - 2)));
          static const std::set<std::string> known = {"species", "parameters", "omega", "initial",
                                                      "reactions"};
          if (!known.contains(current)) throw error(line, line.text, "unknown section [" + current + "]");
          if (!seen_.insert(current).second) {
            throw error(line, line.text, "duplicate section [" + current + "]");
          }
        } else if (current.empty()) {
          throw error(line, line.text, "content outside of any section");
        } else {
          sections_[current].push_back(line);
        }
      }
      if (end == std::string_view::npos) break;
      pos = end + 1;
    }

    for (const auto& line : sections_["species"]) parse_species(line);
    for (const auto& line : sections_["parameters"]) parse_parameter(line);
    parse_omega();
    for (const auto& line : sections_["initial"]) parse_initial(line);
    for (const auto& line : sections_["reactions"]) parse_reaction(line);
    if (species_.empty()) throw ParseError("no species declared", number, 1);
    if (reactions_.empty()) throw ParseError("no reactions declared", number, 1);
    return ReactionNetwork(species_, params_, reactions_, omega_, initial_);
  }

 private:
  static ParseError error(const Line& line, std::string_view at, const std::string& message) {
    return ParseError(message, line.number, line.column_of(at));
  }

  int species_of(const Line& line, std::string_view name) const {
    for (std::size_t i = 0; i < species_.size(); ++i) {
      if (species_[i] == name) return static_cast<int>(i);
    }
    throw error(line, name, "undefined species '" + std::string(name) + "'");
  }

  int param_of(const Line& line, std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].name == name) return static_cast<int>(i);
    }
    throw error(line, name, "undefined parameter '" + std::string(name) + "'");
  }

  void parse_species(const Line& line) {
    if (!is_identifier(line.text)) throw error(line, line.text, "invalid species name");
    if (std::find(species_.begin(), species_.end(), line.text) != species_.end()) {
      throw error(line, line.text, "duplicate species '" + std::string(line.text) + "'");
    }
    species_.emplace_back(line.text);
  }

  void parse_parameter(const Line& line) {
    const auto eq = line.text.find('=');
    if (eq == std::string_view::npos) throw error(line, line.text, "expected 'name = value'");
    const auto name = trim(line.text.substr(0, eq));
    auto rest = trim(line.text.substr(eq + 1));
    if (!is_identifier(name)) throw error(line, line.text, "invalid parameter name");
    for (const auto& p : params_) {
      if (p.name == name) throw error(line, name, "duplicate parameter '" + std::string(name) + "'");
    }
    if (std::find(species_.begin(), species_.end(), name) != species_.end()) {
      throw error(line, name, "parameter name clashes with a species");
    }
    bool constrained = true;
    if (const auto sp = rest.find_first_of(" \t"); sp != std::string_view::npos) {
      const auto flag = trim(rest.substr(sp));
      if (flag != "unconstrained") throw error(line, flag, "unknown parameter flag");
      constrained = false;
      rest = trim(rest.substr(0, sp));
    }
    double value = 0.0;
    if (!parse_double(rest, value) || !std::isfinite(value)) {
      throw error(line, rest, "invalid number");
    }
    if (constrained && !(value > 0.0)) {
      throw error(line, rest, "parameter '" + std::string(name) + "' must be positive");
    }
    params_.push_back({std::string(name), value, constrained});
  }

  void parse_omega() {
    const auto& lines = sections_["omega"];
    if (lines.empty()) throw ParseError("missing [omega] section", 1, 1);
    if (lines.size() != 1) throw error(lines[1], lines[1].text, "[omega] takes a single value");
    if (!parse_double(lines[0].text, omega_) || !(omega_ > 0.0) || !std::isfinite(omega_)) {
      throw error(lines[0], lines[0].text, "omega must be a positive number");
    }
  }

  void parse_initial(const Line& line) {
    const auto eq = line.text.find('=');
    if (eq == std::string_view::npos) throw error(line, line.text, "expected 'species = value'");
    const auto name = trim(line.text.substr(0, eq));
    const auto rest = trim(line.text.substr(eq + 1));
    const int s = species_of(line, name);
    for (auto [t, v] : initial_) {
      if (t == s) throw error(line, name, "duplicate initial value");
    }
    double value = 0.0;
    if (!parse_double(rest, value) || !(value >= 0.0) || !std::isfinite(value)) {
      throw error(line, rest, "initial concentration must be a nonnegative number");
    }
    initial_.emplace_back(s, value);
  }

  std::vector<std::pair<int, int>> parse_side(const Line& line, std::string_view side) {
    side = trim(side);
    if (side.empty()) throw error(line, side.data() ? side : line.text, "empty reaction side (use 0)");
    std::vector<std::pair<int, int>> out;
    if (side == "0") return out;
    std::size_t start = 0;
    while (true) {
      const auto plus = side.find('+', start);
      const auto term = trim(side.substr(start, plus == std::string_view::npos ? std::string_view::npos
                                                                              : plus - start));
      if (term.empty()) throw error(line, side.substr(start), "empty term");
      std::size_t k = 0;
      while (k < term.size() && std::isdigit(static_cast<unsigned char>(term[k]))) ++k;
      int mult = 1;
      if (k > 0) {
        mult = std::stoi(std::string(term.substr(0, k)));
        if (mult <= 0) throw error(line, term, "stoichiometric coefficient must be positive");
      }
      auto name = trim(term.substr(k));
      if (!name.empty() && name.front() == '*') name = trim(name.substr(1));
      if (!is_identifier(name)) throw error(line, term, "invalid reaction term");
      const int s = species_of(line, name);
      for (auto [t, m] : out) {
        if (t == s) throw error(line, term, "species listed twice on one side; use a coefficient");
      }
      out.emplace_back(s, mult);
      if (plus == std::string_view::npos) break;
      start = plus + 1;
    }
    return out;
  }

  std::vector<int> parse_product(const Line& line, std::string_view expr) {
    std::vector<int> out;
    for (const auto& piece : split(expr, '*')) {
      const auto name = trim(std::string_view(piece));
      if (!is_identifier(name)) throw error(line, expr, "invalid parameter expression '" + std::string(expr) + "'");
      const auto it = std::find_if(params_.begin(), params_.end(),
                                   [&](const Parameter& p) { return p.name == name; });
      // `piece` is a copy, so errors point at the whole expression
      if (it == params_.end()) throw error(line, expr, "undefined parameter '" + std::string(name) + "'");
      out.push_back(static_cast<int>(it - params_.begin()));
    }
    return out;
  }

  void parse_reaction(const Line& line) {
    const auto arrow = line.text.find("->");
    if (arrow == std::string_view::npos) throw error(line, line.text, "expected '->'");
    if (line.text.find("->", arrow + 2) != std::string_view::npos) {
      throw error(line, line.text.substr(arrow + 2), "more than one '->'");
    }
    const auto at = line.text.find('@');
    if (at == std::string_view::npos || at < arrow) throw error(line, line.text, "expected '@ law(...)' after products");
    if (line.text.find('@', at + 1) != std::string_view::npos) {
      throw error(line, line.text.substr(at + 1), "more than one '@'");
    }
    Reaction rx;
    rx.reactants = parse_side(line, line.text.substr(0, arrow));
    rx.products = parse_side(line, line.text.substr(arrow + 2, at - arrow - 2));

    const auto law_text = trim(line.text.substr(at + 1));
    const auto open = law_text.find('(');
    if (open == std::string_view::npos || law_text.back() != ')') {
      throw error(line, law_text, "expected law(args)");
    }
    const auto kind_name = trim(law_text.substr(0, open));
    const auto args = law_text.substr(open + 1, law_text.size() - open - 2);
    RateLaw& law = rx.law;
    std::size_t n_positional = 0;
    if (kind_name == "mass_action") {
      law.kind = LawKind::mass_action;
      n_positional = 1;
    } else if (kind_name == "michaelis_menten") {
      law.kind = LawKind::michaelis_menten;
      n_positional = 2;
    } else if (kind_name == "hill") {
      law.kind = LawKind::hill;
      n_positional = 3;
    } else if (kind_name == "constant") {
      law.kind = LawKind::constant;
      n_positional = 1;
    } else {
      throw error(line, kind_name, "unknown rate law '" + std::string(kind_name) + "'");
    }

    std::string_view positional = args;
    std::string_view modifiers;
    if (const auto semi = args.find(';'); semi != std::string_view::npos) {
      positional = args.substr(0, semi);
      modifiers = args.substr(semi + 1);
    }
    std::vector<std::string_view> pos_args;
    {
      std::size_t start = 0;
      while (true) {
        const auto comma = positional.find(',', start);
        pos_args.push_back(trim(positional.substr(
            start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
    }
    if (pos_args.size() != n_positional) {
      throw error(line, law_text,
                  std::string(kind_name) + " takes " + std::to_string(n_positional) + " parameter argument(s)");
    }
    law.rate_params = parse_product(line, pos_args[0]);
    if (law.kind == LawKind::mass_action) {
      law.species_refs = rx.reactants;
    }
    if (law.kind == LawKind::michaelis_menten || law.kind == LawKind::hill) {
      if (!is_identifier(pos_args[1])) throw error(line, pos_args[1], "threshold must be a single parameter");
      law.threshold = param_of(line, pos_args[1]);
      if (!(params_[static_cast<std::size_t>(law.threshold)].value > 0.0)) {
        throw error(line, pos_args[1], "threshold must be strictly positive");
      }
      if (law.kind == LawKind::hill) {
        if (!is_identifier(pos_args[2])) throw error(line, pos_args[2], "Hill coefficient must be a single parameter");
        law.hill_coef = param_of(line, pos_args[2]);
      }
      const auto mod = trim(modifiers);
      const auto eq = mod.find('=');
      if (mod.empty() || eq == std::string_view::npos || mod.find(',') != std::string_view::npos) {
        throw error(line, law_text, "expected exactly one modifier, e.g. '; substrate=X'");
      }
      const auto key = trim(mod.substr(0, eq));
      const auto who = trim(mod.substr(eq + 1));
      if (law.kind == LawKind::michaelis_menten && key == "substrate") {
        law.repressive = false;
      } else if (law.kind == LawKind::michaelis_menten && key == "inhibitor") {
        law.repressive = true;
      } else if (law.kind == LawKind::hill && key == "activator") {
        law.repressive = false;
      } else if (law.kind == LawKind::hill && key == "repressor") {
        law.repressive = true;
      } else {
        throw error(line, key, "unknown modifier '" + std::string(key) + "' for " + std::string(kind_name));
      }
      law.modifier = species_of(line, who);
    } else if (!trim(modifiers).empty()) {
      throw error(line, modifiers, std::string(kind_name) + " takes no modifiers");
    }

    // net change check
    std::map<int, int> net;
    for (auto [s, m] : rx.reactants) net[s] -= m;
    for (auto [s, m] : rx.products) net[s] += m;
    if (std::all_of(net.begin(), net.end(), [](const auto& kv) { return kv.second == 0; })) {
      throw error(line, line.text, "reaction does not change the state");
    }
    reactions_.push_back(std::move(rx));
  }

  std::string_view text_;
  std::set<std::string> seen_;
  std::map<std::string, std::vector<Line>> sections_;
  std::vector<std::string> species_;
  std::vector<Parameter> params_;
  std::vector<Reaction> reactions_;
  std::vector<std::pair<int, double>> initial_;
  double omega_ = 0.0;
};

std::string side_text(const ReactionNetwork& net, const std::vector<std::pair<int, int>>& side) {
  if (side.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < side.size(); ++i) {
    if (i) out += " + ";
    if (side[i].second != 1) out += std::to_string(side[i].second);
    out += net.species()[static_cast<std::size_t>(side[i].first)];
  }
  return out;
}

}  // namespace

ReactionNetwork parse_model(std::string_view text) { return ModelParser(text).parse(); }

ReactionNetwork load_model(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_model(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line(), e.column());
  }
}

std::string serialize_model(const ReactionNetwork& net) {
  std::ostringstream out;
  const auto& params = net.parameters();
  const auto pname = [&](int p) { return params[static_cast<std::size_t>(p)].name; };
  out << "[species]\n";
  for (const auto& s : net.species()) out << s << '\n';
  out << "\n[parameters]\n";
  for (const auto& p : params) {
    out << p.name << " = " << format_double(p.value) << (p.constrained ? "" : " unconstrained") << '\n';
  }
  out << "\n[omega]\n" << format_double(net.omega()) << '\n';
  if (!net.initial().empty()) {
    out << "\n[initial]\n";
    for (auto [s, v] : net.initial()) out << net.species()[static_cast<std::size_t>(s)] << " = " << format_double(v) << '\n';
  }
  out << "\n[reactions]\n";
  for (const auto& rx : net.reactions()) {
    out << side_text(net, rx.reactants) << " -> " << side_text(net, rx.products) << " @ "
        << to_string(rx.law.kind) << '(';
    for (std::size_t i = 0; i < rx.law.rate_params.size(); ++i) {
      if (i) out << '*';
      out << pname(rx.law.rate_params[i]);
    }
    if (rx.law.kind == LawKind::michaelis_menten || rx.law.kind == LawKind::hill) {
      out << ", " << pname(rx.law.threshold);
      if (rx.law.kind == LawKind::hill) out << ", " << pname(rx.law.hill_coef);
      const char* key = rx.law.kind == LawKind::hill ? (rx.law.repressive ? "repressor" : "activator")
                                                     : (rx.law.repressive ? "inhibitor" : "substrate");
      out << "; " << key << '=' << net.species()[static_cast<std::size_t>(rx.law.modifier)];
    }
    out << ")\n";
  }
  return out.str();
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t model_hash(const ReactionNetwork& net) { return fnv1a(serialize_model(net)); }

}  // namespace pclna
