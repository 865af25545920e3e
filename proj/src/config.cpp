#include "pclna/config.hpp"

#include "pclna/io.hpp"
#include "pclna/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pclna {

ConfigFile ConfigFile::parse(std::string_view text) {
  ConfigFile cfg;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::string current;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", lineno, 1);
      current = std::string(trim(line.substr(1, line.size() - 2)));
      if (current.empty()) throw ParseError("empty section name", lineno, 1);
      if (cfg.sections_.count(current)) throw ParseError("duplicate section [" + current + "]", lineno, 1);
      cfg.sections_[current];
      continue;
    }
    if (current.empty()) throw ParseError("entry outside of any section", lineno, 1);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", lineno, 1);
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError("missing key", lineno, 1);
    auto& entries = cfg.sections_[current];
    for (const auto& e : entries) {
      if (e.key == key) throw ParseError("duplicate key '" + key + "' in [" + current + "]", lineno, 1);
    }
    entries.push_back({key, value, lineno});
  }
  return cfg;
}

const std::vector<ConfigFile::Entry>& ConfigFile::section(const std::string& name) const {
  static const std::vector<Entry> empty;
  auto it = sections_.find(name);
  return it == sections_.end() ? empty : it->second;
}

std::optional<std::string> ConfigFile::get(const std::string& sec, const std::string& key) const {
  for (const auto& e : section(sec)) {
    if (e.key == key) return e.value;
  }
  return std::nullopt;
}

std::vector<std::string> ConfigFile::section_names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : sections_) out.push_back(k);
  return out;
}

void ConfigFile::set(const std::string& sec, const std::string& key, const std::string& value) {
  auto& entries = sections_[sec];
  for (auto& e : entries) {
    if (e.key == key) {
      e.value = value;
      return;
    }
  }
  entries.push_back({key, value, 0});
}

void ConfigFile::check_keys(const std::map<std::string, std::vector<std::string>>& allowed) const {
  for (const auto& [name, entries] : sections_) {
    auto it = allowed.find(name);
    if (it == allowed.end()) throw ParseError("unknown section [" + name + "]", entries.empty() ? 0 : entries.front().line, 1);
    if (it->second.empty()) continue;  // free-form section
    for (const auto& e : entries) {
      if (std::find(it->second.begin(), it->second.end(), e.key) == it->second.end()) {
        throw ParseError("unknown key '" + e.key + "' in [" + name + "]", e.line, 1);
      }
    }
  }
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) {
    double v = 0.0;
    if (!parse_double(item, v)) throw std::invalid_argument("bad number '" + std::string(trim(item)) + "'");
    out.push_back(v);
  }
  return out;
}

bool parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw std::invalid_argument("expected true/false, got '" + std::string(text) + "'");
}

namespace {

double number(const ConfigFile::Entry& e) {
  double v = 0.0;
  if (!parse_double(e.value, v)) throw ParseError("expected a number for '" + e.key + "'", e.line, 1);
  return v;
}

long integer(const ConfigFile::Entry& e) {
  const double v = number(e);
  if (v != std::floor(v)) throw ParseError("expected an integer for '" + e.key + "'", e.line, 1);
  return static_cast<long>(v);
}

template <class F>
void with_context(const ConfigFile::Entry& e, F&& f) {
  try {
    f();
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& ex) {
    throw ParseError(ex.what(), e.line, 1);
  }
}

std::vector<std::string> names_list(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& item : split(text, ',')) {
    const auto t = trim(item);
    if (t.empty()) throw std::invalid_argument("empty name in list");
    out.emplace_back(t);
  }
  return out;
}

}  // namespace

InferConfig parse_infer_config(const ConfigFile& cfg, const std::filesystem::path& base_dir) {
  cfg.check_keys({
      {"model", {"path"}},
      {"data", {"path"}},
      {"observation", {"species", "sigma"}},
      {"estimate", {}},
      {"initial", {}},
      {"fixed", {}},
      {"prior_state", {"mean", "variance"}},
      {"likelihood", {"backend", "cycle_burn_in", "cycle_search", "rtol", "atol"}},
      {"sampler", {"betas", "n_iter", "n_swaps", "n_adapt", "adapt_factor", "adapt_low", "adapt_high",
                   "freeze_window", "burn_in", "scale", "seed", "thin_to_block_ends", "threads",
                   "proposal", "proposal_scale"}},
      {"output", {"directory"}},
  });
  InferConfig c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  auto required = [&](const std::string& sec, const std::string& key) {
    auto v = cfg.get(sec, key);
    if (!v) throw ParseError("missing '" + key + "' in [" + sec + "]", 0, 0);
    return *v;
  };
  c.model_path = resolve(required("model", "path"));
  c.data_path = resolve(required("data", "path"));
  if (auto v = cfg.get("output", "directory")) c.output_dir = resolve(*v);

  for (const auto& e : cfg.section("observation")) {
    with_context(e, [&] {
      if (e.key == "species") c.observed = names_list(e.value);
      if (e.key == "sigma") {
        if (e.value == "estimate") {
          c.estimate_sigma = true;
        } else {
          c.sigma = number(e);
          if (!(c.sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
        }
      }
    });
  }
  if (c.observed.empty()) throw ParseError("missing 'species' in [observation]", 0, 0);

  for (const auto& e : cfg.section("estimate")) {
    with_context(e, [&] {
      c.estimate.push_back(e.key);
      c.priors.push_back(Prior::parse(e.value));
    });
  }
  const bool lists_sigma = std::find(c.estimate.begin(), c.estimate.end(), "sigma") != c.estimate.end();
  if (lists_sigma != c.estimate_sigma) {
    throw ParseError("'sigma' must appear in [estimate] exactly when [observation] sigma = estimate", 0, 0);
  }
  if (c.estimate.empty()) throw ParseError("nothing to estimate: [estimate] lists no parameters", 0, 0);
  for (const auto& e : cfg.section("initial")) c.initial[e.key] = number(e);
  for (const auto& e : cfg.section("fixed")) c.fixed[e.key] = number(e);

  for (const auto& e : cfg.section("prior_state")) {
    with_context(e, [&] {
      if (e.key == "mean") {
        if (e.value == "cycle") {
          c.prior_mean_mode = PriorMeanMode::cycle;
        } else if (e.value == "initial") {
          c.prior_mean_mode = PriorMeanMode::initial;
        } else {
          c.prior_mean_mode = PriorMeanMode::explicit_values;
          const auto v = parse_number_list(e.value);
          c.prior_mean = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
        }
      }
      if (e.key == "variance") {
        c.prior_variance = number(e);
        if (!(c.prior_variance >= 0.0)) throw std::invalid_argument("variance must be >= 0");
      }
    });
  }

  for (const auto& e : cfg.section("likelihood")) {
    with_context(e, [&] {
      if (e.key == "backend") c.backend = parse_backend(e.value);
      if (e.key == "cycle_burn_in") c.cycle_burn_in = number(e);
      if (e.key == "cycle_search") c.cycle_search = number(e);
      if (e.key == "rtol") c.ode.rtol = number(e);
      if (e.key == "atol") c.ode.atol = number(e);
    });
  }

  PtConfig& pt = c.pt;
  for (const auto& e : cfg.section("sampler")) {
    with_context(e, [&] {
      if (e.key == "betas") pt.betas = parse_number_list(e.value);
      if (e.key == "n_iter") pt.n_iter = static_cast<int>(integer(e));
      if (e.key == "n_swaps") pt.n_swaps = static_cast<int>(integer(e));
      if (e.key == "n_adapt") pt.n_adapt = static_cast<int>(integer(e));
      if (e.key == "adapt_factor") pt.adapt_factor = number(e);
      if (e.key == "adapt_low") pt.adapt_low = number(e);
      if (e.key == "adapt_high") pt.adapt_high = number(e);
      if (e.key == "freeze_window") pt.freeze_window = static_cast<int>(integer(e));
      if (e.key == "burn_in") pt.burn_in = integer(e);
      if (e.key == "scale") c.scale = parse_scale(e.value);
      if (e.key == "seed") {
        const long s = integer(e);
        if (s < 0) throw std::invalid_argument("seed must be >= 0");
        pt.seed = static_cast<std::uint64_t>(s);
      }
      if (e.key == "thin_to_block_ends") pt.thin_to_block_ends = parse_bool(e.value);
      if (e.key == "threads") pt.threads = static_cast<int>(integer(e));
      if (e.key == "proposal") {
        if (e.value == "fim") {
          c.fim_proposal = true;
        } else if (e.value != "diagonal") {
          throw std::invalid_argument("proposal must be diagonal or fim");
        }
      }
      if (e.key == "proposal_scale") c.fim_proposal_scale = number(e);
    });
  }
  pt.validate();
  return c;
}

}  // namespace pclna
