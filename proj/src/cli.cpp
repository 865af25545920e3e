#include "pclna/cli.hpp"

#include "pclna/config.hpp"
#include "pclna/inference.hpp"
#include "pclna/io.hpp"
#include "pclna/phase.hpp"
#include "pclna/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>

namespace pclna {

namespace {

using Json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::string joined(const std::vector<std::string>& args) {
  std::string out;
  for (const auto& a : args) {
    if (!out.empty()) out += ' ';
    out += a;
  }
  return out;
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("expected name=value, got '" + text + "'");
  return {std::string(trim(std::string_view(text).substr(0, eq))),
          std::string(trim(std::string_view(text).substr(eq + 1)))};
}

/// Parameter (and `omega`) overrides of the form name=value.
ReactionNetwork with_overrides(const ReactionNetwork& net, const std::vector<std::string>& sets) {
  auto params = net.parameters();
  double omega = net.omega();
  for (const auto& s : sets) {
    const auto [name, text] = split_assignment(s);
    double v = 0.0;
    if (!parse_double(text, v)) throw UsageError("bad number in --set " + s);
    if (name == "omega") {
      if (!(v > 0.0)) throw UsageError("omega must be > 0");
      omega = v;
      continue;
    }
    auto idx = net.parameter_index(name);
    if (!idx) throw UsageError("--set names unknown parameter '" + name + "'");
    params[static_cast<std::size_t>(*idx)].value = v;
  }
  return ReactionNetwork(net.species(), params, net.reactions(), omega, net.initial());
}

ReactionNetwork load_model_checked(const std::string& path) {
  try {
    return load_model(path);
  } catch (const ParseError& e) {
    throw UsageError(path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double process_cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

/// Manifest: deterministic fields at the top level, run-dependent ones under "timing".
Json manifest_base(const std::string& command, std::uint64_t config_hash, const ReactionNetwork& net,
                   std::optional<std::uint64_t> seed) {
  Json m;
  m["command"] = command;
  m["config_hash"] = hex64(config_hash);
  m["model_hash"] = hex64(model_hash(net));
  m["seed"] = seed ? Json(*seed) : Json(nullptr);
  m["version"] = kVersion;
  return m;
}

void write_json(const std::filesystem::path& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }

std::filesystem::path manifest_path(const std::filesystem::path& out) {
  return std::filesystem::path(out.string() + ".manifest.json");
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string model;
  std::string method = "ssa";
  double t0 = 0.0;
  double t_end = 0.0;
  double dt = 0.0;
  int replicates = 1;
  std::uint64_t seed = 1;
  std::string start = "initial";
  int corrections = 4;
  std::string out;
  std::vector<std::string> sets;
};

Dataset simulate_ode(const ReactionNetwork& net, const Vec& theta, const Vec& init,
                     const std::vector<double>& grid) {
  Dopri5 solver(drift_rhs(net, theta));
  solver.reset(grid.front(), init);
  Trajectory tr;
  tr.times = grid;
  tr.states.resize(static_cast<Eigen::Index>(grid.size()), net.n_species());
  Vec y(net.n_species());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    while (solver.t() < grid[k]) solver.step(grid.back());
    if (grid[k] == solver.t()) {
      y = solver.y();
    } else {
      solver.dense(grid[k], y);
    }
    tr.states.row(static_cast<Eigen::Index>(k)) = net.omega() * y.transpose();
  }
  return {tr};
}

int cmd_simulate(const SimulateArgs& a, const std::string& command, std::ostream& out) {
  const auto wall = std::chrono::steady_clock::now();
  const ReactionNetwork net = with_overrides(load_model_checked(a.model), a.sets);
  if (!(a.dt > 0.0)) throw UsageError("--dt must be > 0");
  if (!(a.t_end > a.t0)) throw UsageError("--t-end must exceed --t0");
  if (a.replicates < 1) throw UsageError("--replicates must be >= 1");
  const Vec theta = net.parameter_values();
  const Vec init = net.initial_concentrations();
  const double omega = net.omega();
  const auto grid = uniform_grid(a.t0, a.t_end, a.dt);
  const auto n = net.n_species();

  auto need_cycle = [&] { return find_limit_cycle(net, theta, init); };

  Dataset data;
  std::optional<double> period;
  if (a.method == "ode") {
    if (a.start != "initial") throw UsageError("--method ode supports --start initial only");
    data = simulate_ode(net, theta, init, grid);
  } else if (a.method == "ssa") {
    Vec x0;
    if (a.start == "cycle") {
      const auto lc = need_cycle();
      period = lc.period();
      x0 = (omega * lc.anchor()).array().round().matrix();
    } else {
      x0 = (omega * init).array().round().matrix();
    }
    data = simulate_ssa_replicates(net, theta, x0, grid, a.seed, a.replicates);
  } else if (a.method == "lna") {
    const Vec phi0 = init;
    const TransientPath path(net, theta, phi0, a.t_end - a.t0);
    for (int i = 0; i < a.replicates; ++i) {
      auto tr = simulate_lna(path, omega, NoiseInit::zero(n), grid, a.seed + static_cast<std::uint64_t>(i));
      tr.series_id = i;
      data.push_back(std::move(tr));
    }
  } else if (a.method == "pclna") {
    const auto lc = need_cycle();
    period = lc.period();
    PclnaSimOptions opts;
    opts.corrections_per_cycle = a.corrections;
    NoiseInit xi0 = NoiseInit::zero(n);
    if (a.start == "initial") {
      const auto pc = phase_correct(lc, omega * init);
      opts.s0 = pc.s_star;
      xi0.mean = pc.kappa;
    }
    for (int i = 0; i < a.replicates; ++i) {
      auto tr = simulate_pclna(lc, xi0, grid, opts, a.seed + static_cast<std::uint64_t>(i));
      tr.series_id = i;
      data.push_back(std::move(tr));
    }
  } else {
    throw UsageError("unknown --method '" + a.method + "' (ssa, pclna, ode, lna)");
  }

  write_file(a.out, data_csv(net.species(), data));
  Json m = manifest_base(command, fnv1a(command), net, a.method == "ode" ? std::nullopt : std::optional(a.seed));
  m["method"] = a.method;
  m["start"] = a.start;
  m["replicates"] = a.method == "ode" ? 1 : a.replicates;
  m["grid"] = {{"t0", a.t0}, {"t_end", a.t_end}, {"dt", a.dt}, {"points", grid.size()}};
  if (a.method == "pclna") m["corrections_per_cycle"] = a.corrections;
  if (period) m["period"] = *period;
  m["outputs"] = {std::filesystem::path(a.out).filename().string()};
  m["timing"] = {{"wall_clock_seconds", seconds_since(wall)}};
  write_json(manifest_path(a.out), m);
  out << "wrote " << data.size() << " series to " << a.out << '\n';
  return 0;
}

// ------------------------------------------------------------- sensitivity

struct SensitivityArgs {
  std::string model;
  std::string scale = "log";
  int sections = 12;
  int cycles = 3;
  int top = 10;
  std::string out_json;
  std::string out_csv;
  std::optional<double> fd_step;
  std::vector<std::string> sets;
};

int cmd_sensitivity(const SensitivityArgs& a, const std::string& command, std::ostream& out,
                    std::ostream& err) {
  const auto wall = std::chrono::steady_clock::now();
  const ReactionNetwork net = with_overrides(load_model_checked(a.model), a.sets);
  if (a.sections < 1 || a.cycles < 1) throw UsageError("--sections and --cycles must be >= 1");
  if (a.top < 1) throw UsageError("--top must be >= 1");
  FimOptions opts;
  opts.scale = parse_scale(a.scale);
  opts.design.n_sections = a.sections;
  opts.design.n_cycles = a.cycles;
  opts.fd_step = a.fd_step;
  const Vec theta = net.parameter_values();
  const auto lc = find_limit_cycle(net, theta, net.initial_concentrations());
  const auto t_cycle = seconds_since(wall);
  const FimResult res = fim(net, theta, lc, opts);
  int top = a.top;
  if (top > net.n_params()) {
    err << "note: --top " << top << " exceeds the " << net.n_params() << " parameters; using "
        << net.n_params() << '\n';
    top = static_cast<int>(net.n_params());
  }
  std::vector<std::string> names;
  for (const auto& p : net.parameters()) names.push_back(p.name);
  const auto rep = sensitivity_report(res, names, top);
  const std::string json = report_json(res, rep);
  for (const auto& w : res.warnings) err << "warning: " << w << '\n';

  std::vector<std::string> outputs;
  if (!a.out_json.empty()) {
    write_file(a.out_json, json);
    outputs.push_back(std::filesystem::path(a.out_json).filename().string());
  }
  if (!a.out_csv.empty()) {
    write_file(a.out_csv, report_csv(rep));
    outputs.push_back(std::filesystem::path(a.out_csv).filename().string());
  }
  if (outputs.empty()) {
    out << json;
    return 0;
  }
  Json m = manifest_base(command, fnv1a(command), net, std::nullopt);
  m["scale"] = a.scale;
  m["design"] = {{"sections", a.sections}, {"cycles", a.cycles}};
  m["period"] = lc.period();
  m["outputs"] = outputs;
  m["timing"] = {{"wall_clock_seconds", seconds_since(wall)},
                 {"stages", {{"cycle", t_cycle}, {"fim", seconds_since(wall) - t_cycle}}}};
  write_json(manifest_path(a.out_json.empty() ? a.out_csv : a.out_json), m);
  out << "wrote sensitivity report";
  for (const auto& o : outputs) out << ' ' << o;
  out << '\n';
  return 0;
}

// ------------------------------------------------------------------- infer

struct InferArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string backend;
  std::string out;
  std::optional<int> threads;
  std::vector<std::string> sets;
};

std::string canonical_config(const ConfigFile& cfg) {
  std::string s;
  for (const auto& name : cfg.section_names()) {
    s += "[" + name + "]\n";
    auto entries = cfg.section(name);
    std::sort(entries.begin(), entries.end(), [](const auto& x, const auto& y) { return x.key < y.key; });
    for (const auto& e : entries) s += e.key + "=" + e.value + "\n";
  }
  return s;
}

Mat fim_proposal_cov(const InferenceProblem& problem, const Vec& init_raw, Scale scale, double mult) {
  const auto& net = problem.network();
  const auto& names = problem.names();
  const Vec theta = problem.full_theta(init_raw);
  const auto lc = find_limit_cycle(net, theta, net.initial_concentrations());
  FimOptions opts;
  opts.scale = scale;
  const FimResult res = fim(net, theta, lc, opts);
  const auto d = static_cast<Eigen::Index>(names.size());
  std::vector<Eigen::Index> rows;
  for (Eigen::Index k = 0; k < d; ++k) {
    if (names[static_cast<std::size_t>(k)] != "sigma") rows.push_back(k);
  }
  Mat sub(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int pi = *net.parameter_index(names[static_cast<std::size_t>(rows[i])]);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const int pj = *net.parameter_index(names[static_cast<std::size_t>(rows[j])]);
      sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = res.fim(pi, pj);
    }
  }
  const double ridge = 1e-8 * std::max(sub.trace(), 1e-300);
  const Mat inv = (sub + ridge * Mat::Identity(sub.rows(), sub.cols())).inverse();
  const Vec psi = to_sampling(init_raw, scale);
  Mat cov = Mat::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k) cov(k, k) = std::pow(0.01 * std::abs(psi(k)) + 1e-4, 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      cov(rows[i], rows[j]) = mult * inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  symmetrize(cov);
  return cov;
}

int cmd_infer(const InferArgs& a, const std::string& command, std::ostream& out, std::ostream& err) {
  const auto wall = std::chrono::steady_clock::now();
  const std::filesystem::path cfg_path(a.config);
  ConfigFile cfg;
  InferConfig c;
  try {
    cfg = ConfigFile::parse(read_file(cfg_path));
    if (a.seed) cfg.set("sampler", "seed", std::to_string(*a.seed));
    if (!a.backend.empty()) cfg.set("likelihood", "backend", a.backend);
    if (a.threads) cfg.set("sampler", "threads", std::to_string(*a.threads));
    for (const auto& s : a.sets) {
      const auto [key, value] = split_assignment(s);
      const auto dot = key.find('.');
      if (dot == std::string::npos) throw UsageError("--set expects section.key=value, got '" + s + "'");
      cfg.set(key.substr(0, dot), key.substr(dot + 1), value);
    }
    c = parse_infer_config(cfg, cfg_path.parent_path());
  } catch (const ParseError& e) {
    throw UsageError(a.config + ":" + std::to_string(e.line()) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(a.config + ": " + e.what());
  }
  if (!a.out.empty()) c.output_dir = a.out;

  const InferenceProblem problem = [&] {
    try {
      return InferenceProblem::from_config(c);
    } catch (const ParseError& e) {
      throw UsageError("line " + std::to_string(e.line()) + ": " + e.what());
    }
  }();
  const auto& names = problem.names();
  const Vec init = problem.initial_point();
  for (std::size_t k = 0; k < names.size(); ++k) {
    const double v = init(static_cast<Eigen::Index>(k));
    if (!std::isfinite(c.priors[k].log_density(v))) {
      throw UsageError("initial value " + format_double(v) + " of '" + names[k] + "' is outside the support of " +
                       c.priors[k].describe() + "; widen the prior or supply an [initial] value");
    }
    if (c.scale == Scale::log && !(v > 0.0)) {
      throw UsageError("initial value of '" + names[k] + "' must be > 0 on the log scale");
    }
  }
  FilterResult info;
  const double ll0 = problem.loglik(init, &info);
  if (!std::isfinite(ll0)) {
    throw NumericalError("log-likelihood is not finite at the initial point (" + info.diagnostic +
                         "); supply different [initial] values or check the data");
  }

  PtConfig pt = c.pt;
  if (c.fim_proposal) pt.initial_cov = fim_proposal_cov(problem, init, c.scale, c.fim_proposal_scale);
  const double t_setup = seconds_since(wall);

  const LogLikFn loglik = [&](const Vec& theta) { return problem.loglik(theta); };
  const TargetFn target = [&](const Vec& psi) { return log_posterior(loglik, c.priors, psi, c.scale); };
  const long calls_before = problem.timer().calls();
  const double lik_cpu_before = problem.timer().total_seconds();
  const double cpu0 = process_cpu_seconds();
  const auto t_sample0 = std::chrono::steady_clock::now();
  const PtResult res = pt_run(target, to_sampling(init, c.scale), pt);
  const double sampling_cpu = process_cpu_seconds() - cpu0;
  const double t_sampling = seconds_since(t_sample0);
  const auto t_out0 = std::chrono::steady_clock::now();

  std::filesystem::create_directories(c.output_dir);
  std::vector<std::string> outputs;
  std::string cold_text;
  for (std::size_t j = 0; j < res.chains.size(); ++j) {
    const auto& ch = res.chains[j];
    Mat raw(ch.states.rows(), ch.states.cols());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) raw.row(i) = to_raw(ch.states.row(i).transpose(), c.scale).transpose();
    const std::string text = chain_csv(names, ch.beta, raw, ch.energies);
    const std::string file = "chain_" + std::to_string(j) + ".csv";
    write_file(c.output_dir / file, text);
    outputs.push_back(file);
    if (j == 0) cold_text = text;
  }
  std::ostringstream swaps;
  swaps << "pair,beta_cold,beta_hot,attempts,accepts,rate\n";
  Json swap_json = Json::array();
  for (std::size_t j = 0; j < res.swap_attempts.size(); ++j) {
    const double rate = res.swap_attempts[j] ? static_cast<double>(res.swap_accepts[j]) /
                                                   static_cast<double>(res.swap_attempts[j])
                                             : 0.0;
    swaps << j << ',' << format_double(pt.betas[j]) << ',' << format_double(pt.betas[j + 1]) << ','
          << res.swap_attempts[j] << ',' << res.swap_accepts[j] << ',' << format_double(rate) << '\n';
    swap_json.push_back(rate);
  }
  write_file(c.output_dir / "swaps.csv", swaps.str());
  outputs.push_back("swaps.csv");

  const long block = pt.thin_to_block_ends ? pt.n_iter : 0;
  const double alpha = 0.05;
  const Mat kept = kept_samples(parse_chain_csv(cold_text), pt.burn_in, block);
  const auto rows = summarize(kept, names, alpha, Scale::raw);
  write_file(c.output_dir / "summary.json", summary_json(rows, alpha, kept.rows()));
  outputs.push_back("summary.json");

  const long calls = problem.timer().calls() - calls_before;
  const double lik_cpu = problem.timer().total_seconds() - lik_cpu_before;
  const long iterations = static_cast<long>(pt.n_iter) * pt.n_swaps;

  Json m = manifest_base(command, fnv1a(canonical_config(cfg)), problem.network(), pt.seed);
  m["config"] = std::filesystem::absolute(cfg_path).lexically_normal().string();
  m["backend"] = std::string(to_string(c.backend));
  m["scale"] = std::string(to_string(c.scale));
  m["gamma_convention"] = "shape-rate (Gamma(a, b) has mean a / b)";
  Json priors = Json::object();
  for (std::size_t k = 0; k < names.size(); ++k) priors[names[k]] = c.priors[k].describe();
  m["priors"] = priors;
  m["betas"] = pt.betas;
  m["n_iter"] = pt.n_iter;
  m["n_swaps"] = pt.n_swaps;
  m["n_adapt"] = pt.n_adapt;
  m["burn_in"] = pt.burn_in;
  m["summary_block"] = block;
  m["threads"] = pt.threads;
  m["initial_loglik"] = ll0;
  m["target_evaluations"] = res.target_evaluations;
  m["likelihood_calls"] = calls;
  m["ode_integrations"] = problem.ode_integrations();
  m["swap_acceptance"] = swap_json;
  std::vector<double> acc;
  for (const auto& ch : res.chains) acc.push_back(static_cast<double>(ch.accepted) / static_cast<double>(iterations));
  m["chain_acceptance"] = acc;
  m["outputs"] = outputs;
  const auto hist = problem.timer().histogram();
  m["timing"] = {
      {"wall_clock_seconds", seconds_since(wall)},
      {"stages", {{"setup", t_setup}, {"sampling", t_sampling}, {"output", seconds_since(t_out0)}}},
      {"sampling_cpu_seconds", sampling_cpu},
      {"mean_iteration_cpu_seconds", sampling_cpu / static_cast<double>(iterations)},
      {"likelihood_cpu",
       {{"calls", calls},
        {"total_seconds", lik_cpu},
        {"mean_seconds", calls ? lik_cpu / static_cast<double>(calls) : 0.0},
        {"histogram_log2_microseconds", std::vector<long>(hist.begin(), hist.end())}}}};
  write_json(c.output_dir / "manifest.json", m);
  out << "wrote " << outputs.size() << " files to " << c.output_dir.string() << '\n';
  for (const auto& r : rows) {
    out << "  " << r.name << ": mean " << r.mean << ", " << (1.0 - alpha) * 100 << "% CI [" << r.ci_low
        << ", " << r.ci_high << "], ESS " << r.ess.ess << '\n';
  }
  (void)err;
  return 0;
}

// --------------------------------------------------------------- summarize

struct SummarizeArgs {
  std::vector<std::string> chains;
  long burn_in = 10000;
  long block = 0;
  double alpha = 0.05;
  std::string out;
};

int cmd_summarize(const SummarizeArgs& a, std::ostream& out) {
  if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
  if (a.burn_in < 0 || a.block < 0) throw UsageError("--burn-in and --block must be >= 0");
  std::vector<std::string> names;
  Mat all;
  for (const auto& path : a.chains) {
    ChainFile cf;
    try {
      cf = parse_chain_csv(read_file(path));
    } catch (const ParseError& e) {
      throw UsageError(path + ": row " + std::to_string(e.line()) + ": " + e.what());
    }
    if (!names.empty() && cf.names != names) throw UsageError(path + ": parameter columns differ between chain files");
    names = cf.names;
    const Mat kept = kept_samples(cf, a.burn_in, a.block);
    Mat joined(all.rows() + kept.rows(), kept.cols());
    if (all.rows() > 0) joined.topRows(all.rows()) = all;
    joined.bottomRows(kept.rows()) = kept;
    all = std::move(joined);
  }
  if (all.rows() < 10) throw UsageError("fewer than 10 beta = 1 samples remain after burn-in");
  const auto rows = summarize(all, names, a.alpha, Scale::raw);
  const std::string json = summary_json(rows, a.alpha, all.rows());
  if (a.out.empty()) {
    out << json;
  } else {
    write_file(a.out, json);
  }
  return 0;
}

}  // namespace

// ------------------------------------------------------------ chain files

std::string chain_csv(const std::vector<std::string>& names, double beta, const Mat& raw_values,
                      const std::vector<double>& energies) {
  std::string s = "iter,beta";
  for (const auto& n : names) s += "," + n;
  s += ",energy\n";
  const std::string b = format_double(beta);
  for (Eigen::Index i = 0; i < raw_values.rows(); ++i) {
    s += std::to_string(i) + "," + b;
    for (Eigen::Index k = 0; k < raw_values.cols(); ++k) s += "," + format_double(raw_values(i, k));
    s += "," + format_double(energies[static_cast<std::size_t>(i)]) + "\n";
  }
  return s;
}

ChainFile parse_chain_csv(std::string_view text) {
  ChainFile cf;
  std::istringstream in{std::string(text)};
  std::string line;
  int row = 0;
  if (!std::getline(in, line)) throw ParseError("empty chains file", 1, 1);
  ++row;
  auto header = split(trim(line), ',');
  if (header.size() < 4 || trim(header[0]) != "iter" || trim(header[1]) != "beta" ||
      trim(header.back()) != "energy") {
    throw ParseError("header must be iter,beta,<params...>,energy", row, 1);
  }
  for (std::size_t k = 2; k + 1 < header.size(); ++k) cf.names.emplace_back(trim(header[k]));
  const auto d = static_cast<Eigen::Index>(cf.names.size());
  std::vector<std::vector<double>> values;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()), row, 1);
    }
    std::vector<double> nums(fields.size());
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (!parse_double(fields[k], nums[k])) {
        throw ParseError("bad number '" + std::string(trim(fields[k])) + "'", row, static_cast<int>(k + 1));
      }
    }
    if (nums[0] != std::floor(nums[0]) || nums[0] < 0) throw ParseError("iter must be a non-negative integer", row, 1);
    cf.iter.push_back(static_cast<long>(nums[0]));
    cf.beta.push_back(nums[1]);
    cf.energy.push_back(nums.back());
    values.emplace_back(nums.begin() + 2, nums.end() - 1);
  }
  cf.values.resize(static_cast<Eigen::Index>(values.size()), d);
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k) cf.values(static_cast<Eigen::Index>(i), k) = values[i][static_cast<std::size_t>(k)];
  }
  return cf;
}

Mat kept_samples(const ChainFile& chain, long burn_in, long block) {
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < chain.iter.size(); ++i) {
    if (chain.beta[i] != 1.0 || chain.iter[i] < burn_in) continue;
    if (block > 0 && (chain.iter[i] + 1) % block != 0) continue;
    keep.push_back(static_cast<Eigen::Index>(i));
  }
  Mat out(static_cast<Eigen::Index>(keep.size()), chain.values.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = chain.values.row(keep[i]);
  return out;
}

std::string summary_json(const std::vector<ParamSummary>& rows, double alpha, long n_samples) {
  Json j;
  j["alpha"] = alpha;
  j["n_samples"] = n_samples;
  j["gamma_convention"] = "shape-rate";
  Json params = Json::array();
  for (const auto& r : rows) {
    params.push_back({{"name", r.name},
                      {"mean", r.mean},
                      {"sd", r.sd},
                      {"ci_low", r.ci_low},
                      {"ci_high", r.ci_high},
                      {"cov", r.cov},
                      {"ess", r.ess.ess},
                      {"ess_super_efficient", r.ess.super_efficient},
                      {"constant", r.ess.constant}});
  }
  j["parameters"] = params;
  return j.dump(2) + "\n";
}

// ----------------------------------------------------------------- driver

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation, sensitivity analysis and Bayesian inference for oscillatory reaction networks", "pclna"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate trajectories (data CSV)");
  s->add_option("--model", sim.model, "Model file")->required();
  s->add_option("--method", sim.method, "ssa, pclna, ode or lna")->check(CLI::IsMember({"ssa", "pclna", "ode", "lna"}));
  s->add_option("--t0", sim.t0, "Start time");
  s->add_option("--t-end", sim.t_end, "End time")->required();
  s->add_option("--dt", sim.dt, "Output spacing")->required();
  s->add_option("--replicates", sim.replicates, "Number of series");
  s->add_option("--seed", sim.seed, "Base seed (replicate i uses seed + i)");
  s->add_option("--start", sim.start, "initial or cycle")->check(CLI::IsMember({"initial", "cycle"}));
  s->add_option("--corrections", sim.corrections, "pcLNA corrections per cycle");
  s->add_option("--out", sim.out, "Output CSV")->required();
  s->add_option("--set", sim.sets, "Override a parameter or omega: name=value");

  SensitivityArgs sen;
  auto* f = app.add_subcommand("sensitivity", "Fisher-information sensitivity report");
  f->add_option("--model", sen.model, "Model file")->required();
  f->add_option("--scale", sen.scale, "raw or log")->check(CLI::IsMember({"raw", "log"}));
  f->add_option("--sections", sen.sections, "Sections per cycle");
  f->add_option("--cycles", sen.cycles, "Number of cycles");
  f->add_option("--top", sen.top, "Singular values reported");
  f->add_option("--out-json", sen.out_json, "JSON report");
  f->add_option("--out-csv", sen.out_csv, "CSV coefficient table");
  f->add_option("--fd-step", sen.fd_step, "Finite-difference step");
  f->add_option("--set", sen.sets, "Override a parameter or omega: name=value");

  InferArgs inf;
  auto* i = app.add_subcommand("infer", "Parallel-tempering posterior sampling");
  i->add_option("--config", inf.config, "Inference config")->required();
  i->add_option("--seed", inf.seed, "Override [sampler] seed");
  i->add_option("--backend", inf.backend, "Override [likelihood] backend");
  i->add_option("--out", inf.out, "Override [output] directory");
  i->add_option("--threads", inf.threads, "Override [sampler] threads");
  i->add_option("--set", inf.sets, "Override a config entry: section.key=value");

  SummarizeArgs sum;
  auto* m = app.add_subcommand("summarize", "Posterior summary from chain files");
  m->add_option("--chains", sum.chains, "Chain CSV files (beta = 1 rows are used)")->required();
  m->add_option("--burn-in", sum.burn_in, "Iterations dropped");
  m->add_option("--block", sum.block, "Keep only block ends (iter + 1 divisible by block)");
  m->add_option("--alpha", sum.alpha, "1 - credible level");
  m->add_option("--out", sum.out, "Output JSON (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return 1;
  }

  const std::string command = "pclna " + joined(args);
  try {
    if (s->parsed()) return cmd_simulate(sim, command, out);
    if (f->parsed()) return cmd_sensitivity(sen, command, out, err);
    if (i->parsed()) return cmd_infer(inf, command, out, err);
    if (m->parsed()) return cmd_summarize(sum, out);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace pclna
