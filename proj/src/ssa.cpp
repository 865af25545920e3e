#include "pclna/ssa.hpp"

#include "pclna/io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace pclna {

Trajectory simulate_ssa(const ReactionNetwork& net, const Vec& theta, const Vec& x0,
                        const std::vector<double>& grid, std::uint64_t seed) {
  if (grid.empty()) throw std::invalid_argument("simulation grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("simulation grid must be increasing");
  }
  if (x0.size() != net.n_species()) throw std::invalid_argument("initial state has wrong length");
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    if (x0(i) < 0 || x0(i) != std::floor(x0(i))) {
      throw std::invalid_argument("SSA initial state must be nonnegative integers");
    }
  }

  const auto n = net.n_species();
  const auto R = net.n_reactions();
  const double omega = net.omega();
  const Mat& A = net.stoich();
  const auto& reactions = net.reactions();

  Trajectory traj;
  traj.times = grid;
  traj.states.resize(static_cast<Eigen::Index>(grid.size()), n);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Vec x = x0, phi(n), w(R);
  double t = grid.front();
  std::size_t next = 0;
  while (next < grid.size() && grid[next] <= t) traj.states.row(static_cast<Eigen::Index>(next++)) = x;

  while (next < grid.size()) {
    phi = x / omega;
    net.rates(phi, theta, w);
    double total = 0.0;
    for (Eigen::Index j = 0; j < R; ++j) {
      double wj = omega * w(j);
      for (auto [s, k] : reactions[static_cast<std::size_t>(j)].reactants) {
        if (x(s) < k) wj = 0.0;
      }
      if (!(wj >= 0.0)) wj = 0.0;
      w(j) = wj;
      total += wj;
    }
    if (!std::isfinite(total)) throw NumericalError("propensity overflow in SSA");
    if (total <= 0.0) break;

    const double u1 = 1.0 - unif(rng);  // (0, 1]
    const double tau = -std::log(u1) / total;
    const double target = unif(rng) * total;
    Eigen::Index j = 0;
    double acc = w(0);
    while (acc <= target && j + 1 < R) acc += w(++j);
    while (w(j) == 0.0 && j > 0) --j;  // never fire a zero-propensity reaction

    const double t_next = t + tau;
    while (next < grid.size() && grid[next] < t_next) traj.states.row(static_cast<Eigen::Index>(next++)) = x;
    t = t_next;
    x += A.col(j);
  }
  while (next < grid.size()) traj.states.row(static_cast<Eigen::Index>(next++)) = x;
  return traj;
}

Dataset simulate_ssa_replicates(const ReactionNetwork& net, const Vec& theta, const Vec& x0,
                                const std::vector<double>& grid, std::uint64_t base_seed,
                                int replicates) {
  Dataset out;
  out.reserve(static_cast<std::size_t>(replicates));
  for (int i = 0; i < replicates; ++i) {
    out.push_back(simulate_ssa(net, theta, x0, grid, base_seed + static_cast<std::uint64_t>(i)));
    out.back().series_id = i;
  }
  return out;
}

void write_data_csv(std::ostream& out, const std::vector<std::string>& species,
                    const Dataset& data) {
  out << "series,time";
  for (const auto& s : species) out << ',' << s;
  out << '\n';
  for (const auto& tr : data) {
    if (tr.states.cols() != static_cast<Eigen::Index>(species.size())) {
      throw std::invalid_argument("trajectory width does not match species list");
    }
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      out << tr.series_id << ',' << format_double(tr.times[i]);
      for (Eigen::Index k = 0; k < tr.states.cols(); ++k) {
        out << ',' << format_double(tr.states(static_cast<Eigen::Index>(i), k));
      }
      out << '\n';
    }
  }
}

std::string data_csv(const std::vector<std::string>& species, const Dataset& data) {
  std::ostringstream ss;
  write_data_csv(ss, species, data);
  return ss.str();
}

Dataset parse_data_csv(std::string_view text, std::vector<std::string>* columns) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      for (auto& h : split(trim(line), ',')) header.emplace_back(trim(h));
      break;
    }
  }
  if (header.size() < 3 || header[0] != "series" || header[1] != "time") {
    throw ParseError("data CSV header must start with series,time and name at least one column",
                     lineno, 1);
  }
  const std::size_t width = header.size() - 2;

  Dataset out;
  std::map<int, std::size_t> seen;
  std::vector<std::vector<double>> rows;
  auto flush = [&] {
    if (rows.empty()) return;
    Trajectory& tr = out.back();
    tr.states.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t k = 0; k < width; ++k) {
        tr.states(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
      }
    }
    rows.clear();
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto cells = split(body, ',');
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(cells.size()),
                       lineno, 1);
    }
    double sid = 0.0, t = 0.0;
    if (!parse_double(cells[0], sid) || sid != std::floor(sid)) {
      throw ParseError("series id must be an integer", lineno, 1);
    }
    if (!parse_double(cells[1], t) || !std::isfinite(t)) throw ParseError("bad time value", lineno, 2);
    const int id = static_cast<int>(sid);
    if (out.empty() || out.back().series_id != id) {
      if (seen.count(id)) throw ParseError("rows of series " + std::to_string(id) + " are not contiguous", lineno, 1);
      flush();
      seen[id] = out.size();
      out.emplace_back();
      out.back().series_id = id;
    }
    Trajectory& tr = out.back();
    if (!tr.times.empty() && !(t > tr.times.back())) {
      throw ParseError("times must be strictly increasing within a series", lineno, 2);
    }
    tr.times.push_back(t);
    std::vector<double> row(width);
    for (std::size_t k = 0; k < width; ++k) {
      if (!parse_double(cells[k + 2], row[k])) {
        throw ParseError("bad value in column " + header[k + 2], lineno, static_cast<int>(k + 3));
      }
    }
    rows.push_back(std::move(row));
  }
  flush();
  if (columns) columns->assign(header.begin() + 2, header.end());
  return out;
}

Dataset select_columns(const Dataset& data, const std::vector<std::string>& available,
                       const std::vector<std::string>& wanted) {
  std::vector<Eigen::Index> idx;
  for (const auto& w : wanted) {
    auto it = std::find(available.begin(), available.end(), w);
    if (it == available.end()) throw std::invalid_argument("data has no column '" + w + "'");
    idx.push_back(static_cast<Eigen::Index>(it - available.begin()));
  }
  Dataset out = data;
  for (std::size_t s = 0; s < data.size(); ++s) {
    out[s].states.resize(data[s].states.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out[s].states.col(static_cast<Eigen::Index>(k)) = data[s].states.col(idx[k]);
    }
  }
  return out;
}

std::vector<double> uniform_grid(double t0, double t1, double dt) {
  if (!(dt > 0.0) || t1 < t0) throw std::invalid_argument("bad grid specification");
  std::vector<double> g;
  const auto steps = static_cast<long>(std::floor((t1 - t0) / dt + 1e-9));
  for (long i = 0; i <= steps; ++i) g.push_back(t0 + static_cast<double>(i) * dt);
  return g;
}

}  // namespace pclna
