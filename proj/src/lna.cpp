#include "pclna/lna.hpp"

#include "pclna/io.hpp"

#include <cmath>
#include <memory>
#include <sstream>

namespace pclna {

namespace {

struct RhsWork {
  Vec phi, r;
  Mat dr, J, S, Ar, JV;
};

// Tiny dense products use the coefficient-based kernel (no GEMM dispatch).
void jacobian_and_rates(const ReactionNetwork& net, const Vec& theta, const double* y, RhsWork& w) {
  const auto n = net.n_species();
  w.phi = Eigen::Map<const Vec>(y, n);
  net.rates(w.phi, theta, w.r);
  net.rate_gradient(w.phi, theta, w.dr);
  w.J.resize(n, n);
  w.J.noalias() = net.stoich().lazyProduct(w.dr);
}

// phi' = F, C' = J C (no V block)
OdeRhs phi_c_rhs(const ReactionNetwork& net, const Vec& theta) {
  auto work = std::make_shared<RhsWork>();
  const ReactionNetwork* np = &net;
  return [np, theta, work](double, const Vec& y, Vec& dy) {
    const auto n = np->n_species();
    jacobian_and_rates(*np, theta, y.data(), *work);
    dy.resize(y.size());
    dy.head(n).noalias() = np->stoich().lazyProduct(work->r);
    Eigen::Map<const Mat> C(y.data() + n, n, n);
    Eigen::Map<Mat> dC(dy.data() + n, n, n);
    dC.noalias() = work->J.lazyProduct(C);
  };
}

Mat block(const Vec& y, Eigen::Index offset, Eigen::Index n) {
  return Eigen::Map<const Mat>(y.data() + offset, n, n);
}

Vec pack_initial(const Vec& phi0, bool with_v) {
  const auto n = phi0.size();
  Vec y = Vec::Zero(n + n * n * (with_v ? 2 : 1));
  y.head(n) = phi0;
  for (Eigen::Index i = 0; i < n; ++i) y(n + i * n + i) = 1.0;
  return y;
}

// Extracts rows [offset, offset + rows) of a packed dense solution.
DenseSolution slice(const DenseSolution& d, Eigen::Index offset, Eigen::Index rows) {
  return DenseSolution(d.t0(), d.t1(), d.values().middleRows(offset, rows),
                       d.derivs().middleRows(offset, rows));
}

}  // namespace

OdeRhs lna_rhs(const ReactionNetwork& net, const Vec& theta, bool zero_noise) {
  auto work = std::make_shared<RhsWork>();
  const ReactionNetwork* np = &net;
  return [np, theta, work, zero_noise](double, const Vec& y, Vec& dy) {
    const auto n = np->n_species();
    const Mat& A = np->stoich();
    RhsWork& w = *work;
    jacobian_and_rates(*np, theta, y.data(), w);
    dy.resize(y.size());
    dy.head(n).noalias() = A.lazyProduct(w.r);
    Eigen::Map<const Mat> C(y.data() + n, n, n);
    Eigen::Map<const Mat> V(y.data() + n + n * n, n, n);
    Eigen::Map<Mat> dC(dy.data() + n, n, n);
    Eigen::Map<Mat> dV(dy.data() + n + n * n, n, n);
    dC.noalias() = w.J.lazyProduct(C);
    // V is symmetric, so V J^T = (J V)^T.
    w.JV.resize(n, n);
    w.JV.noalias() = w.J.lazyProduct(V);
    dV = w.JV + w.JV.transpose();
    if (!zero_noise) {
      w.Ar.resize(n, A.cols());
      w.Ar.noalias() = A * w.r.asDiagonal();
      w.S.resize(n, n);
      w.S.noalias() = w.Ar.lazyProduct(A.transpose());
      dV += w.S;
    }
  };
}

OdeRhs drift_rhs(const ReactionNetwork& net, const Vec& theta) {
  auto work = std::make_shared<RhsWork>();
  const ReactionNetwork* np = &net;
  return [np, theta, work](double, const Vec& y, Vec& dy) {
    np->rates(y, theta, work->r);
    dy.resize(y.size());
    dy.noalias() = np->stoich().lazyProduct(work->r);
  };
}

LnaStep integrate_lna(const ReactionNetwork& net, const Vec& theta, const Vec& phi0, double dt,
                      const OdeOptions& options, bool zero_noise, long* rhs_count) {
  const auto n = phi0.size();
  LnaStep out;
  if (dt <= 0.0) {
    out.phi = phi0;
    out.C = Mat::Identity(n, n);
    out.V = Mat::Zero(n, n);
    return out;
  }
  const Vec y = integrate_to(lna_rhs(net, theta, zero_noise), 0.0, pack_initial(phi0, true), dt,
                             options, rhs_count);
  out.phi = y.head(n);
  out.C = block(y, n, n);
  out.V = block(y, n + n * n, n);
  symmetrize(out.V);
  return out;
}

DenseSolution solve_ode(const ReactionNetwork& net, const Vec& theta, const Vec& phi0, double t0,
                        double t1, Eigen::Index points, const OdeOptions& options) {
  return integrate_dense(drift_rhs(net, theta), t0, phi0, t1, points, options);
}

// ---------------------------------------------------------------------------

LimitCycleBundle::LimitCycleBundle(const ReactionNetwork& net, const Vec& theta, double period,
                                   Vec anchor, DenseSolution phi, DenseSolution C0,
                                   DenseSolution V0)
    : net_(net),
      theta_(theta),
      period_(period),
      anchor_(std::move(anchor)),
      phi_(std::move(phi)),
      C0_(std::move(C0)),
      V0_(std::move(V0)) {
  const auto n = phi_.dim();
  const auto last = C0_.points() - 1;
  monodromy_ = Eigen::Map<const Mat>(C0_.values().col(last).data(), n, n);
  v_period_ = Eigen::Map<const Mat>(V0_.values().col(last).data(), n, n);
  symmetrize(v_period_);
}

double LimitCycleBundle::wrap(double s) const {
  double w = s - period_ * std::floor(s / period_);
  if (w >= period_ || w < 0.0) w = 0.0;
  return w;
}

void LimitCycleBundle::phi(double s, Vec& out) const { phi_.eval(wrap(s), out); }

void LimitCycleBundle::c0(double s, Mat& out) const {
  const auto n = dim();
  thread_local Vec buf;
  C0_.eval(s, buf);
  out = Eigen::Map<const Mat>(buf.data(), n, n);
}

void LimitCycleBundle::v0(double s, Mat& out) const {
  const auto n = dim();
  thread_local Vec buf;
  V0_.eval(s, buf);
  out = Eigen::Map<const Mat>(buf.data(), n, n);
  symmetrize(out);
}

void LimitCycleBundle::transition(double s0, double dt, Mat& C, Mat& V) const {
  const auto n = dim();
  if (dt < 0.0) throw std::invalid_argument("transition duration must be nonnegative");
  if (dt == 0.0) {
    C = Mat::Identity(n, n);
    V = Mat::Zero(n, n);
    return;
  }
  s0 = wrap(s0);
  const double s1 = s0 + dt;
  double k_real = std::floor(s1 / period_);
  double st = s1 - k_real * period_;
  if (st >= period_) {
    st -= period_;
    k_real += 1.0;
  }
  if (st < 0.0) st = 0.0;
  const auto k = static_cast<long>(k_real);

  Mat c_st, v_st, c_s0, v_s0;
  c0(st, c_st);
  v0(st, v_st);
  c0(s0, c_s0);
  v0(s0, v_s0);

  // whole cycles: M^k and V(0, k period)
  Mat Mk = Mat::Identity(n, n);
  Mat Vk = Mat::Zero(n, n);
  for (long i = 0; i < k; ++i) {
    Vk = monodromy_ * Vk * monodromy_.transpose() + v_period_;
    Mk = Mk * monodromy_;
  }
  const Mat c_s1 = c_st * Mk;
  Mat v_s1 = c_st * Vk * c_st.transpose() + v_st;

  Eigen::PartialPivLU<Mat> lu(c_s0);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw NumericalError("C(0, s0) is numerically singular (reciprocal condition " +
                         std::to_string(rcond) + ")");
  }
  C = c_s1 * lu.inverse();
  const Mat carried = C * v_s0 * C.transpose();
  V = v_s1 - carried;
  // roundoff of the difference scales with the terms, not with V
  repair_psd(V, 1e-8, std::max(std::abs(v_s1.trace()), std::abs(carried.trace())));
}

std::vector<std::complex<double>> LimitCycleBundle::floquet_multipliers() const {
  Eigen::EigenSolver<Mat> es(monodromy_, false);
  std::vector<std::complex<double>> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

// ---------------------------------------------------------------------------

LimitCycleBundle find_limit_cycle(const ReactionNetwork& net, const Vec& theta, const Vec& guess,
                                  const CycleOptions& options) {
  const auto n = net.n_species();
  if (guess.size() != n) throw std::invalid_argument("cycle guess has wrong length");
  const OdeRhs f = drift_rhs(net, theta);
  const OdeOptions& ode = options.ode;
  // Burn-in and section search only seed the shooting, which refines (p, T).
  OdeOptions coarse = ode;
  coarse.rtol = std::max(ode.rtol, 1e-6);
  coarse.atol = std::max(ode.atol, 1e-8);

  Vec y = guess;
  if (options.burn_in > 0.0) y = integrate_to(f, 0.0, y, options.burn_in, coarse);

  // Two successive maxima of the first species give (p, T) for shooting.
  Dopri5 solver(f, coarse);
  solver.reset(0.0, y);
  std::vector<double> crossings;
  Vec p, buf(n), dbuf(n);
  double g_prev = solver.dydt()(0);
  while (solver.t() < options.search_time && crossings.size() < 2) {
    solver.step(options.search_time);
    const double g = solver.dydt()(0);
    if (g_prev > 0.0 && g <= 0.0) {
      double lo = solver.t_prev(), hi = solver.t();
      for (int it = 0; it < 100 && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        solver.dense(mid, buf);
        f(mid, buf, dbuf);
        (dbuf(0) > 0.0 ? lo : hi) = mid;
      }
      crossings.push_back(hi);
      solver.dense(hi, buf);
      p = buf;
    }
    g_prev = g;
  }
  if (crossings.size() < 2) throw NoCycleError("no section crossing within the search time");
  double T = crossings[1] - crossings[0];

  auto drift_norm_small = [&](const Vec& x) {
    return net.drift(x, theta).norm() <= 1e-8 * (1.0 + x.norm());
  };
  if (drift_norm_small(p)) throw NoCycleError("trajectory settled at an equilibrium");

  // Newton shooting on (p, T) with the section condition F_1(p) = 0.
  const OdeRhs fc = phi_c_rhs(net, theta);
  const double tol = options.tol;
  bool converged = false;
  for (int it = 0; it < options.max_newton; ++it) {
    if (!(T > 0.0) || !p.allFinite()) break;
    const Vec yT = integrate_to(fc, 0.0, pack_initial(p, false), T, ode);
    const Vec phiT = yT.head(n);
    const Mat M = block(yT, n, n);
    const Vec res = phiT - p;
    const Vec Fp = net.drift(p, theta);
    const bool small = res.norm() <= tol * (1.0 + p.norm()) && std::abs(Fp(0)) <= tol * (1.0 + Fp.norm());
    Mat K = Mat::Zero(n + 1, n + 1);
    K.topLeftCorner(n, n) = M - Mat::Identity(n, n);
    K.topRightCorner(n, 1) = net.drift(phiT, theta);
    K.bottomLeftCorner(1, n) = net.jacobian(p, theta).row(0);
    Vec rhs(n + 1);
    rhs.head(n) = -res;
    rhs(n) = -Fp(0);
    const Vec step = K.fullPivLu().solve(rhs);
    if (!step.allFinite()) break;
    double damp = 1.0;
    if (std::abs(step(n)) > 0.5 * T) damp = 0.5 * T / std::abs(step(n));
    p += damp * step.head(n);
    T += damp * step(n);
    if (small && damp == 1.0 && step.head(n).norm() <= 1e-10 * (1.0 + p.norm()) &&
        std::abs(step(n)) <= 1e-10 * T) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NoCycleError("periodic orbit shooting did not converge");
  if (drift_norm_small(p)) throw NoCycleError("shooting converged to an equilibrium");

  const DenseSolution all = integrate_dense(lna_rhs(net, theta, options.zero_noise), 0.0,
                                            pack_initial(p, true), T, options.grid_points, ode);
  LimitCycleBundle lc(net, theta, T, p, slice(all, 0, n), slice(all, n, n * n),
                      slice(all, n + n * n, n * n));
  const Vec closing = all.values().col(all.points() - 1).head(n);
  lc.set_closure_residual((closing - p).norm());

  const auto mult = lc.floquet_multipliers();
  double best = INFINITY;
  std::size_t unit = 0;
  for (std::size_t i = 0; i < mult.size(); ++i) {
    if (std::abs(mult[i] - 1.0) < best) {
      best = std::abs(mult[i] - 1.0);
      unit = i;
    }
  }
  if (best > 1e-3) throw NoCycleError("monodromy has no unit Floquet multiplier");
  for (std::size_t i = 0; i < mult.size(); ++i) {
    if (i != unit && std::abs(mult[i]) >= 1.0) {
      lc.add_warning("cycle is not attractive: Floquet multiplier of modulus " +
                     format_double(std::abs(mult[i])));
    }
  }
  return lc;
}

// ---------------------------------------------------------------------------

TransientPath::TransientPath(const ReactionNetwork& net, const Vec& theta, const Vec& phi0,
                             double horizon, const OdeOptions& options, Eigen::Index points,
                             bool zero_noise)
    : net_(net), theta_(theta), options_(options), zero_noise_(zero_noise) {
  phi_ = solve_ode(net_, theta_, phi0, 0.0, horizon, points, options_);
}

void TransientPath::phi(double s, Vec& out) const { phi_.eval(s, out); }

void TransientPath::transition(double s0, double dt, Mat& C, Mat& V) const {
  LnaStep st = integrate_lna(net_, theta_, phi(s0), dt, options_, zero_noise_);
  C = std::move(st.C);
  V = std::move(st.V);
  if (dt > 0.0) repair_psd(V);
}

// ---------------------------------------------------------------------------
// Bundle cache. Layout (whitespace separated, one record per line):
//   pclna-bundle 1
//   model <16 hex digits>
//   theta <K values>
//   period <value>
//   anchor <n values>
//   grid <name> <rows> <points>      followed by <points> lines "value... deriv..."
// for name in phi, C, V.

namespace {

void write_grid(std::ostream& out, const char* name, const DenseSolution& d) {
  out << "grid " << name << ' ' << d.dim() << ' ' << d.points() << '\n';
  for (Eigen::Index j = 0; j < d.points(); ++j) {
    for (Eigen::Index i = 0; i < d.dim(); ++i) out << format_double(d.values()(i, j)) << ' ';
    for (Eigen::Index i = 0; i < d.dim(); ++i) {
      out << format_double(d.derivs()(i, j)) << (i + 1 < d.dim() ? " " : "");
    }
    out << '\n';
  }
}

bool read_vec(std::istream& in, const std::string& tag, Eigen::Index size, Vec& out) {
  std::string word;
  if (!(in >> word) || word != tag) return false;
  out.resize(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    if (!(in >> word) || !parse_double(word, out(i))) return false;
  }
  return true;
}

std::optional<DenseSolution> read_grid(std::istream& in, const std::string& name, double period) {
  std::string word, got;
  Eigen::Index rows = 0, points = 0;
  if (!(in >> word >> got >> rows >> points) || word != "grid" || got != name || points < 2) {
    return std::nullopt;
  }
  Mat values(rows, points), derivs(rows, points);
  for (Eigen::Index j = 0; j < points; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (!(in >> word) || !parse_double(word, values(i, j))) return std::nullopt;
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (!(in >> word) || !parse_double(word, derivs(i, j))) return std::nullopt;
    }
  }
  return DenseSolution(0.0, period, std::move(values), std::move(derivs));
}

std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex;
  ss.width(16);
  ss.fill('0');
  ss << v;
  return ss.str();
}

}  // namespace

void save_bundle(const std::filesystem::path& path, const LimitCycleBundle& lc) {
  std::ostringstream out;
  out << "pclna-bundle 1\n";
  out << "model " << hex64(model_hash(lc.network())) << '\n';
  out << "theta";
  for (Eigen::Index i = 0; i < lc.theta().size(); ++i) out << ' ' << format_double(lc.theta()(i));
  out << "\nperiod " << format_double(lc.period()) << "\nanchor";
  for (Eigen::Index i = 0; i < lc.anchor().size(); ++i) out << ' ' << format_double(lc.anchor()(i));
  out << '\n';
  write_grid(out, "phi", lc.phi_solution());
  write_grid(out, "C", lc.c_solution());
  write_grid(out, "V", lc.v_solution());
  write_file(path, out.str());
}

std::optional<LimitCycleBundle> load_bundle(const std::filesystem::path& path,
                                            const ReactionNetwork& net, const Vec& theta) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::istringstream in(read_file(path));
  std::string word, value;
  int version = 0;
  if (!(in >> word >> version) || word != "pclna-bundle" || version != 1) return std::nullopt;
  if (!(in >> word >> value) || word != "model" || value != hex64(model_hash(net))) return std::nullopt;
  Vec th, anchor, period(1);
  if (!read_vec(in, "theta", theta.size(), th) || th != theta) return std::nullopt;
  if (!read_vec(in, "period", 1, period)) return std::nullopt;
  if (!read_vec(in, "anchor", net.n_species(), anchor)) return std::nullopt;
  auto phi = read_grid(in, "phi", period(0));
  auto c = read_grid(in, "C", period(0));
  auto v = read_grid(in, "V", period(0));
  if (!phi || !c || !v) return std::nullopt;
  return LimitCycleBundle(net, theta, period(0), anchor, std::move(*phi), std::move(*c),
                          std::move(*v));
}

}  // namespace pclna
