#include "pclna/phase.hpp"

#include <cmath>

namespace pclna {

namespace {

struct PhaseEval {
  double g = 0.0;
  double dg = 0.0;
  double dist2 = 0.0;
};

class PhaseProblem {
 public:
  PhaseProblem(const LimitCycleBundle& lc, const Vec& y) : lc_(lc), y_(y) {}

  PhaseEval eval(double s) {
    lc_.phi(s, phi_);
    lc_.network().rates(phi_, lc_.theta(), r_);
    F_.noalias() = lc_.network().stoich() * r_;
    lc_.network().rate_gradient(phi_, lc_.theta(), dr_);
    JF_.noalias() = lc_.network().stoich() * (dr_ * F_);
    diff_ = y_ - phi_;
    return {diff_.dot(F_), -F_.squaredNorm() + diff_.dot(JF_), diff_.squaredNorm()};
  }

  double dist2(double s) {
    lc_.phi(s, phi_);
    return (y_ - phi_).squaredNorm();
  }

 private:
  const LimitCycleBundle& lc_;
  const Vec& y_;
  Vec phi_, r_, F_, JF_, diff_;
  Mat dr_;
};

// Returns true on convergence; s holds the last iterate either way.
bool newton(PhaseProblem& pb, double period, double& s, const PhaseOptions& opt) {
  const double h_grid = period / 512.0;
  PhaseEval ev = pb.eval(s);
  for (int it = 0; it < opt.max_iter; ++it) {
    if (std::abs(ev.g) <= opt.tol && ev.dg < 0.0) return true;
    double step = ev.dg < 0.0 ? -ev.g / ev.dg : (ev.g > 0.0 ? h_grid : -h_grid);
    step = std::clamp(step, -0.25 * period, 0.25 * period);
    double s_new = s + step;
    PhaseEval ev_new = pb.eval(s_new);
    for (int k = 0; k < 40 && ev_new.dist2 > ev.dist2 * (1.0 + 1e-14) + 1e-300; ++k) {
      step *= 0.5;
      s_new = s + step;
      ev_new = pb.eval(s_new);
    }
    const bool stalled = std::abs(s_new - s) <= 1e-15 * (period + std::abs(s));
    s = s_new;
    ev = ev_new;
    if (stalled) return ev.dg < 0.0 && std::abs(ev.g) <= 1e3 * opt.tol;
  }
  return std::abs(ev.g) <= opt.tol && ev.dg < 0.0;
}

}  // namespace

double phase(const LimitCycleBundle& lc, const Vec& y, std::optional<double> s_init,
             const PhaseOptions& options) {
  if (!y.allFinite()) throw std::invalid_argument("phase of a non-finite state");
  const double period = lc.period();
  PhaseProblem pb(lc, y);
  const Mat& nodes = lc.phi_solution().values();
  Eigen::Index best = 0;
  double best_d = INFINITY;
  for (Eigen::Index j = 0; j + 1 < nodes.cols(); ++j) {
    const double d = (nodes.col(j) - y).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  // a converged hint run is kept only if no node is closer, i.e. it found
  // the global minimum and not a neighbouring local one
  if (s_init) {
    double s = lc.wrap(*s_init);
    if (newton(pb, period, s, options) && pb.dist2(s) <= best_d) return lc.wrap(s);
  }
  double s = lc.phi_solution().node(best);
  const double s_grid = s;
  newton(pb, period, s, options);
  if (pb.dist2(s) > best_d) s = s_grid;
  return lc.wrap(s);
}

TransversalBasis transversal_basis(const Vec& flow) {
  const auto n = flow.size();
  const double norm = flow.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw NumericalError("flow vanishes: point is an equilibrium, not on a cycle");
  }
  TransversalBasis out;
  out.e1 = flow / norm;
  out.E2.resize(n, n - 1);
  Eigen::Index skip = 0;
  out.e1.cwiseAbs().maxCoeff(&skip);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == skip) continue;
    Vec v = Vec::Unit(n, i);
    for (int pass = 0; pass < 2; ++pass) {
      v -= out.e1.dot(v) * out.e1;
      for (Eigen::Index c = 0; c < col; ++c) v -= out.E2.col(c).dot(v) * out.E2.col(c);
    }
    v.normalize();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (std::abs(v(k)) > 1e-14) {
        if (v(k) < 0.0) v = -v;
        break;
      }
    }
    out.E2.col(col++) = v;
  }
  return out;
}

TransversalBasis transversal_basis(const LimitCycleBundle& lc, double s) {
  return transversal_basis(lc.network().drift(lc.phi(s), lc.theta()));
}

PhaseCorrection phase_correct(const LimitCycleBundle& lc, const Vec& x,
                              std::optional<double> s_hint, const PhaseOptions& options) {
  const double omega = lc.network().omega();
  PhaseCorrection pc;
  pc.s_star = phase(lc, x / omega, s_hint, options);
  pc.phi_star = lc.phi(pc.s_star);
  pc.kappa = (x - omega * pc.phi_star) / std::sqrt(omega);
  pc.basis = transversal_basis(lc.network().drift(pc.phi_star, lc.theta()));
  return pc;
}

}  // namespace pclna
