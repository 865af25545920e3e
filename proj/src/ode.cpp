#include "pclna/ode.hpp"

#include <algorithm>
#include <cmath>

namespace pclna {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// step controller
constexpr double kSafe = 0.9, kBeta = 0.04, kFacMin = 0.2, kFacMax = 10.0;

}  // namespace

Dopri5::Dopri5(OdeRhs rhs, OdeOptions options) : rhs_(std::move(rhs)), opt_(options) {}

void Dopri5::reset(double t0, const Vec& y0) {
  const auto n = y0.size();
  t_ = t_prev_ = t0;
  y_ = y0;
  for (Vec* v : {&y_new_, &k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &err_vec_, &r1_, &r2_,
                 &r3_, &r4_, &r5_}) {
    v->resize(n);
  }
  rhs_(t_, y_, k1_);
  ++n_rhs_;
  h_ = opt_.h_init > 0.0 ? opt_.h_init : 0.0;
  err_old_ = 1e-4;
  have_dense_ = false;
  n_steps_ = 0;
}

double Dopri5::initial_step() {
  // Hairer & Wanner's starting step heuristic.
  const auto n = static_cast<double>(y_.size());
  const Vec sc = (opt_.atol + opt_.rtol * y_.array().abs()).matrix();
  const double d0 = std::sqrt((y_.array() / sc.array()).square().sum() / n);
  const double dd1 = std::sqrt((k1_.array() / sc.array()).square().sum() / n);
  double h0 = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
  tmp_ = y_ + h0 * k1_;
  rhs_(t_ + h0, tmp_, k2_);
  ++n_rhs_;
  const double dd2 = std::sqrt(((k2_ - k1_).array() / sc.array()).square().sum() / n) / h0;
  const double m = std::max(dd1, dd2);
  const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 1.0 / 5.0);
  return std::min(100.0 * h0, h1);
}

bool Dopri5::step(double t_end) {
  if (t_ >= t_end) return true;
  if (h_ <= 0.0) h_ = initial_step();
  const double span = std::abs(t_end) + std::abs(t_);
  while (true) {
    if (++n_steps_ > opt_.max_steps) throw NumericalError("ODE integration exceeded max_steps");
    double h = std::min(h_, t_end - t_);
    const bool last = h >= t_end - t_;
    if (h < 1e-14 * std::max(1.0, span)) throw NumericalError("ODE step size underflow");

    tmp_ = y_ + h * a21 * k1_;
    rhs_(t_ + c2 * h, tmp_, k2_);
    tmp_ = y_ + h * (a31 * k1_ + a32 * k2_);
    rhs_(t_ + c3 * h, tmp_, k3_);
    tmp_ = y_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    rhs_(t_ + c4 * h, tmp_, k4_);
    tmp_ = y_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    rhs_(t_ + c5 * h, tmp_, k5_);
    tmp_ = y_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    const double t_new = last ? t_end : t_ + h;
    rhs_(t_new, tmp_, k6_);
    y_new_ = y_ + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
    rhs_(t_new, y_new_, k7_);
    n_rhs_ += 6;

    err_vec_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
    double err = 0.0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      const double sc = opt_.atol + opt_.rtol * std::max(std::abs(y_(i)), std::abs(y_new_(i)));
      const double e = err_vec_(i) / sc;
      err += e * e;
    }
    err = std::sqrt(err / static_cast<double>(y_.size()));
    if (!std::isfinite(err)) {
      if (!y_new_.allFinite() && h < 1e-10 * std::max(1.0, span)) {
        throw NumericalError("non-finite state in ODE integration");
      }
      h_ = 0.25 * h;
      ++n_rejected_;
      continue;
    }

    const double fac11 = std::pow(err, 0.2 - kBeta * 0.75);
    if (err <= 1.0) {
      double fac = fac11 / std::pow(err_old_, kBeta);
      fac = std::clamp(fac / kSafe, 1.0 / kFacMax, 1.0 / kFacMin);
      err_old_ = std::max(err, 1e-4);

      r1_ = y_;
      r2_ = y_new_ - y_;
      r3_ = h * k1_ - r2_;
      r4_ = r2_ - h * k7_ - r3_;
      r5_ = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
      have_dense_ = true;

      t_prev_ = t_;
      t_ = t_new;
      y_.swap(y_new_);
      k1_.swap(k7_);
      if (!y_.allFinite()) throw NumericalError("non-finite state in ODE integration");
      ++n_accepted_;
      const double h_next = h / fac;
      // keep the controller's step when the last step was clipped to t_end
      h_ = last ? std::max(h_, h_next) : h_next;
      return t_ >= t_end;
    }
    h_ = h / std::min(1.0 / kFacMin, fac11 / kSafe);
    ++n_rejected_;
  }
}

void Dopri5::advance_to(double t_end) {
  while (!step(t_end)) {
  }
}

void Dopri5::dense(double t, Vec& out) const {
  const double h = t_ - t_prev_;
  if (!have_dense_ || h <= 0.0) {
    out = y_;
    return;
  }
  const double th = (t - t_prev_) / h;
  const double th1 = 1.0 - th;
  out = r1_ + th * (r2_ + th1 * (r3_ + th * (r4_ + th1 * r5_)));
}

DenseSolution::DenseSolution(double t0, double t1, Mat values, Mat derivs)
    : t0_(t0), t1_(t1), values_(std::move(values)), derivs_(std::move(derivs)) {
  h_ = values_.cols() > 1 ? (t1_ - t0_) / static_cast<double>(values_.cols() - 1) : 0.0;
}

void DenseSolution::eval(double t, Vec& out) const {
  const Eigen::Index last = values_.cols() - 1;
  if (last <= 0 || h_ <= 0.0) {
    out = values_.col(0);
    return;
  }
  double pos = (t - t0_) / h_;
  auto i = static_cast<Eigen::Index>(std::floor(pos));
  i = std::clamp<Eigen::Index>(i, 0, last - 1);
  const double u = pos - static_cast<double>(i);
  if (u == 0.0) {
    out = values_.col(i);
    return;
  }
  if (i + 1 == last && t == t1_) {
    out = values_.col(last);
    return;
  }
  const double u2 = u * u, u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u, h01 = -2 * u3 + 3 * u2,
               h11 = u3 - u2;
  out = h00 * values_.col(i) + (h10 * h_) * derivs_.col(i) + h01 * values_.col(i + 1) +
        (h11 * h_) * derivs_.col(i + 1);
}

Vec DenseSolution::operator()(double t) const {
  Vec out;
  eval(t, out);
  return out;
}

DenseSolution integrate_dense(const OdeRhs& rhs, double t0, const Vec& y0, double t1,
                              Eigen::Index points, const OdeOptions& options, long* rhs_count) {
  if (points < 2) throw std::invalid_argument("dense output needs at least two points");
  Mat values(y0.size(), points), derivs(y0.size(), points);
  const double h = (t1 - t0) / static_cast<double>(points - 1);
  Dopri5 solver(rhs, options);
  solver.reset(t0, y0);
  values.col(0) = y0;
  derivs.col(0) = solver.dydt();
  Eigen::Index next = 1;
  Vec buf(y0.size()), dbuf(y0.size());
  while (next < points) {
    solver.step(t1);
    while (next < points) {
      const double tn = next == points - 1 ? t1 : t0 + static_cast<double>(next) * h;
      if (tn > solver.t()) break;
      if (tn == solver.t()) {
        buf = solver.y();
        dbuf = solver.dydt();
      } else {
        solver.dense(tn, buf);
        rhs(tn, buf, dbuf);
      }
      values.col(next) = buf;
      derivs.col(next) = dbuf;
      ++next;
    }
  }
  if (rhs_count) *rhs_count += solver.rhs_evaluations() + points;
  return DenseSolution(t0, t1, std::move(values), std::move(derivs));
}

Vec integrate_to(const OdeRhs& rhs, double t0, const Vec& y0, double t1, const OdeOptions& options,
                 long* rhs_count) {
  Dopri5 solver(rhs, options);
  solver.reset(t0, y0);
  solver.advance_to(t1);
  if (rhs_count) *rhs_count += solver.rhs_evaluations();
  return solver.y();
}

}  // namespace pclna
