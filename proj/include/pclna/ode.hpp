#pragma once

#include "pclna/linalg.hpp"

#include <functional>

namespace pclna {

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_init = 0.0;  // 0 selects an initial step automatically
  long max_steps = 2'000'000;
};

using OdeRhs = std::function<void(double t, const Vec& y, Vec& dydt)>;

/// Dormand-Prince 5(4) stepper with PI step-size control and the 4th order
/// continuous extension. One instance per integration; not thread-safe.
class Dopri5 {
 public:
  Dopri5(OdeRhs rhs, OdeOptions options = {});

  void reset(double t0, const Vec& y0);

  /// Takes one accepted step, never past `t_end`. Returns true once t() == t_end.
  /// Throws NumericalError on step-size underflow, non-finite state, or too many steps.
  bool step(double t_end);

  /// Integrates to t_end (no dense output).
  void advance_to(double t_end);

  double t() const { return t_; }
  double t_prev() const { return t_prev_; }
  const Vec& y() const { return y_; }
  const Vec& dydt() const { return k1_; }

  /// Continuous extension inside the last accepted step [t_prev(), t()].
  void dense(double t, Vec& out) const;

  long rhs_evaluations() const { return n_rhs_; }
  long accepted_steps() const { return n_accepted_; }
  long rejected_steps() const { return n_rejected_; }
  const OdeOptions& options() const { return opt_; }

 private:
  double initial_step();

  OdeRhs rhs_;
  OdeOptions opt_;
  double t_ = 0.0, t_prev_ = 0.0, h_ = 0.0, err_old_ = 1e-4;
  long n_rhs_ = 0, n_accepted_ = 0, n_rejected_ = 0, n_steps_ = 0;
  Vec y_, y_new_, k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, err_vec_;
  Vec r1_, r2_, r3_, r4_, r5_;  // dense output coefficients
  bool have_dense_ = false;
};

/// Values and time derivatives on a uniform grid, evaluated between nodes
/// by cubic Hermite interpolation. Interpolation at nodes returns the stored
/// values exactly.
class DenseSolution {
 public:
  DenseSolution() = default;
  DenseSolution(double t0, double t1, Mat values, Mat derivs);

  double t0() const { return t0_; }
  double t1() const { return t1_; }
  double spacing() const { return h_; }
  Eigen::Index points() const { return values_.cols(); }
  Eigen::Index dim() const { return values_.rows(); }
  const Mat& values() const { return values_; }
  const Mat& derivs() const { return derivs_; }
  double node(Eigen::Index i) const { return i == points() - 1 ? t1_ : t0_ + static_cast<double>(i) * h_; }

  void eval(double t, Vec& out) const;
  Vec operator()(double t) const;

 private:
  double t0_ = 0.0, t1_ = 0.0, h_ = 0.0;
  Mat values_, derivs_;
};

/// Integrates y' = f(t, y) from t0 to t1 and resamples the solution on
/// `points` uniform nodes via the continuous extension. Derivatives at the
/// nodes are evaluated from the vector field.
DenseSolution integrate_dense(const OdeRhs& rhs, double t0, const Vec& y0, double t1,
                              Eigen::Index points, const OdeOptions& options = {},
                              long* rhs_count = nullptr);

/// Final state only.
Vec integrate_to(const OdeRhs& rhs, double t0, const Vec& y0, double t1,
                 const OdeOptions& options = {}, long* rhs_count = nullptr);

}  // namespace pclna
