#pragma once

#include "pclna/model.hpp"
#include "pclna/ode.hpp"

#include <complex>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pclna {

/// Right-hand side of the joint system for (phi, C, V):
///   phi' = F(phi),  C' = J C,  V' = J V + V J^T + S
/// packed as [phi; vec(C); vec(V)] (column-major). With `zero_noise` the
/// diffusion S is replaced by 0.
OdeRhs lna_rhs(const ReactionNetwork& net, const Vec& theta, bool zero_noise = false);

/// Drift-only right-hand side phi' = F(phi).
OdeRhs drift_rhs(const ReactionNetwork& net, const Vec& theta);

struct LnaStep {
  Vec phi;  // phi(dt)
  Mat C;    // C(0, dt)
  Mat V;    // V(0, dt)
};

/// Integrates phi, C, V over [0, dt] from phi0 with C(0,0) = I, V(0,0) = 0.
LnaStep integrate_lna(const ReactionNetwork& net, const Vec& theta, const Vec& phi0, double dt,
                      const OdeOptions& options = {}, bool zero_noise = false,
                      long* rhs_count = nullptr);

/// Deterministic solution on [t0, t1] resampled on `points` uniform nodes.
DenseSolution solve_ode(const ReactionNetwork& net, const Vec& theta, const Vec& phi0, double t0,
                        double t1, Eigen::Index points = 513, const OdeOptions& options = {});

/// A deterministic path phi(s) with its LNA transition matrices. `s` is time
/// measured from the start of the path (phase time for a limit cycle).
class LnaPath {
 public:
  virtual ~LnaPath() = default;
  virtual Eigen::Index dim() const = 0;
  virtual void phi(double s, Vec& out) const = 0;
  /// (C(s0, s0 + dt), V(s0, s0 + dt)); dt = 0 gives (I, 0) exactly.
  virtual void transition(double s0, double dt, Mat& C, Mat& V) const = 0;
  virtual bool periodic() const = 0;

  Vec phi(double s) const {
    Vec out;
    phi(s, out);
    return out;
  }
};

struct CycleOptions {
  double burn_in = 100.0;      // time integrated before searching for the cycle
  double search_time = 200.0;  // time allowed for two section crossings
  double tol = 1e-7;           // closure tolerance (relative to 1 + |p|)
  int max_newton = 30;
  Eigen::Index grid_points = 513;  // nodes per period (512 intervals)
  OdeOptions ode{};
  bool zero_noise = false;  // test hook: S = 0
};

/// Raised when no attractive periodic orbit is found.
class NoCycleError : public NumericalError {
 public:
  explicit NoCycleError(const std::string& detail) : NumericalError("no cycle detected: " + detail) {}
};

/// Limit cycle with phi(s), C(0,s), V(0,s) over one period. Phase zero is the
/// maximum of the first species on the cycle.
class LimitCycleBundle : public LnaPath {
 public:
  LimitCycleBundle(const ReactionNetwork& net, const Vec& theta, double period, Vec anchor,
                   DenseSolution phi, DenseSolution C0, DenseSolution V0);

  Eigen::Index dim() const override { return phi_.dim(); }
  bool periodic() const override { return true; }
  using LnaPath::phi;
  void phi(double s, Vec& out) const override;
  void transition(double s0, double dt, Mat& C, Mat& V) const override;

  double period() const { return period_; }
  const Vec& anchor() const { return anchor_; }
  const Mat& monodromy() const { return monodromy_; }
  const Mat& v_period() const { return v_period_; }
  const DenseSolution& phi_solution() const { return phi_; }
  const DenseSolution& c_solution() const { return C0_; }
  const DenseSolution& v_solution() const { return V0_; }
  const ReactionNetwork& network() const { return net_; }
  const Vec& theta() const { return theta_; }

  /// C(0, s) and V(0, s) for s in [0, period].
  void c0(double s, Mat& out) const;
  void v0(double s, Mat& out) const;

  /// Wraps s into [0, period).
  double wrap(double s) const;

  std::vector<std::complex<double>> floquet_multipliers() const;
  double closure_residual() const { return closure_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }
  void set_closure_residual(double r) { closure_ = r; }

 private:
  ReactionNetwork net_;
  Vec theta_;
  double period_;
  Vec anchor_;
  DenseSolution phi_, C0_, V0_;
  Mat monodromy_, v_period_;
  double closure_ = 0.0;
  std::vector<std::string> warnings_;
};

LimitCycleBundle find_limit_cycle(const ReactionNetwork& net, const Vec& theta, const Vec& guess,
                                  const CycleOptions& options = {});

/// A finite-horizon path from phi0 (no periodicity assumed). Transitions are
/// integrated directly from phi(s0).
class TransientPath : public LnaPath {
 public:
  TransientPath(const ReactionNetwork& net, const Vec& theta, const Vec& phi0, double horizon,
                const OdeOptions& options = {}, Eigen::Index points = 4097, bool zero_noise = false);

  Eigen::Index dim() const override { return phi_.dim(); }
  bool periodic() const override { return false; }
  using LnaPath::phi;
  void phi(double s, Vec& out) const override;
  void transition(double s0, double dt, Mat& C, Mat& V) const override;

 private:
  ReactionNetwork net_;
  Vec theta_;
  OdeOptions options_;
  bool zero_noise_;
  DenseSolution phi_;
};

/// Bundle cache: plain text, keyed by model hash and theta.
void save_bundle(const std::filesystem::path& path, const LimitCycleBundle& lc);
std::optional<LimitCycleBundle> load_bundle(const std::filesystem::path& path,
                                            const ReactionNetwork& net, const Vec& theta);

}  // namespace pclna
