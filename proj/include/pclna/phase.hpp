#pragma once

#include "pclna/lna.hpp"

#include <optional>

namespace pclna {

struct PhaseOptions {
  int max_iter = 20;
  double tol = 1e-10;  // on |g(s)|
};

/// Phase time s in [0, period) of the cycle point closest (Euclidean) to the
/// concentration vector y. Newton iteration on
///   g(s) = (y - phi(s))^T F(phi(s))
/// from the hint, with step halving while the distance increases. Without a
/// hint, when Newton fails, or when a grid node is closer than the hinted
/// result (a non-global local minimum), the closest grid node seeds a second
/// Newton run. Always returns a value.
double phase(const LimitCycleBundle& lc, const Vec& y, std::optional<double> s_init = std::nullopt,
             const PhaseOptions& options = {});

/// Tangent e1 = F / |F| and an orthonormal complement E2 (n x (n-1)) from
/// Gram-Schmidt on the standard basis, skipping the axis most aligned with e1.
/// Each column of E2 has its first nonzero entry positive.
struct TransversalBasis {
  Vec e1;
  Mat E2;
};

TransversalBasis transversal_basis(const Vec& flow);
TransversalBasis transversal_basis(const LimitCycleBundle& lc, double s);

struct PhaseCorrection {
  double s_star = 0.0;
  Vec phi_star;
  Vec kappa;  // (x - omega phi(s_star)) / sqrt(omega)
  TransversalBasis basis;
};

/// Phase correction of a state x in count units.
PhaseCorrection phase_correct(const LimitCycleBundle& lc, const Vec& x,
                              std::optional<double> s_hint = std::nullopt,
                              const PhaseOptions& options = {});

}  // namespace pclna
