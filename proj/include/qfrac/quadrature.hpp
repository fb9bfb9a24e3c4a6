#pragma once

// Adaptive Gauss-Kronrod integration on [0, pi] (the theta interval) and its
// nested tensor-product extension. Deterministic: panel selection breaks ties
// by position and the final sum runs over panels in left-to-right order.

#include <functional>
#include <span>

#include "qfrac/context.hpp"

namespace qfrac {

struct QuadResult {
  cplx value{0.0};
  double err_est = 0.0;
  long evals = 0;
  bool converged = false;
};

using ThetaFn = std::function<cplx(double)>;
using ThetaFn2 = std::function<cplx(double, double)>;

/// Integrand evaluations performed by integrate() on the calling thread.
long& quad_eval_counter();

/// Globally adaptive 15-point Kronrod / 7-point Gauss bisection on [lo, hi].
/// Converged means err_est <= quad_rel_tol * max(|value|, 1e-2 * int |f|), or
/// that every panel error has reached its roundoff floor 50 eps int|f|.
/// Interior breakpoints (sharp features) seed the initial partition.
QuadResult integrate(const ThetaFn& f, double lo, double hi,
                     const QContext& ctx,
                     std::span<const double> breakpoints = {});

/// integrate(f, 0, pi, ctx, breakpoints).
QuadResult integrate_theta(const ThetaFn& f, const QContext& ctx,
                           std::span<const double> breakpoints = {});

/// int_0^pi int_0^pi f(phi, psi) dpsi dphi, outer adaptive over inner results.
QuadResult integrate_theta_2d(const ThetaFn2& f, const QContext& ctx);

}  // namespace qfrac
