#pragma once

// Scalar q-series primitives: Pochhammer symbols, h-products, the Jacobi
// triple product theta series and terminating basic hypergeometric sums.
// Every kernel accepts complex arguments because the Askey-Wilson divided
// difference evaluates functions off the unit circle.

#include <span>
#include <vector>

#include "qfrac/context.hpp"

namespace qfrac {

using ParamList = std::vector<cplx>;

/// (a;q)_n. n = 0 gives exactly 1.
cplx qpoch_finite(cplx a, int n, const QContext& ctx);

/// Infinite product with its truncation metadata.
struct ProductEval {
  cplx value;
  /// Relative tail bound |a|q^N / ((1-q)(1-|a|q^N)).
  double tail_bound;
  int terms;
};

/// (a;q)_inf truncated at the smallest N with |a| q^N < eps_trunc.
/// Throws NonConvergent if N would exceed ctx.max_terms().
ProductEval qpoch_infinite_eval(cplx a, const QContext& ctx);
cplx qpoch_infinite(cplx a, const QContext& ctx);

/// (q^alpha;q)_inf for real alpha >= 0, with the leading factor 1 - q^alpha
/// formed through expm1 so that alpha -> 0 keeps full relative accuracy.
double qpoch_infinite_qpow(double alpha, const QContext& ctx);

/// (A;q)_beta = (A;q)_inf / (A q^beta;q)_inf.
/// Throws DivisionNearZero if the denominator is below eps_trunc.
cplx qpoch_real_index(cplx A, double beta, const QContext& ctx);

/// h(x; a_1..a_n) = prod_j (a_j z, a_j / z; q)_inf evaluated at any complex z
/// (z = e^{i theta} on the unit circle).
cplx h_product_z(cplx z, std::span<const cplx> params, const QContext& ctx);

/// h(cos theta; a_1..a_n) for real theta.
cplx h_product(double theta, std::span<const cplx> params, const QContext& ctx);

/// (t e^{i psi}, t e^{-i psi}; q)_inf for real t, written as
/// prod_k [(1 - t q^k)^2 + 4 t q^k sin^2(psi/2)] so it stays accurate as
/// t -> 1 and psi -> 0.
double h_pair_angle(double t, double psi, const QContext& ctx);

/// Bilateral theta series sum_n q^{n(n-1)/2} z^n.
cplx jtp_theta_series(cplx z, const QContext& ctx);

/// The product side (q, -z, -q/z; q)_inf of the triple product identity.
cplx jtp_theta_product(cplx z, const QContext& ctx);

/// sum_k q^{k(k-1)/2} z^k (k log q / 2) / (q;q)_inf.
cplx jtp_theta_logq_derivative_series(cplx z, const QContext& ctx);

/// Terminating r+1 phi r series
///   sum_{k=0}^{n} prod(upper;q)_k / prod(lower;q)_k  arg^k / (q;q)_k.
/// One upper parameter must equal q^{-n_max}; it is recomputed exactly in
/// quad precision, and the whole sum is accumulated in quad precision because
/// the terminating form cancels catastrophically for moderate n.
/// Throws SingularLowerParameter if a lower Pochhammer factor vanishes.
cplx bhs_terminating(std::span<const cplx> upper, std::span<const cplx> lower,
                     cplx arg, int n_max, const QContext& ctx);

}  // namespace qfrac
