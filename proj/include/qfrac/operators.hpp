#pragma once
// The q-fractional operators acting on AnalyticFn values: the Askey-Wilson
// divided difference D_q and its integral right inverse, the two-parameter
// family K_{a,c}, the positive family T(a,b,r) with its raising operator B_q,
// the generator J, and the left-inverse composite.
//
// Every integral operator returns a lazily evaluated function. Its value at z
// is one adaptive quadrature in phi, memoized on z; the theta-independent part
// of the integrand is memoized on phi.

#include "qfrac/analytic_fn.hpp"
#include "qfrac/qfunctions.hpp"
#include "qfrac/quadrature.hpp"

namespace qfrac {

/// Order a >= 0 and parameter c of K_{a,c}. Pole freedom needs 1 < c < 1/q.
struct KParams {
  double a = 0.0;
  double c = 0.0;
};

/// T(a,b,r) with |a|, |b| < 1 and -1 < r < 1.
struct TParams {
  cplx a{0.0};
  cplx b{0.0};
  double r = 0.0;
};

/// Throws ParamDomain with a readable reason.
void validate(const KParams& p, const QContext& ctx);
void validate(const TParams& p, const QContext& ctx);
bool is_valid(const KParams& p, const QContext& ctx);

/// q^{a(a-3)/4} ((1-q)/(2c))^a.
double k_constant(const KParams& p, const QContext& ctx);
/// h(x; -c q^{1-a/2}, -q^{a/2}/c), the outer factor of K_{a,c}.
cplx k_outer_factor(const KParams& p, cplx z, const QContext& ctx);

// ---- basic test functions -------------------------------------------------

/// h(x; -1/c, -cq) H_n(x|q): the eigenfunctions of K_{a,c}.
AnalyticFn k_basis(double c, int n, const QContext& ctx);
/// h(x; a, b) H_n(x|q): the eigenfunctions of T(a,b,r).
AnalyticFn t_basis(cplx a, cplx b, int n, const QContext& ctx);
/// cos 2 theta = 2x^2 - 1.
AnalyticFn fn_cos2theta();
/// e^x.
AnalyticFn fn_exp();

// ---- D_q ------------------------------------------------------------------

/// (f(q^{1/2} z) - f(q^{-1/2} z)) / ((q^{1/2} - q^{-1/2})(z - 1/z)/2).
/// Needs f.annulus_rho <= q^{1/2}; the result has annulus f.rho / q^{1/2}.
/// At z^2 = 1 the removable singularity is replaced by a symmetric offset
/// limit with Richardson extrapolation.
AnalyticFn apply_Dq(const AnalyticFn& f, const QContext& ctx);
AnalyticFn apply_Dq_power(const AnalyticFn& f, int m, const QContext& ctx);

/// The integral right inverse of D_q with parameter c (same validity window
/// as K_{1,c}, evaluated through its own code path).
AnalyticFn apply_Dq_inverse(double c, const AnalyticFn& f,
                            const QContext& ctx);

// ---- K_{a,c} --------------------------------------------------------------

/// K_{a,c} f. a = 0 returns f itself. The result has annulus q^{a/2}.
AnalyticFn apply_K(const KParams& p, const AnalyticFn& f, const QContext& ctx);

/// Closed-form eigen-action q^{a(a-3)/4 + na/2}((1-q)/2c)^a
/// h(x; -cq^{1-a/2}, -q^{a/2}/c) H_n(x).
cplx apply_K_eigen(const KParams& p, int n, cplx z, const QContext& ctx);

// ---- generator ------------------------------------------------------------

/// Exponent of q inside the logarithmic term of the generator series.
///   AsDisplayed: (n+1)a/2 - 3/4
///   Derivative:  (n+a)/2 - 3/4, the a-derivative of the eigenvalue exponent
/// They coincide when n = 0 or a = 1.
enum class JExponent { AsDisplayed, Derivative };
const char* to_string(JExponent e);

/// Closed-form value of J(a,c) applied to h(.;-1/c,-cq) H_n, with the two
/// bilateral theta-derivative sums.
cplx apply_J_series(const KParams& p, int n, cplx z, JExponent e,
                    const QContext& ctx);
/// The same at a = 0, coded from the simplified a = 0 display.
cplx apply_J_zero(double c, int n, cplx z, JExponent e, const QContext& ctx);

/// One-sided Richardson difference 2 D(h/2) - D(h) with
/// D(h) = (K_{a+h,c} f - K_{a,c} f)/h, evaluated on the unit circle.
cplx generator_finite_difference(const KParams& p, const AnalyticFn& f,
                                 double theta, double step,
                                 const QContext& ctx);

/// J(0,c) on a general f: f / h(.;-1/c,-cq) is expanded in q-Hermite
/// polynomials by quadrature and J acts termwise. Evaluation on the unit
/// circle only.
AnalyticFn apply_J0(double c, const AnalyticFn& f, JExponent e,
                    const QContext& ctx);

// ---- left inverse ---------------------------------------------------------

/// Chebyshev interpolant in x through N samples of f on the unit circle,
/// evaluated off the circle through T_k(x) = (z^k + z^{-k})/2. The caller
/// declares the annulus the interpolant is trusted on.
AnalyticFn chebyshev_lift(const AnalyticFn& f, int nodes, double declared_rho,
                          const QContext& ctx);

/// Second parameter of the middle operator of the left inverse.
///   Displayed: c q^{-a}
///   Semigroup: c q^{-a/2}, the value the composition law requires
enum class LeftInverseParam { Displayed, Semigroup };
const char* to_string(LeftInverseParam v);
double left_inverse_middle_c(const KParams& p, LeftInverseParam v,
                             const QContext& ctx);

/// D_q^{floor(a)+1} K_{1-{a},c'} K_{a,c} f. The middle composite is sampled on
/// the unit circle and continued by a Chebyshev lift before differencing.
/// Throws ParamDomain when c' leaves (1, 1/q).
AnalyticFn left_inverse_apply(const KParams& p, const AnalyticFn& f,
                              LeftInverseParam v, const QContext& ctx);

// ---- pairing with E_q ------------------------------------------------------

/// Base of the Pochhammer prefactors in the E_q identities: (.;q) or (.;q^2).
enum class PochBase { Q, Q2 };
const char* to_string(PochBase b);

enum class PairingSide { Left, Right };

/// Left: int E_q(x;t) (K f)(x) w_H dx / h(x;-cq^{1-a/2},-q^{a/2}/c).
/// Right: q^{a(a-3)/4}((1-q)/2c)^a (q^{a+1}t^2;B)/(qt^2;B)
///        int E_q(x;tq^{a/2}) f w_H dx / h(x;-cq,-1/c).
cplx adjoint_pairing(const KParams& p, const AnalyticFn& f, cplx tval,
                     PairingSide side, PochBase base, const QContext& ctx);

// ---- T(a,b,r) and B_q -------------------------------------------------------

/// T(a,b,r) f. The result has annulus |r|.
AnalyticFn apply_T(const TParams& p, const AnalyticFn& f, const QContext& ctx);

/// T(a, q^{1/2} a, r) written with (a e^{+-i theta}; q^{1/2})_inf.
AnalyticFn apply_T_half_step(cplx a, double r, const AnalyticFn& f,
                             const QContext& ctx);

enum class BqForm { Direct, Factored };

/// B_q(a,b) f, either the divided-difference quotient or (1/g) D_q (g f)
/// with g = (-q^{1/4}e^{i theta}, -q^{1/4}e^{-i theta}; q^{1/2})_inf / h(x;a,b).
/// Needs |a|, |b| < q^{1/2} and f.annulus_rho <= q^{1/2}.
AnalyticFn apply_Bq(cplx a, cplx b, const AnalyticFn& f, BqForm form,
                    const QContext& ctx);

/// 2 q^{1/4} / (1 - q): B_q multiplies h(.;a,b) H_n by this times q^{-n/2}.
double bq_scale(const QContext& ctx);

/// Simplified B_q(a, q^{1/2} a). AsDisplayed keeps the first coefficient
/// (1 - az)/(1 - q^{-1/2}/z); Reduced uses (1 - az)/(1 - q^{-1/2} a/z), which
/// is what cancelling h(x;a,q^{1/2}a)/h(x;q^{-1/2}a,a) gives.
enum class BqHalfStep { AsDisplayed, Reduced };
const char* to_string(BqHalfStep v);
AnalyticFn apply_Bq_half_step(cplx a, const AnalyticFn& f, BqHalfStep v,
                              const QContext& ctx);

}  // namespace qfrac
