#pragma once

// Continuous q-Hermite and Askey-Wilson families, their weights and
// normalizations, the Poisson kernel, the q-analogues of monomials and the
// q-exponential E_q.

#include <array>
#include <vector>

#include "qfrac/qseries.hpp"

namespace qfrac {

/// H_n(x|q) by the three-term recurrence 2x H_n = H_{n+1} + (1 - q^n) H_{n-1}.
cplx hermite_cq(int n, cplx x, const QContext& ctx);

/// H_0(x|q) .. H_n(x|q) in one pass.
std::vector<cplx> hermite_cq_all(int n, cplx x, const QContext& ctx);

/// Normalized q-Hermite weight w_H(cos theta|q) on 0 < theta < pi.
/// Throws DomainError at the endpoints, where 1/sqrt(1-x^2) is singular.
double weight_wH(double theta, const QContext& ctx);

/// w_H(cos theta|q) sin theta = (q, e^{2i theta}, e^{-2i theta}; q)_inf / 2 pi,
/// the integrand factor used by every theta-integral (continuous, zero at the
/// endpoints).
double weight_wH_sin(double theta, const QContext& ctx);

enum class KernelForm { Series, Product };

/// Poisson kernel sum_n H_n(cos theta) H_n(cos phi) t^n / (q;q)_n, |t| < 1.
cplx poisson_kernel(double theta, double phi, cplx t, KernelForm form,
                    const QContext& ctx);

/// Askey-Wilson parameter quadruple.
struct AWParams {
  cplx t1, t2, t3, t4;

  std::array<cplx, 4> values() const { return {t1, t2, t3, t4}; }
};

/// p_n(cos theta; t) from the terminating 4phi3 (quad-precision accumulation).
cplx aw_polynomial(int n, double theta, const AWParams& t, const QContext& ctx);

/// Same at an arbitrary complex z, x = (z + 1/z)/2.
cplx aw_polynomial_z(int n, cplx z, const AWParams& t, const QContext& ctx);

/// p_0 .. p_n at x by the three-term recurrence. Stable for large n, used by
/// the bilinear-kernel series.
std::vector<cplx> aw_polynomials_recurrence(int n, cplx x, const AWParams& t,
                                            const QContext& ctx);

/// w(cos theta; t). Throws PoleOnContour if some |t_j| >= 1.
double aw_weight(double theta, const AWParams& t, const QContext& ctx);

/// Orthogonality constant M_n(t) = int_0^pi p_n^2 w d theta.
double aw_norm_Mn(int n, const AWParams& t, const QContext& ctx);

/// phi_n(x) = (q^{1/4} e^{i theta}, q^{1/4} e^{-i theta}; q^{1/2})_n.
cplx basis_phi_quarter(int n, double theta, const QContext& ctx);

/// rho_n(x) = (1 + e^{2i theta}) e^{-i n theta} (-q^{2-n} e^{2i theta}; q^2)_{n-1},
/// rho_0 = 1.
cplx basis_rho(int n, double theta, const QContext& ctx);

/// phi_nu(x; a) = (a e^{i theta}, a e^{-i theta}; q)_nu for real nu >= 0,
/// computed as h(x; a) / h(x; a q^nu).
cplx basis_phi_a_z(cplx a, double nu, cplx z, const QContext& ctx);
cplx basis_phi_a(cplx a, double nu, double theta, const QContext& ctx);

/// E_q(x; t) from its q-Hermite expansion
///   (q t^2; q^2)_inf E_q(x; t) = sum_n q^{n^2/4} t^n H_n(x|q) / (q;q)_n.
cplx q_exponential_z(cplx z, cplx t, const QContext& ctx);
cplx q_exponential(double theta, cplx t, const QContext& ctx);

/// The double-Pochhammer series for E_q exactly as it is usually displayed,
/// with the factor (-i alpha)^n. It reproduces the expansion above at -alpha,
/// so callers comparing the two forms must flip the sign of the argument.
cplx q_exponential_direct(double theta, cplx alpha, const QContext& ctx);

}  // namespace qfrac
