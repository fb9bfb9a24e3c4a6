#include "qfrac/qfunctions.hpp"

#include <cmath>
#include <sstream>

namespace qfrac {

cplx hermite_cq(int n, cplx x, const QContext& ctx) {
  if (n == 0) return 1.0;
  cplx prev = 1.0;
  cplx cur = 2.0 * x;
  double qk = ctx.q();
  for (int k = 1; k < n; ++k) {
    const cplx next = 2.0 * x * cur - (1.0 - qk) * prev;
    prev = cur;
    cur = next;
    qk *= ctx.q();
  }
  return cur;
}

std::vector<cplx> hermite_cq_all(int n, cplx x, const QContext& ctx) {
  std::vector<cplx> out(static_cast<std::size_t>(n) + 1);
  out[0] = 1.0;
  if (n == 0) return out;
  out[1] = 2.0 * x;
  double qk = ctx.q();
  for (int k = 1; k < n; ++k) {
    out[k + 1] = 2.0 * x * out[k] - (1.0 - qk) * out[k - 1];
    qk *= ctx.q();
  }
  return out;
}

double weight_wH_sin(double theta, const QContext& ctx) {
  return qpoch_infinite(ctx.q(), ctx).real() *
         h_pair_angle(1.0, 2.0 * theta, ctx) / (2.0 * kPi);
}

double weight_wH(double theta, const QContext& ctx) {
  const double s = std::sin(theta);
  if (!(theta > 0.0 && theta < kPi) || s <= 0.0) {
    throw QError(ErrorCode::DomainError,
                 "weight_wH: endpoint value needs the sin theta factor");
  }
  return weight_wH_sin(theta, ctx) / s;
}

cplx poisson_kernel(double theta, double phi, cplx t, KernelForm form,
                    const QContext& ctx) {
  if (std::abs(t) >= 1.0) {
    throw QError(ErrorCode::DomainError, "poisson_kernel: |t| >= 1");
  }
  if (form == KernelForm::Product) {
    const cplx e = std::polar(1.0, phi);
    const cplx params[2] = {t * e, t / e};
    return qpoch_infinite(t * t, ctx) / h_product(theta, params, ctx);
  }
  const double x = std::cos(theta);
  const double y = std::cos(phi);
  const double poch_inf = qpoch_infinite(ctx.q(), ctx).real();
  // |H_n(cos theta)| <= (n + 1) / (q;q)_inf^2 bounds the tail.
  const double hbound = 1.0 / (poch_inf * poch_inf);
  const double mt = std::abs(t);
  cplx sum = 1.0;
  double hm1x = 1.0, hx = 2.0 * x;
  double hm1y = 1.0, hy = 2.0 * y;
  cplx tn = 1.0;
  double qpoch_n = 1.0;
  double qk = 1.0;
  for (int n = 1;; ++n) {
    tn *= t;
    qk *= ctx.q();
    qpoch_n *= 1.0 - qk;
    sum += hx * hy * tn / qpoch_n;
    const double tail = std::pow(mt, n + 1) * (n + 2) * (n + 2) * hbound *
                        hbound / (poch_inf * std::pow(1.0 - mt, 3));
    if (tail < ctx.eps_trunc() * std::abs(sum)) break;
    if (n > ctx.max_terms()) {
      throw QError(ErrorCode::NonConvergent, "poisson_kernel: series cap");
    }
    const double nx = 2.0 * x * hx - (1.0 - qk) * hm1x;
    const double ny = 2.0 * y * hy - (1.0 - qk) * hm1y;
    hm1x = hx;
    hx = nx;
    hm1y = hy;
    hy = ny;
  }
  return sum;
}

cplx aw_polynomial_z(int n, cplx z, const AWParams& t, const QContext& ctx) {
  const cplx a = t.t1;
  if (a == 0.0) {
    throw QError(ErrorCode::DomainError, "aw_polynomial: t1 = 0");
  }
  if (n == 0) return 1.0;
  const cplx abcd = t.t1 * t.t2 * t.t3 * t.t4;
  const cplx upper[4] = {std::pow(ctx.q(), -n), abcd * std::pow(ctx.q(), n - 1),
                         a * z, a / z};
  const cplx lower[3] = {a * t.t2, a * t.t3, a * t.t4};
  const cplx series = bhs_terminating(upper, lower, ctx.q(), n, ctx);
  return qpoch_finite(lower[0], n, ctx) * qpoch_finite(lower[1], n, ctx) *
         qpoch_finite(lower[2], n, ctx) * std::pow(a, -n) * series;
}

cplx aw_polynomial(int n, double theta, const AWParams& t,
                   const QContext& ctx) {
  return aw_polynomial_z(n, std::polar(1.0, theta), t, ctx);
}

std::vector<cplx> aw_polynomials_recurrence(int n, cplx x, const AWParams& t,
                                            const QContext& ctx) {
  const cplx a = t.t1, b = t.t2, c = t.t3, d = t.t4;
  if (a == 0.0) {
    throw QError(ErrorCode::DomainError, "aw_polynomials_recurrence: t1 = 0");
  }
  const cplx abcd = a * b * c * d;
  const double q = ctx.q();
  std::vector<cplx> p(static_cast<std::size_t>(n) + 1);
  p[0] = 1.0;
  if (n == 0) return p;
  // 2x p_k = alpha_k p_{k+1} + beta_k p_k + gamma_k p_{k-1}
  double qk = 1.0;  // q^k
  for (int k = 0; k < n; ++k) {
    cplx alpha, big_a, big_c, gamma;
    if (k == 0) {
      alpha = 1.0 / (1.0 - abcd);
      big_a = (1.0 - a * b) * (1.0 - a * c) * (1.0 - a * d) /
              (a * (1.0 - abcd));
      big_c = 0.0;
      gamma = 0.0;
    } else {
      const double qkm1 = qk / q;
      const cplx den_a = (1.0 - abcd * qk * qk / q) * (1.0 - abcd * qk * qk);
      alpha = (1.0 - abcd * qkm1) / den_a;
      big_a = (1.0 - a * b * qk) * (1.0 - a * c * qk) * (1.0 - a * d * qk) *
              (1.0 - abcd * qkm1) / (a * den_a);
      big_c = a * (1.0 - qk) * (1.0 - b * c * qkm1) * (1.0 - b * d * qkm1) *
              (1.0 - c * d * qkm1) /
              ((1.0 - abcd * qk * qk / (q * q)) * (1.0 - abcd * qk * qk / q));
      gamma = big_c * (1.0 - a * b * qkm1) * (1.0 - a * c * qkm1) *
              (1.0 - a * d * qkm1) / a;
    }
    const cplx beta = a + 1.0 / a - big_a - big_c;
    const cplx prev = k > 0 ? p[k - 1] : cplx(0.0);
    p[k + 1] = ((2.0 * x - beta) * p[k] - gamma * prev) / alpha;
    qk *= q;
  }
  return p;
}

double aw_weight(double theta, const AWParams& t, const QContext& ctx) {
  const auto ts = t.values();
  for (const cplx& tj : ts) {
    if (std::abs(tj) >= 1.0) {
      throw QError(ErrorCode::PoleOnContour, "aw_weight: |t_j| >= 1");
    }
  }
  const double num = h_pair_angle(1.0, 2.0 * theta, ctx);
  return (num / h_product(theta, ts, ctx)).real();
}

double aw_norm_Mn(int n, const AWParams& t, const QContext& ctx) {
  const auto ts = t.values();
  const double q = ctx.q();
  const double qn = std::pow(q, n);
  const cplx abcd = ts[0] * ts[1] * ts[2] * ts[3];
  cplx den = qpoch_infinite(q * qn, ctx);
  for (int j = 0; j < 4; ++j) {
    for (int k = j + 1; k < 4; ++k) {
      den *= qpoch_infinite(ts[j] * ts[k] * qn, ctx);
    }
  }
  if (std::abs(den) < ctx.eps_trunc()) {
    throw QError(ErrorCode::DivisionNearZero, "aw_norm_Mn: denominator");
  }
  const cplx num = 2.0 * kPi * qpoch_infinite(abcd * qn * qn, ctx) *
                   qpoch_finite(abcd * qn / q, n, ctx);
  return (num / den).real();
}

cplx basis_phi_quarter(int n, double theta, const QContext& ctx) {
  const double x = std::cos(theta);
  const double q4 = std::pow(ctx.q(), 0.25);
  const double q2 = std::sqrt(ctx.q());
  cplx prod = 1.0;
  double qk = 1.0;  // q^{k/2}
  for (int k = 0; k < n; ++k) {
    prod *= 1.0 - 2.0 * x * q4 * qk + q2 * qk * qk;
    qk *= q2;
  }
  return prod;
}

cplx basis_rho(int n, double theta, const QContext& ctx) {
  if (n == 0) return 1.0;
  const cplx e2 = std::polar(1.0, 2.0 * theta);
  const double q2 = ctx.q() * ctx.q();
  cplx prod = 1.0;
  const cplx base = -std::pow(ctx.q(), 2 - n) * e2;
  double qk = 1.0;
  for (int k = 0; k < n - 1; ++k) {
    prod *= 1.0 - base * qk;
    qk *= q2;
  }
  return (1.0 + e2) * std::polar(1.0, -n * theta) * prod;
}

cplx basis_phi_a_z(cplx a, double nu, cplx z, const QContext& ctx) {
  if (nu == 0.0) return 1.0;
  const cplx num[1] = {a};
  const cplx den[1] = {a * ctx.qpow(nu)};
  const cplx hd = h_product_z(z, den, ctx);
  if (std::abs(hd) < ctx.eps_trunc()) {
    throw QError(ErrorCode::DivisionNearZero, "basis_phi_a: h(x; a q^nu) = 0");
  }
  return h_product_z(z, num, ctx) / hd;
}

cplx basis_phi_a(cplx a, double nu, double theta, const QContext& ctx) {
  return basis_phi_a_z(a, nu, std::polar(1.0, theta), ctx);
}

cplx q_exponential_z(cplx z, cplx t, const QContext& ctx) {
  if (t == 0.0) return 1.0;
  const cplx x = 0.5 * (z + 1.0 / z);
  const double q = ctx.q();
  cplx sum = 1.0;
  cplx h_prev = 1.0, h_cur = 2.0 * x;
  cplx tn = 1.0;
  double qpoch_n = 1.0;
  double qk = 1.0;
  int small_run = 0;
  for (int n = 1;; ++n) {
    tn *= t;
    qk *= q;
    qpoch_n *= 1.0 - qk;
    const cplx term = std::pow(q, 0.25 * n * n) * tn * h_cur / qpoch_n;
    sum += term;
    small_run = std::abs(term) < ctx.eps_trunc() * std::abs(sum) ? small_run + 1 : 0;
    if (small_run >= 3) break;
    if (n > ctx.max_terms()) {
      throw QError(ErrorCode::NonConvergent, "q_exponential: series cap");
    }
    const cplx next = 2.0 * x * h_cur - (1.0 - qk) * h_prev;
    h_prev = h_cur;
    h_cur = next;
  }
  const QContext ctx2 = ctx.with_q(q * q);
  return sum / qpoch_infinite(q * t * t, ctx2);
}

cplx q_exponential(double theta, cplx t, const QContext& ctx) {
  return q_exponential_z(std::polar(1.0, theta), t, ctx);
}

cplx q_exponential_direct(double theta, cplx alpha, const QContext& ctx) {
  const double q = ctx.q();
  const cplx z = std::polar(1.0, theta);
  const cplx I(0.0, 1.0);
  const QContext ctx2 = ctx.with_q(q * q);
  const cplx pref = qpoch_infinite(alpha * alpha, ctx2) /
                    qpoch_infinite(q * alpha * alpha, ctx2);
  cplx sum = 0.0;
  double qpoch_n = 1.0;
  int small_run = 0;
  for (int n = 0;; ++n) {
    if (n > 0) qpoch_n *= 1.0 - std::pow(q, n);
    const double shift = std::pow(q, 0.5 * (1 - n));
    const double qn4 = std::pow(q, 0.25 * n);
    cplx term = std::pow(-I * alpha, n) / qpoch_n;
    double qk = 1.0;
    for (int k = 0; k < n; ++k) {
      term *= (1.0 - I * z * shift * qk) * (1.0 - I / z * shift * qk) * qn4;
      qk *= q;
    }
    sum += term;
    small_run = std::abs(term) < ctx.eps_trunc() * std::abs(sum) ? small_run + 1 : 0;
    if (small_run >= 3) break;
    if (n > ctx.max_terms()) {
      throw QError(ErrorCode::NonConvergent, "q_exponential_direct: series cap");
    }
  }
  return pref * sum;
}

}  // namespace qfrac
