#pragma once
// Independent reference computations for the tests. Everything here is
// written from the textbook definitions with plain loops in long double (50
// digits where terminating sums cancel): no library kernels, no adaptive
// quadrature.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

using ld = long double;
using lc = std::complex<long double>;
using cd = std::complex<double>;

inline constexpr ld pi = 3.141592653589793238462643383279502884L;

inline cd to_cd(lc v) { return {static_cast<double>(v.real()), static_cast<double>(v.imag())}; }

// (a;q)_n
inline lc poch(lc a, int n, ld q) {
  lc p = 1;
  ld qk = 1;
  for (int k = 0; k < n; ++k, qk *= q) p *= 1.0L - a * qk;
  return p;
}

// (a;q)_inf with a fixed, generous number of factors.
inline lc poch_inf(lc a, ld q, int terms = 4000) {
  lc p = 1;
  ld qk = 1;
  for (int k = 0; k < terms && qk > 1e-30L; ++k, qk *= q) p *= 1.0L - a * qk;
  return p;
}

// h(cos theta; a_1..a_n) = prod_j (a_j e^{i theta}, a_j e^{-i theta}; q)_inf.
inline lc h(ld theta, std::initializer_list<lc> as, ld q) {
  const lc e = std::polar(1.0L, theta);
  lc p = 1;
  for (lc a : as) p *= poch_inf(a * e, q) * poch_inf(a / e, q);
  return p;
}

// h at complex z.
inline lc hz(lc z, std::initializer_list<lc> as, ld q) {
  lc p = 1;
  for (lc a : as) p *= poch_inf(a * z, q) * poch_inf(a / z, q);
  return p;
}

// w_H(cos t) sin t = (q, e^{2it}, e^{-2it}; q)_inf / 2pi.
inline ld wH_sin(ld t, ld q) {
  return (poch_inf(q, q) * poch_inf(std::polar(1.0L, 2 * t), q) *
          poch_inf(std::polar(1.0L, -2 * t), q)).real() / (2 * pi);
}

// Askey-Wilson weight w(cos t; a) = (e^{2it}, e^{-2it}; q)_inf / h(cos t; a).
inline ld aw_w(ld t, lc a1, lc a2, lc a3, lc a4, ld q) {
  const lc num = poch_inf(std::polar(1.0L, 2 * t), q) * poch_inf(std::polar(1.0L, -2 * t), q);
  return (num / h(t, {a1, a2, a3, a4}, q)).real();
}

// H_n(cos t|q) = sum_k [n k]_q e^{i(n-2k)t}.
inline lc hermite(int n, ld t, ld q) {
  lc s = 0;
  for (int k = 0; k <= n; ++k) {
    const ld binom = (poch(q, n, q) / (poch(q, k, q) * poch(q, n - k, q))).real();
    s += binom * std::polar(1.0L, (n - 2 * k) * t);
  }
  return s;
}

// Brute-force terminating r+1 phi r sum up to k = n.
inline lc phi_sum(const std::vector<lc>& up, const std::vector<lc>& lo, lc arg, ld q, int n) {
  lc s = 0;
  for (int k = 0; k <= n; ++k) {
    lc term = std::pow(arg, k) / poch(q, k, q);
    for (lc u : up) term *= poch(u, k, q);
    for (lc l : lo) term /= poch(l, k, q);
    s += term;
  }
  return s;
}

// p_n(x; a) from its 4phi3 definition at z (x = (z + 1/z)/2).
inline lc aw_poly(int n, lc z, lc a1, lc a2, lc a3, lc a4, ld q) {
  const lc pre = std::pow(a1, -n) * poch(a1 * a2, n, q) * poch(a1 * a3, n, q) * poch(a1 * a4, n, q);
  return pre * phi_sum({std::pow(lc(q), -n), a1 * a2 * a3 * a4 * std::pow(lc(q), n - 1), a1 * z, a1 / z},
                       {a1 * a2, a1 * a3, a1 * a4}, q, q, n);
}

// 50-digit real arithmetic for terminating sums, whose terms cancel far
// beyond long double for moderate n.
using hp = boost::multiprecision::cpp_bin_float_50;

// sum_k (q^{-n};q)_k prod(up;q)_k / prod(lo;q)_k arg^k / (q;q)_k, real data.
// abs_sum receives sum_k |term_k|, the scale of the cancellation.
inline double phi_terminating(int n, const std::vector<double>& up, const std::vector<double>& lo,
                              double arg, double q, double* abs_sum = nullptr) {
  const hp Q = q, qinv_n = pow(Q, -n);
  hp s = 0, term = 1, qk = 1, mag = 0;
  for (int k = 0; k <= n; ++k) {
    s += term;
    mag += abs(term);
    hp f = (1 - qinv_n * qk) / (1 - Q * qk) * hp(arg);
    for (double u : up) f *= 1 - hp(u) * qk;
    for (double l : lo) f /= 1 - hp(l) * qk;
    term *= f;
    qk *= Q;
  }
  if (abs_sum) *abs_sum = static_cast<double>(mag);
  return static_cast<double>(s);
}

// p_n(cos theta; a,b,c,d) for real parameters; (a e^{it}, a e^{-it};q)_k is
// the real product of 1 - 2 a x q^j + a^2 q^{2j}.
inline double aw_poly_real(int n, double theta, double a, double b, double c, double d, double q) {
  const hp Q = q, A = a, B = b, C = c, D = d, x = std::cos(theta);
  const hp top = A * B * C * D * pow(Q, n - 1), qinv_n = pow(Q, -n);
  hp pre = pow(A, -n);
  for (int j = 0; j < n; ++j) {
    const hp qj = pow(Q, j);
    pre *= (1 - A * B * qj) * (1 - A * C * qj) * (1 - A * D * qj);
  }
  hp s = 0, term = 1, qk = 1;
  for (int k = 0; k <= n; ++k) {
    s += term;
    term *= (1 - qinv_n * qk) * (1 - top * qk) * (1 - 2 * A * x * qk + A * A * qk * qk) /
            ((1 - A * B * qk) * (1 - A * C * qk) * (1 - A * D * qk) * (1 - Q * qk)) * Q;
    qk *= Q;
  }
  return static_cast<double>(pre * s);
}

// Trapezoid rule on [0, pi] for integrands that extend to even, 2pi-periodic
// smooth functions (all theta-integrands here): geometric convergence.
inline lc trapezoid(const std::function<lc(ld)>& f, int n = 4000) {
  lc s = 0.5L * (f(0) + f(pi));
  for (int k = 1; k < n; ++k) s += f(pi * k / n);
  return s * pi / static_cast<ld>(n);
}

// (K_{a,c} f)(theta) straight from the integral definition.
inline lc K(ld a, ld c, const std::function<lc(ld)>& f, ld theta, ld q, int n = 4000) {
  const ld qa2 = std::pow(q, a / 2);
  const ld konst = std::pow(q, a * (a - 3) / 4) * std::pow((1 - q) / (2 * c), a) *
                   poch_inf(std::pow(q, a), q).real();
  const lc outer = h(theta, {-c * std::pow(q, 1 - a / 2), -qa2 / c}, q);
  const lc e = std::polar(1.0L, theta);
  const lc integral = trapezoid(
      [&](ld phi) {
        return wH_sin(phi, q) * f(phi) /
               (h(phi, {-1.0L / c, -c * q}, q) * h(phi, {qa2 * e, qa2 / e}, q));
      },
      n);
  return konst * outer * integral;
}

// (T(a,b,r) f)(theta) from the integral definition (real a, b).
inline lc T(ld a, ld b, ld r, const std::function<lc(ld)>& f, ld theta, ld q, int n = 4000) {
  const lc e = std::polar(1.0L, theta);
  const lc integral = trapezoid(
      [&](ld phi) {
        return wH_sin(phi, q) * f(phi) / (h(phi, {a, b}, q) * h(phi, {r * e, r / e}, q));
      },
      n);
  return poch_inf(r * r, q) * h(theta, {a, b}, q) * integral;
}

inline double rel(cd got, cd want) {
  const double s = std::max(std::abs(got), std::abs(want));
  return s > 0 ? std::abs(got - want) / s : 0.0;
}
inline double rel(cd got, lc want) { return rel(got, to_cd(want)); }
inline double rel(cd got, double want) { return rel(got, cd(want)); }

}  // namespace oracle
