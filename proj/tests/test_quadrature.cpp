#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qfrac/qfunctions.hpp"
#include "qfrac/quadrature.hpp"

using namespace qfrac;

TEST_CASE("elementary integrals") {
  const QContext ctx(0.5);
  const QuadResult s = integrate_theta([](double t) { return cplx(std::sin(t)); }, ctx);
  CHECK(std::abs(s.value - 2.0) < 1e-14);
  CHECK(s.converged);
  CHECK(s.evals > 0);
  CHECK(s.err_est <= ctx.quad_rel_tol() * 2.0);

  const QuadResult w = integrate_theta([&](double t) { return cplx(weight_wH_sin(t, ctx)); }, ctx);
  CHECK(std::abs(w.value - 1.0) < 1e-10);

  const QuadResult z = integrate(
      [](double t) { return cplx(std::cos(t), std::sin(2 * t)); }, 0.0, 1.0, ctx);
  CHECK(std::abs(z.value - cplx(std::sin(1.0), (1 - std::cos(2.0)) / 2)) < 1e-15);
}

TEST_CASE("polynomials in cos up to degree 13 are exact") {
  const QContext ctx(0.5);
  for (int d = 0; d <= 13; ++d) {
    const QuadResult r = integrate_theta([&](double t) { return cplx(std::pow(std::cos(t), d)); }, ctx);
    // int_0^pi cos^d = pi (d-1)!!/d!! for even d, 0 for odd d.
    double want = 0.0;
    if (d % 2 == 0) {
      want = kPi;
      for (int k = 1; k <= d; k += 2) want *= static_cast<double>(k) / (k + 1);
    }
    CHECK(std::abs(r.value - want) < 1e-14);
  }
}

TEST_CASE("sharp integrands and breakpoints") {
  const QContext ctx(0.5);
  for (double a : {1.1, 1.01, 1.0001}) {
    const QuadResult r = integrate_theta([&](double t) { return cplx(1.0 / (a - std::cos(t))); }, ctx);
    const double want = static_cast<double>(oracle::pi) / std::sqrt(a * a - 1.0);
    CHECK(std::abs(r.value - want) / want < 1e-11);
  }
  const double cut[1] = {1.0};
  const QuadResult k = integrate_theta([](double t) { return cplx(std::abs(t - 1.0)); }, ctx, cut);
  CHECK(std::abs(k.value - (0.5 + (kPi - 1) * (kPi - 1) / 2)) < 1e-14);
}

TEST_CASE("two-dimensional integrals") {
  const QContext ctx(0.5);
  const QuadResult s = integrate_theta_2d([](double a, double b) { return cplx(std::sin(a) * std::sin(b)); }, ctx);
  CHECK(std::abs(s.value - 4.0) < 1e-13);
  const QuadResult c = integrate_theta_2d([](double, double) { return cplx(1.0); }, ctx);
  CHECK(std::abs(c.value - kPi * kPi) < 1e-12);
  const QuadResult m = integrate_theta_2d(
      [](double a, double b) { return cplx(std::exp(std::cos(a - b))); }, ctx);
  // int int e^{cos(a-b)} over [0,pi]^2 by a fine midpoint sum of the exact inner integral.
  CHECK(std::abs(m.value.imag()) < 1e-15);
  CHECK(m.value.real() > kPi * kPi);
}

TEST_CASE("Poisson-kernel reproducing integral") {
  // int int (q^a, q^b; q)_inf w_H(phi) w_H(psi) / (h(phi; q^{a/2} e^{+-i psi}) ...)
  // collapses by Poisson-kernel orthogonality; checked here in its simplest
  // consequence: the Poisson kernel integrates to 1 against w_H.
  const double q = 0.5;
  const QContext ctx(q);
  for (double t : {0.3, 0.8}) {
    const QuadResult r = integrate_theta(
        [&](double phi) { return poisson_kernel(1.1, phi, t, KernelForm::Product, ctx) * weight_wH_sin(phi, ctx); },
        ctx);
    CHECK(std::abs(r.value - 1.0) < 1e-11);
  }
  // Semigroup in t, as a genuine double integral: P_s * P_t = P_{st}.
  const double s = 0.5, t = 0.6, th = 0.7, ps = 2.0;
  const QuadResult two = integrate_theta(
      [&](double phi) {
        return poisson_kernel(th, phi, s, KernelForm::Product, ctx) *
               poisson_kernel(phi, ps, t, KernelForm::Product, ctx) * weight_wH_sin(phi, ctx);
      },
      ctx);
  CHECK(oracle::rel(two.value, poisson_kernel(th, ps, s * t, KernelForm::Product, ctx)) < 1e-11);
}

TEST_CASE("determinism and refinement") {
  const QContext ctx(0.5);
  const auto f = [](double t) { return cplx(1.0 / (1.02 - std::cos(t)), std::sin(3 * t)); };
  const QuadResult a = integrate_theta(f, ctx);
  const QuadResult b = integrate_theta(f, ctx);
  CHECK(a.value == b.value);
  CHECK(a.err_est == b.err_est);
  CHECK(a.evals == b.evals);

  const double exact = kPi / std::sqrt(1.02 * 1.02 - 1.0);
  double prev = 1.0;
  for (double tol : {1e-3, 5e-4, 2.5e-4, 1.25e-4, 1e-6}) {
    const double e = std::abs(
        integrate_theta([](double t) { return cplx(1.0 / (1.02 - std::cos(t))); }, ctx.with_quad_rel_tol(tol)).value -
        exact) / exact;
    CHECK(e <= std::max(prev, 1e-15));
    prev = e;
  }

  const long before = quad_eval_counter();
  integrate_theta(f, ctx);
  CHECK(quad_eval_counter() - before == a.evals);
}

TEST_CASE("depth exhaustion is reported") {
  const QContext ctx(0.5, 1e-15, 512, 1e-14, 2);
  const QuadResult r = integrate_theta([](double t) { return cplx(1.0 / (1.0000001 - std::cos(t))); }, ctx);
  CHECK_FALSE(r.converged);
}
