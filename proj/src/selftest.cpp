#include "qfrac/selftest.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "qfrac/identities.hpp"

namespace qfrac {

namespace {

double rel_err(cplx got, cplx want) {
  const double s = std::max(std::abs(got), std::abs(want));
  return s > 0.0 ? std::abs(got - want) / s : 0.0;
}

std::string qtag(double q) {
  std::ostringstream os;
  os << " q=" << q;
  return os.str();
}

// Gaussian binomial [n k]_q.
double gauss_binomial(int n, int k, double q) {
  double v = 1.0;
  for (int j = 0; j < k; ++j) {
    v *= (1.0 - std::pow(q, n - j)) / (1.0 - std::pow(q, j + 1));
  }
  return v;
}

}  // namespace

std::vector<SelfCheck> run_selftest() {
  std::vector<SelfCheck> out;
  const auto check = [&](const std::string& name, double tol,
                         const std::function<double()>& measure) {
    SelfCheck c;
    c.name = name;
    c.tolerance = tol;
    try {
      c.value = measure();
      c.passed = c.value <= tol;
    } catch (const QError& e) {
      c.passed = false;
      c.notes = std::string(to_string(e.code())) + ": " + e.what();
    }
    out.push_back(c);
  };

  for (double q : {0.3, 0.5, 0.7}) {
    const QContext ctx(q);
    const std::string tag = qtag(q);

    check("poch finite*tail = infinite" + tag, 1e-13, [&] {
      const cplx a(0.3, 0.2);
      double m = 0.0;
      for (int n : {0, 1, 5, 12}) {
        m = std::max(m, rel_err(qpoch_finite(a, n, ctx) *
                                    qpoch_infinite(a * std::pow(q, n), ctx),
                                qpoch_infinite(a, ctx)));
      }
      return m;
    });

    check("poch real index at integers" + tag, 1e-13, [&] {
      const cplx a(-0.4, 0.1);
      double m = 0.0;
      for (int n : {0, 2, 7}) {
        m = std::max(m, rel_err(qpoch_real_index(a, n, ctx), qpoch_finite(a, n, ctx)));
      }
      return m;
    });

    check("(q^alpha;q)_inf vs generic product" + tag, 1e-13, [&] {
      double m = 0.0;
      for (double al : {0.25, 1.0, 2.7}) {
        m = std::max(m, rel_err(qpoch_infinite_qpow(al, ctx),
                                qpoch_infinite(std::pow(q, al), ctx)));
      }
      return m;
    });

    check("h pair angle vs complex product" + tag, 1e-13, [&] {
      double m = 0.0;
      for (double t : {0.6, -0.45, 0.95}) {
        for (double psi : {0.0, 0.3, 2.0}) {
          const cplx p[1] = {t};
          m = std::max(m, rel_err(h_pair_angle(t, psi, ctx), h_product(psi, p, ctx)));
        }
      }
      return m;
    });

    check("triple product identity" + tag, 1e-12, [&] {
      double m = 0.0;
      for (cplx z : {cplx(1.3), cplx(-0.6), cplx(0.5, 0.4), cplx(1.0)}) {
        m = std::max(m, rel_err(jtp_theta_series(z, ctx), jtp_theta_product(z, ctx)));
      }
      return m;
    });

    check("q-Chu-Vandermonde 2phi1" + tag, 1e-12, [&] {
      const cplx b = 0.35, c = -0.6;
      double m = 0.0;
      for (int n : {1, 4, 9}) {
        const cplx up[2] = {std::pow(q, -n), b};
        const cplx lo[1] = {c};
        const cplx lhs = bhs_terminating(up, lo, q, n, ctx);
        const cplx rhs = qpoch_finite(c / b, n, ctx) / qpoch_finite(c, n, ctx) *
                         std::pow(b, n);
        m = std::max(m, rel_err(lhs, rhs));
      }
      return m;
    });

    check("q-Hermite recurrence vs explicit sum" + tag, 1e-12, [&] {
      double m = 0.0;
      for (double th : {0.4, 1.3, 2.6}) {
        for (int n : {0, 3, 8, 15}) {
          cplx s = 0.0;
          for (int k = 0; k <= n; ++k) {
            s += gauss_binomial(n, k, q) * std::polar(1.0, (n - 2 * k) * th);
          }
          m = std::max(m, rel_err(hermite_cq(n, std::cos(th), ctx), s));
        }
      }
      return m;
    });

    check("Askey-Wilson 4phi3 vs recurrence" + tag, 1e-10, [&] {
      const AWParams t{0.3, -0.2, 0.5, 0.1};
      double m = 0.0;
      for (double th : {0.4, 1.3, 2.6}) {
        const auto rec = aw_polynomials_recurrence(8, std::cos(th), t, ctx);
        for (int n = 0; n <= 8; ++n) {
          m = std::max(m, rel_err(rec[n], aw_polynomial(n, th, t, ctx)));
        }
      }
      return m;
    });

    check("Askey-Wilson orthogonality" + tag, 1e-9, [&] {
      const AWParams t{0.3, -0.2, 0.5, 0.1};
      double m = 0.0;
      for (int n = 0; n <= 4; ++n) {
        for (int k = 0; k <= n; ++k) {
          const QuadResult r = integrate_theta(
              [&](double th) {
                return aw_polynomial(n, th, t, ctx) * aw_polynomial(k, th, t, ctx) *
                       aw_weight(th, t, ctx);
              },
              ctx);
          const double want = n == k ? aw_norm_Mn(n, t, ctx) : 0.0;
          m = std::max(m, std::abs(r.value - want) / aw_norm_Mn(k, t, ctx));
        }
      }
      return m;
    });

    check("E_q displayed series at -t vs expansion" + tag, 1e-12, [&] {
      double m = 0.0;
      for (double th : {0.4, 2.1}) {
        for (cplx t : {cplx(0.2), cplx(-0.3), cplx(0.1, 0.2)}) {
          m = std::max(m, rel_err(q_exponential_direct(th, -t, ctx),
                                  q_exponential(th, t, ctx)));
        }
      }
      return m;
    });

    for (const std::string id : {"I0a", "I0b", "I0c", "I0d"}) {
      const IdentitySpec& spec = identity_spec(id);
      check(id + " " + spec.title + tag, spec.tolerance, [&] {
        IdentityCase c{id, "", {{"q", q}}};
        const Residual r = run_identity(c, ctx);
        if (!r.notes.empty() && !r.passed) throw QError(ErrorCode::NonConvergent, r.notes);
        return r.max_rel;
      });
    }
  }

  const QContext ctx(0.5);
  check("quadrature: int e^{cos t} = pi I0(1)", 1e-14, [&] {
    const QuadResult r = integrate_theta([](double t) { return cplx(std::exp(std::cos(t))); }, ctx);
    return rel_err(r.value, kPi * std::cyl_bessel_i(0.0, 1.0));
  });
  check("quadrature: peaked 1/(1.001 - cos t)", 1e-12, [&] {
    const double a = 1.001;
    const QuadResult r =
        integrate_theta([&](double t) { return cplx(1.0 / (a - std::cos(t))); }, ctx);
    return rel_err(r.value, kPi / std::sqrt(a * a - 1.0));
  });
  check("quadrature: kink |cos t| with breakpoint", 1e-14, [&] {
    const double cut[1] = {kPi / 2.0};
    const QuadResult r =
        integrate_theta([](double t) { return cplx(std::abs(std::cos(t))); }, ctx, cut);
    return rel_err(r.value, 2.0);
  });
  check("quadrature: 2-D separable product", 1e-13, [&] {
    const QuadResult r = integrate_theta_2d(
        [](double a, double b) { return cplx(std::sin(a) * std::sin(b) * std::sin(b)); }, ctx);
    return rel_err(r.value, 2.0 * kPi / 2.0);
  });
  check("quadrature: halving tolerance does not increase error", 0.0, [&] {
    const auto f = [](double t) { return cplx(1.0 / (1.05 - std::cos(t))); };
    const double exact = kPi / std::sqrt(1.05 * 1.05 - 1.0);
    double prev = 1.0;
    double worst_increase = 0.0;
    for (double tol : {1e-4, 5e-5, 2.5e-5, 1.25e-5}) {
      const double e = std::abs(integrate_theta(f, ctx.with_quad_rel_tol(tol)).value - exact) / exact;
      // Below 1e-15 the comparison is roundoff.
      if (e > 1e-15) worst_increase = std::max(worst_increase, e - prev);
      prev = std::max(e, 1e-15);
    }
    return std::max(0.0, worst_increase);
  });
  return out;
}

}  // namespace qfrac
