#include "qfrac/operators.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace qfrac {

namespace {

// Cache of a theta-independent integrand factor, keyed on the exact node.
class PhiCache {
 public:
  template <class F>
  cplx get(double phi, F&& compute) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      const auto it = map_.find(phi);
      if (it != map_.end()) return it->second;
    }
    const cplx v = compute(phi);
    std::lock_guard<std::mutex> lock(mutex_);
    map_.emplace(phi, v);
    return v;
  }

 private:
  std::mutex mutex_;
  std::unordered_map<double, cplx> map_;
};

bool on_unit_circle(cplx z) { return std::abs(std::abs(z) - 1.0) < 1e-13; }

// Dyadic seed partition shared by every evaluation point, plus the kernel
// peak. Only the panel holding the peak differs between evaluation points,
// so the phi-caches hit on everything else.
std::vector<double> seed_cuts(double peak) {
  std::vector<double> cuts;
  cuts.reserve(17);
  for (int k = 1; k < 16; ++k) cuts.push_back(kPi * k / 16.0);
  if (peak > 0.0 && peak < kPi) cuts.push_back(peak);
  return cuts;
}

// 1 / h(cos phi; alpha z, alpha / z) for real alpha.
cplx inverse_pair_kernel(double alpha, cplx z, double phi,
                         const QContext& ctx) {
  if (alpha == 0.0) return 1.0;
  if (on_unit_circle(z)) {
    const double th = std::arg(z);
    return 1.0 / (h_pair_angle(alpha, th + phi, ctx) *
                  h_pair_angle(alpha, th - phi, ctx));
  }
  const cplx params[2] = {alpha * z, alpha / z};
  return 1.0 / h_product_z(std::polar(1.0, phi), params, ctx);
}

// Where 1/h(cos phi; alpha e^{+-i theta}) peaks.
double kernel_peak(double alpha, cplx z) {
  const double th = std::abs(std::arg(z));
  return alpha >= 0.0 ? th : kPi - th;
}

// outer(z) * int_0^pi density(phi) / h(cos phi; alpha z, alpha/z) d phi.
AnalyticFn integral_operator(std::function<cplx(double)> density,
                             double alpha, std::function<cplx(cplx)> outer,
                             double rho, std::string label,
                             const QContext& ctx) {
  auto cache = std::make_shared<PhiCache>();
  auto eval = [density = std::move(density), outer = std::move(outer), alpha,
               cache, ctx, label](cplx z) -> cplx {
    const ThetaFn integrand = [&](double phi) {
      return cache->get(phi, density) *
             inverse_pair_kernel(alpha, z, phi, ctx);
    };
    const auto cuts = seed_cuts(kernel_peak(alpha, z));
    const QuadResult r = integrate_theta(integrand, ctx, cuts);
    if (!r.converged) {
      std::ostringstream os;
      os << label << ": quadrature did not converge at z = " << z
         << " (err " << r.err_est << ")";
      throw QError(ErrorCode::MaxDepthExceeded, os.str());
    }
    return outer(z) * r.value;
  };
  return memoized(AnalyticFn(std::move(eval), rho, std::move(label)));
}

// h(cos phi; -1/c, -cq) on the unit circle.
double k_weight_factor(double c, double phi, const QContext& ctx) {
  return h_pair_angle(-1.0 / c, phi, ctx) * h_pair_angle(-c * ctx.q(), phi, ctx);
}

cplx x_of(cplx z) { return 0.5 * (z + 1.0 / z); }

// Evaluates a quotient with a removable singularity at z^2 = 1 by averaging
// z(1 +- d) and extrapolating in d^2.
template <class F>
cplx removable_at_pm1(F&& quotient, cplx z) {
  if (std::abs(z * z - 1.0) > 1e-9) return quotient(z);
  constexpr double d = 1e-6;
  const auto avg = [&](double s) {
    return 0.5 * (quotient(z * (1.0 + s)) + quotient(z * (1.0 - s)));
  };
  return (4.0 * avg(d) - avg(2.0 * d)) / 3.0;
}

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

// ---- parameter records -----------------------------------------------------

bool is_valid(const KParams& p, const QContext& ctx) {
  try {
    validate(p, ctx);
    return true;
  } catch (const QError&) {
    return false;
  }
}

void validate(const KParams& p, const QContext& ctx) {
  if (!std::isfinite(p.a) || p.a < 0.0) {
    throw QError(ErrorCode::ParamDomain, "a must be >= 0");
  }
  const double q = ctx.q();
  if (!(p.c > 1.0 && p.c * q < 1.0)) {
    throw QError(ErrorCode::ParamDomain,
                 "c outside (1, 1/q): c = " + fmt_num(p.c) +
                     ", 1/q = " + fmt_num(1.0 / q));
  }
  // Factors of h(cos phi; -1/c, -cq) along the contour.
  double min_factor = 1.0;
  for (int j = 0; j <= 64; ++j) {
    const cplx e = std::polar(1.0, kPi * j / 64.0);
    for (const double alpha : {-1.0 / p.c, -p.c * q}) {
      double qk = 1.0;
      while (std::abs(alpha) * qk > 1e-3) {
        min_factor = std::min(min_factor, std::abs(1.0 - alpha * qk * e));
        qk *= q;
      }
    }
  }
  if (min_factor <= 1e-8) {
    throw QError(ErrorCode::ParamDomain,
                 "c too close to the edge of (1, 1/q): pole on the contour");
  }
}

void validate(const TParams& p, const QContext&) {
  if (!(std::abs(p.a) < 1.0 && std::abs(p.b) < 1.0)) {
    throw QError(ErrorCode::ParamDomain, "T(a,b,r) needs |a|, |b| < 1");
  }
  if (!(p.r > -1.0 && p.r < 1.0)) {
    throw QError(ErrorCode::ParamDomain, "T(a,b,r) needs -1 < r < 1");
  }
}

double k_constant(const KParams& p, const QContext& ctx) {
  const double q = ctx.q();
  return std::pow(q, p.a * (p.a - 3.0) / 4.0) *
         std::pow((1.0 - q) / (2.0 * p.c), p.a);
}

cplx k_outer_factor(const KParams& p, cplx z, const QContext& ctx) {
  const double q = ctx.q();
  const cplx params[2] = {-p.c * std::pow(q, 1.0 - p.a / 2.0),
                          -std::pow(q, p.a / 2.0) / p.c};
  return h_product_z(z, params, ctx);
}

// ---- test functions ----------------------------------------------------------

AnalyticFn k_basis(double c, int n, const QContext& ctx) {
  return AnalyticFn(
      [c, n, ctx](cplx z) {
        const cplx params[2] = {-1.0 / c, -c * ctx.q()};
        return h_product_z(z, params, ctx) * hermite_cq(n, x_of(z), ctx);
      },
      0.0, "h(x;-1/c,-cq)H_" + std::to_string(n));
}

AnalyticFn t_basis(cplx a, cplx b, int n, const QContext& ctx) {
  return AnalyticFn(
      [a, b, n, ctx](cplx z) {
        const cplx params[2] = {a, b};
        return h_product_z(z, params, ctx) * hermite_cq(n, x_of(z), ctx);
      },
      0.0, "h(x;a,b)H_" + std::to_string(n));
}

AnalyticFn fn_cos2theta() {
  return AnalyticFn::from_x([](cplx x) { return 2.0 * x * x - 1.0; }, 0.0,
                            "cos2theta");
}

AnalyticFn fn_exp() {
  return AnalyticFn::from_x([](cplx x) { return std::exp(x); }, 0.0, "exp(x)");
}

// ---- D_q --------------------------------------------------------------------

AnalyticFn apply_Dq(const AnalyticFn& f, const QContext& ctx) {
  const double sq = std::sqrt(ctx.q());
  if (f.annulus_rho() > sq) {
    throw QError(ErrorCode::AnnulusExhausted,
                 "D_q: " + f.label() + " has annulus rho " +
                     fmt_num(f.annulus_rho()) + " > q^{1/2}");
  }
  const double rho = f.annulus_rho() / sq;
  auto eval = [f, sq](cplx z) {
    const auto quotient = [&](cplx w) {
      return (f(sq * w) - f(w / sq)) / ((sq - 1.0 / sq) * (w - 1.0 / w) * 0.5);
    };
    return removable_at_pm1(quotient, z);
  };
  return AnalyticFn(std::move(eval), rho, "Dq[" + f.label() + "]");
}

AnalyticFn apply_Dq_power(const AnalyticFn& f, int m, const QContext& ctx) {
  AnalyticFn g = f;
  for (int i = 0; i < m; ++i) g = memoized(apply_Dq(g, ctx));
  return g;
}

AnalyticFn apply_Dq_inverse(double c, const AnalyticFn& f,
                            const QContext& ctx) {
  validate(KParams{1.0, c}, ctx);
  const double q = ctx.q();
  const double sq = std::sqrt(q);
  const double poch_q = qpoch_infinite(q, ctx).real();
  auto density = [f, c, ctx, poch_q](double phi) {
    return weight_wH_sin(phi, ctx) * poch_q * f(std::polar(1.0, phi)) /
           k_weight_factor(c, phi, ctx);
  };
  auto outer = [c, sq, q, ctx](cplx z) {
    const cplx params[2] = {-c * sq, -sq / c};
    return (1.0 / sq) * ((1.0 - q) / (2.0 * c)) * h_product_z(z, params, ctx);
  };
  return integral_operator(std::move(density), sq, std::move(outer), sq,
                           "Dq^-1[" + f.label() + "]", ctx);
}

// ---- K_{a,c} ----------------------------------------------------------------

AnalyticFn apply_K(const KParams& p, const AnalyticFn& f, const QContext& ctx) {
  validate(p, ctx);
  if (p.a == 0.0) return f;
  const double c = p.c;
  const double constant = k_constant(p, ctx) * qpoch_infinite_qpow(p.a, ctx);
  auto density = [f, c, ctx](double phi) {
    return weight_wH_sin(phi, ctx) * f(std::polar(1.0, phi)) /
           k_weight_factor(c, phi, ctx);
  };
  auto outer = [p, constant, ctx](cplx z) {
    return constant * k_outer_factor(p, z, ctx);
  };
  const double alpha = std::pow(ctx.q(), p.a / 2.0);
  return integral_operator(std::move(density), alpha, std::move(outer), alpha,
                           "K[" + fmt_num(p.a) + "," + fmt_num(p.c) + "](" +
                               f.label() + ")",
                           ctx);
}

cplx apply_K_eigen(const KParams& p, int n, cplx z, const QContext& ctx) {
  validate(p, ctx);
  return k_constant(p, ctx) * std::pow(ctx.q(), n * p.a / 2.0) *
         k_outer_factor(p, z, ctx) * hermite_cq(n, x_of(z), ctx);
}

// ---- generator ----------------------------------------------------------------

const char* to_string(JExponent e) {
  return e == JExponent::AsDisplayed ? "displayed" : "derivative";
}

namespace {

double j_log_exponent(int n, double a, JExponent e) {
  return e == JExponent::AsDisplayed ? (n + 1) * a / 2.0 - 0.75
                                     : (n + a) / 2.0 - 0.75;
}

// The two theta-derivative terms of d/da h(x; -cq^{1-a/2}, -q^{a/2}/c).
cplx j_theta_part(double a, double c, cplx z, const QContext& ctx) {
  const double q = ctx.q();
  const double qa2 = std::pow(q, a / 2.0);
  const double q1a2 = std::pow(q, 1.0 - a / 2.0);
  const cplx s1 = jtp_theta_logq_derivative_series(z * qa2 / c, ctx);
  const cplx s2 = jtp_theta_logq_derivative_series(qa2 / (z * c), ctx);
  const cplx pair1 =
      qpoch_infinite(-qa2 / (c * z), ctx) * qpoch_infinite(-c * z * q1a2, ctx);
  const cplx pair2 =
      qpoch_infinite(-qa2 * z / c, ctx) * qpoch_infinite(-c * q1a2 / z, ctx);
  return s1 * pair1 + s2 * pair2;
}

}  // namespace

cplx apply_J_series(const KParams& p, int n, cplx z, JExponent e,
                    const QContext& ctx) {
  validate(p, ctx);
  const double q = ctx.q();
  const double log_term =
      std::log((1.0 - q) / (2.0 * p.c)) + j_log_exponent(n, p.a, e) * ctx.log_q();
  const cplx bracket = k_outer_factor(p, z, ctx) * log_term +
                       j_theta_part(p.a, p.c, z, ctx);
  return k_constant(p, ctx) * std::pow(q, n * p.a / 2.0) * bracket *
         hermite_cq(n, x_of(z), ctx);
}

cplx apply_J_zero(double c, int n, cplx z, JExponent e, const QContext& ctx) {
  validate(KParams{0.0, c}, ctx);
  const double q = ctx.q();
  const double expo = e == JExponent::AsDisplayed ? -0.75 : n / 2.0 - 0.75;
  const cplx params[2] = {-c * q, -1.0 / c};
  const cplx hn = hermite_cq(n, x_of(z), ctx);
  const cplx first = h_product_z(z, params, ctx) * hn *
                     std::log((1.0 - q) * std::pow(q, expo) / (2.0 * c));
  const cplx s1 = jtp_theta_logq_derivative_series(z / c, ctx) *
                  qpoch_infinite(-1.0 / (c * z), ctx) *
                  qpoch_infinite(-c * z * q, ctx);
  const cplx s2 = jtp_theta_logq_derivative_series(1.0 / (z * c), ctx) *
                  qpoch_infinite(-z / c, ctx) * qpoch_infinite(-c * q / z, ctx);
  return first + (s1 + s2) * hn;
}

cplx generator_finite_difference(const KParams& p, const AnalyticFn& f,
                                 double theta, double step,
                                 const QContext& ctx) {
  const cplx z = std::polar(1.0, theta);
  const cplx base = apply_K(p, f, ctx)(z);
  const auto diff = [&](double h) {
    return (apply_K(KParams{p.a + h, p.c}, f, ctx)(z) - base) / h;
  };
  return 2.0 * diff(0.5 * step) - diff(step);
}

AnalyticFn apply_J0(double c, const AnalyticFn& f, JExponent e,
                    const QContext& ctx) {
  validate(KParams{0.0, c}, ctx);
  struct State {
    std::once_flag once;
    std::vector<cplx> coeffs;
    PhiCache g;
  };
  auto state = std::make_shared<State>();
  const auto coefficients = [state, f, c, ctx]() -> const std::vector<cplx>& {
    std::call_once(state->once, [&] {
      const auto g = [&](double phi) {
        return state->g.get(phi, [&](double t) {
          return f(std::polar(1.0, t)) / k_weight_factor(c, t, ctx);
        });
      };
      constexpr int kCap = 800;
      double biggest = 0.0;
      int small_run = 0;
      cplx poch_n = 1.0;
      for (int n = 0; n < kCap; ++n) {
        if (n > 0) poch_n *= 1.0 - std::pow(ctx.q(), n);
        const ThetaFn integrand = [&](double phi) {
          return g(phi) * hermite_cq(n, std::cos(phi), ctx) *
                 weight_wH_sin(phi, ctx);
        };
        const QuadResult r = integrate_theta(integrand, ctx, seed_cuts(-1.0));
        if (!r.converged) {
          throw QError(ErrorCode::MaxDepthExceeded,
                       "J0 projection quadrature did not converge");
        }
        const cplx gn = r.value / poch_n;
        state->coeffs.push_back(gn);
        const double size = std::abs(gn);
        biggest = std::max(biggest, size);
        small_run = size < 1e-14 * biggest ? small_run + 1 : 0;
        if (small_run >= 4) return;
      }
      throw QError(ErrorCode::NonConvergent,
                   "J0 projection: Hermite coefficients did not decay");
    });
    return state->coeffs;
  };
  const double q = ctx.q();
  auto eval = [coefficients, c, e, q, ctx](cplx z) {
    const auto& g = coefficients();
    const cplx params[2] = {-c * q, -1.0 / c};
    const cplx hz = h_product_z(z, params, ctx);
    const cplx theta_part = j_theta_part(0.0, c, z, ctx);
    const auto hs = hermite_cq_all(static_cast<int>(g.size()) - 1, x_of(z), ctx);
    cplx sum = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
      const double expo = j_log_exponent(static_cast<int>(n), 0.0, e);
      const double log_term =
          std::log((1.0 - q) / (2.0 * c)) + expo * ctx.log_q();
      sum += g[n] * (hz * log_term + theta_part) * hs[n];
    }
    return sum;
  };
  return memoized(AnalyticFn(std::move(eval), 1.0, "J0[" + f.label() + "]"));
}

// ---- left inverse -------------------------------------------------------------

AnalyticFn chebyshev_lift(const AnalyticFn& f, int nodes,
                          double declared_rho, const QContext&) {
  if (nodes < 4) {
    throw QError(ErrorCode::DomainError, "chebyshev_lift: too few nodes");
  }
  std::vector<cplx> samples(nodes);
  std::vector<double> thetas(nodes);
  for (int j = 0; j < nodes; ++j) {
    thetas[j] = kPi * (j + 0.5) / nodes;
    samples[j] = f.at_theta(thetas[j]);
  }
  std::vector<cplx> coeffs(nodes);
  double biggest = 0.0;
  for (int k = 0; k < nodes; ++k) {
    cplx s = 0.0;
    for (int j = 0; j < nodes; ++j) s += samples[j] * std::cos(k * thetas[j]);
    coeffs[k] = s * (2.0 / nodes);
    biggest = std::max(biggest, std::abs(coeffs[k]));
  }
  coeffs[0] *= 0.5;
  // Drop the noise floor: off the circle every coefficient is amplified by
  // |z|^k, so sample noise in the tail must not be carried along.
  std::size_t keep = coeffs.size();
  for (std::size_t k = 0; k + 1 < coeffs.size(); ++k) {
    if (std::abs(coeffs[k]) < 1e-13 * biggest &&
        std::abs(coeffs[k + 1]) < 1e-13 * biggest) {
      keep = k;
      break;
    }
  }
  coeffs.resize(std::max<std::size_t>(keep, 1));
  auto eval = [coeffs](cplx z) {
    const cplx zi = 1.0 / z;
    cplx zk = 1.0, zik = 1.0, sum = 0.0;
    for (const cplx& ck : coeffs) {
      sum += ck * 0.5 * (zk + zik);
      zk *= z;
      zik *= zi;
    }
    return sum;
  };
  return AnalyticFn(std::move(eval), declared_rho, "lift[" + f.label() + "]");
}

const char* to_string(LeftInverseParam v) {
  return v == LeftInverseParam::Displayed ? "c*q^-a" : "c*q^-a/2";
}

double left_inverse_middle_c(const KParams& p, LeftInverseParam v,
                             const QContext& ctx) {
  return v == LeftInverseParam::Displayed ? p.c * std::pow(ctx.q(), -p.a)
                                          : p.c * std::pow(ctx.q(), -p.a / 2.0);
}

AnalyticFn left_inverse_apply(const KParams& p, const AnalyticFn& f,
                              LeftInverseParam v, const QContext& ctx) {
  validate(p, ctx);
  const double fl = std::floor(p.a);
  const int m = static_cast<int>(fl) + 1;
  const KParams middle{1.0 - (p.a - fl), left_inverse_middle_c(p, v, ctx)};
  try {
    validate(middle, ctx);
  } catch (const QError& e) {
    throw QError(ErrorCode::ParamDomain,
                 std::string("left inverse middle operator: ") + e.what());
  }
  const QContext tight = ctx.with_quad_rel_tol(std::min(ctx.quad_rel_tol(), 1e-12));
  const AnalyticFn composite = apply_K(middle, apply_K(p, f, tight), tight);
  // K_{m,c} f continues analytically to max(rho_f, 1/c, cq) q^{m/2}.
  const double q = ctx.q();
  const double rho =
      std::max({f.annulus_rho(), 1.0 / p.c, p.c * q}) * std::pow(q, m / 2.0);
  const AnalyticFn lifted = chebyshev_lift(composite, 48, rho, tight);
  return apply_Dq_power(lifted, m, ctx);
}

// ---- pairing -------------------------------------------------------------------

const char* to_string(PochBase b) { return b == PochBase::Q ? "q" : "q^2"; }

cplx adjoint_pairing(const KParams& p, const AnalyticFn& f, cplx tval,
                     PairingSide side, PochBase base, const QContext& ctx) {
  validate(p, ctx);
  const double q = ctx.q();
  if (side == PairingSide::Left) {
    const AnalyticFn kf = apply_K(p, f, ctx);
    const ThetaFn integrand = [&](double th) {
      const cplx z = std::polar(1.0, th);
      return q_exponential(th, tval, ctx) * kf(z) * weight_wH_sin(th, ctx) /
             k_outer_factor(p, z, ctx);
    };
    const QuadResult r = integrate_theta(integrand, ctx, seed_cuts(-1.0));
    if (!r.converged) {
      throw QError(ErrorCode::MaxDepthExceeded, "pairing: left quadrature");
    }
    return r.value;
  }
  const QContext bctx = base == PochBase::Q ? ctx : ctx.with_q(q * q);
  const cplx t2 = tval * tval;
  const cplx ratio = qpoch_infinite(std::pow(q, p.a + 1.0) * t2, bctx) /
                     qpoch_infinite(q * t2, bctx);
  const cplx ts = tval * std::pow(q, p.a / 2.0);
  const ThetaFn integrand = [&](double th) {
    return q_exponential(th, ts, ctx) * f(std::polar(1.0, th)) *
           weight_wH_sin(th, ctx) / k_weight_factor(p.c, th, ctx);
  };
  const QuadResult r = integrate_theta(integrand, ctx, seed_cuts(-1.0));
  if (!r.converged) {
    throw QError(ErrorCode::MaxDepthExceeded, "pairing: right quadrature");
  }
  return k_constant(p, ctx) * ratio * r.value;
}

// ---- T and B_q -------------------------------------------------------------------

AnalyticFn apply_T(const TParams& p, const AnalyticFn& f, const QContext& ctx) {
  validate(p, ctx);
  const cplx a = p.a, b = p.b;
  auto density = [f, a, b, ctx](double phi) {
    const cplx params[2] = {a, b};
    return weight_wH_sin(phi, ctx) * f(std::polar(1.0, phi)) /
           h_product(phi, params, ctx);
  };
  const cplx r2 = qpoch_infinite(p.r * p.r, ctx);
  auto outer = [a, b, r2, ctx](cplx z) {
    const cplx params[2] = {a, b};
    return r2 * h_product_z(z, params, ctx);
  };
  return integral_operator(std::move(density), p.r, std::move(outer),
                           std::abs(p.r),
                           "T[" + fmt_num(p.r) + "](" + f.label() + ")", ctx);
}

AnalyticFn apply_T_half_step(cplx a, double r, const AnalyticFn& f,
                             const QContext& ctx) {
  const QContext half = ctx.with_q(std::sqrt(ctx.q()));
  validate(TParams{a, a * std::sqrt(ctx.q()), r}, ctx);
  auto density = [f, a, ctx, half](double phi) {
    const cplx params[1] = {a};
    return weight_wH_sin(phi, ctx) * f(std::polar(1.0, phi)) /
           h_product(phi, params, half);
  };
  const cplx r2 = qpoch_infinite(r * r, ctx);
  auto outer = [a, r2, half](cplx z) {
    const cplx params[1] = {a};
    return r2 * h_product_z(z, params, half);
  };
  return integral_operator(std::move(density), r, std::move(outer),
                           std::abs(r), "Thalf[" + fmt_num(r) + "](" +
                                            f.label() + ")",
                           ctx);
}

double bq_scale(const QContext& ctx) {
  return 2.0 * std::pow(ctx.q(), 0.25) / (1.0 - ctx.q());
}

AnalyticFn apply_Bq(cplx a, cplx b, const AnalyticFn& f, BqForm form,
                    const QContext& ctx) {
  const double q = ctx.q();
  const double sq = std::sqrt(q);
  if (!(std::abs(a) < sq && std::abs(b) < sq)) {
    throw QError(ErrorCode::ParamDomain, "B_q(a,b) needs |a|, |b| < q^{1/2}");
  }
  if (f.annulus_rho() > sq) {
    throw QError(ErrorCode::AnnulusExhausted,
                 "B_q: " + f.label() + " has annulus rho > q^{1/2}");
  }
  const double q14 = std::pow(q, 0.25);
  if (form == BqForm::Direct) {
    const double rho =
        std::max({f.annulus_rho(), std::abs(a), std::abs(b)}) / sq;
    auto eval = [f, a, b, sq, q14, ctx](cplx z) {
      const auto quotient = [&](cplx w) {
        const cplx hp[2] = {a, b};
        const cplx hm[2] = {a / sq, b / sq};
        const cplx ratio = h_product_z(w, hp, ctx) / h_product_z(w, hm, ctx);
        const cplx up = (1.0 - a * w / sq) * (1.0 - b * w / sq) * f(sq * w);
        const cplx down = w * w * (1.0 - a / (sq * w)) * (1.0 - b / (sq * w)) *
                          f(w / sq);
        return ratio * (up - down) /
               ((q14 * q14 * q14 - 1.0 / q14) * (w * w - 1.0) * 0.5);
      };
      return removable_at_pm1(quotient, z);
    };
    return AnalyticFn(std::move(eval), rho, "Bq[" + f.label() + "]");
  }
  const QContext half = ctx.with_q(sq);
  const auto g = [a, b, q14, ctx, half](cplx z) {
    const cplx top[1] = {-q14};
    const cplx bottom[2] = {a, b};
    return h_product_z(z, top, half) / h_product_z(z, bottom, ctx);
  };
  const double gf_rho = std::max({f.annulus_rho(), std::abs(a), std::abs(b)});
  const AnalyticFn gf([f, g](cplx z) { return g(z) * f(z); }, gf_rho,
                      "g*" + f.label());
  const AnalyticFn dgf = apply_Dq(gf, ctx);
  const double rho = std::max(dgf.annulus_rho(), q14);
  return AnalyticFn([dgf, g](cplx z) { return dgf(z) / g(z); }, rho,
                    "Bq[" + f.label() + "]");
}

const char* to_string(BqHalfStep v) {
  return v == BqHalfStep::AsDisplayed ? "displayed" : "reduced";
}

AnalyticFn apply_Bq_half_step(cplx a, const AnalyticFn& f, BqHalfStep v,
                              const QContext& ctx) {
  const double q = ctx.q();
  const double sq = std::sqrt(q);
  if (!(std::abs(a) < sq)) {
    throw QError(ErrorCode::ParamDomain, "B_q(a,q^{1/2}a) needs |a| < q^{1/2}");
  }
  if (f.annulus_rho() > sq) {
    throw QError(ErrorCode::AnnulusExhausted,
                 "B_q: " + f.label() + " has annulus rho > q^{1/2}");
  }
  const double q14 = std::pow(q, 0.25);
  const cplx first_pole = v == BqHalfStep::AsDisplayed ? cplx(1.0) : a;
  double rho = std::max(f.annulus_rho(), std::abs(a)) / sq;
  // The displayed first coefficient has a pole on |z| = q^{-1/2}.
  if (v == BqHalfStep::AsDisplayed) rho = std::max(rho, sq);
  auto eval = [f, a, sq, q14, first_pole](cplx z) {
    const auto quotient = [&](cplx w) {
      const cplx up = (1.0 - a * w) / (1.0 - first_pole / (sq * w)) * f(sq * w);
      const cplx down =
          w * w * (1.0 - a / w) / (1.0 - a * w / sq) * f(w / sq);
      return (up - down) /
             ((q14 * q14 * q14 - 1.0 / q14) * (w * w - 1.0) * 0.5);
    };
    return removable_at_pm1(quotient, z);
  };
  return AnalyticFn(std::move(eval), rho, "Bqhalf[" + f.label() + "]");
}

}  // namespace qfrac
