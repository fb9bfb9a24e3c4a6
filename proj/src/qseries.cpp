#include "qfrac/qseries.hpp"

#include <boost/multiprecision/complex128.hpp>
#include <boost/multiprecision/float128.hpp>
#include <cmath>
#include <sstream>

namespace qfrac {

namespace {

using boost::multiprecision::complex128;
using boost::multiprecision::float128;

// Number of factors needed before |a| q^N drops below eps.
int truncation_index(double mod_a, const QContext& ctx) {
  if (mod_a < ctx.eps_trunc()) return 0;
  const double n = std::log(ctx.eps_trunc() / mod_a) / ctx.log_q();
  return static_cast<int>(std::floor(n)) + 1;
}

void check_terms(int n, const QContext& ctx, const char* what) {
  if (n > ctx.max_terms()) {
    std::ostringstream os;
    os << what << ": truncation needs " << n << " terms, cap is "
       << ctx.max_terms();
    throw QError(ErrorCode::NonConvergent, os.str());
  }
}

}  // namespace

cplx qpoch_finite(cplx a, int n, const QContext& ctx) {
  cplx prod = 1.0;
  double qk = 1.0;
  for (int k = 0; k < n; ++k) {
    prod *= 1.0 - a * qk;
    qk *= ctx.q();
  }
  return prod;
}

ProductEval qpoch_infinite_eval(cplx a, const QContext& ctx) {
  const double mod_a = std::abs(a);
  const int n = truncation_index(mod_a, ctx);
  check_terms(n, ctx, "qpoch_infinite");
  cplx prod = 1.0;
  double qk = 1.0;
  for (int k = 0; k < n; ++k) {
    prod *= 1.0 - a * qk;
    qk *= ctx.q();
  }
  const double tail = mod_a * qk;
  return {prod, tail / ((1.0 - ctx.q()) * (1.0 - tail)), n};
}

cplx qpoch_infinite(cplx a, const QContext& ctx) {
  return qpoch_infinite_eval(a, ctx).value;
}

double qpoch_infinite_qpow(double alpha, const QContext& ctx) {
  const double lead = -std::expm1(alpha * ctx.log_q());
  return lead * qpoch_infinite(ctx.qpow(alpha + 1.0), ctx).real();
}

cplx qpoch_real_index(cplx A, double beta, const QContext& ctx) {
  const cplx den = qpoch_infinite(A * ctx.qpow(beta), ctx);
  if (std::abs(den) < ctx.eps_trunc()) {
    throw QError(ErrorCode::DivisionNearZero,
                 "qpoch_real_index: (A q^beta; q)_inf vanishes");
  }
  return qpoch_infinite(A, ctx) / den;
}

cplx h_product_z(cplx z, std::span<const cplx> params, const QContext& ctx) {
  cplx prod = 1.0;
  const cplx zi = 1.0 / z;
  for (const cplx& a : params) {
    prod *= qpoch_infinite(a * z, ctx) * qpoch_infinite(a * zi, ctx);
  }
  return prod;
}

cplx h_product(double theta, std::span<const cplx> params,
               const QContext& ctx) {
  return h_product_z(std::polar(1.0, theta), params, ctx);
}

double h_pair_angle(double t, double psi, const QContext& ctx) {
  const int n = truncation_index(std::abs(t), ctx);
  check_terms(n, ctx, "h_pair_angle");
  const double s = std::sin(0.5 * psi);
  const double s2 = 4.0 * s * s;
  double prod = 1.0;
  double tk = t;
  for (int k = 0; k < n; ++k) {
    const double d = 1.0 - tk;
    prod *= d * d + tk * s2;
    tk *= ctx.q();
  }
  return prod;
}

cplx jtp_theta_series(cplx z, const QContext& ctx) {
  if (z == 0.0) {
    throw QError(ErrorCode::DomainError, "jtp_theta_series: z = 0");
  }
  const double q = ctx.q();
  const cplx zi = 1.0 / z;
  cplx sum = 1.0;
  double running_max = 1.0;
  cplx pos = 1.0;  // q^{n(n-1)/2} z^n
  cplx neg = 1.0;  // q^{m(m+1)/2} z^{-m}
  double qn = 1.0;
  for (int m = 1;; ++m) {
    pos *= qn * z;   // multiply by q^{m-1} z
    qn *= q;
    neg *= qn * zi;  // multiply by q^{m} / z
    sum += pos + neg;
    running_max = std::max({running_max, std::abs(pos), std::abs(neg)});
    if (std::abs(pos) < ctx.eps_trunc() * running_max &&
        std::abs(neg) < ctx.eps_trunc() * running_max) {
      break;
    }
    check_terms(m, ctx, "jtp_theta_series");
  }
  return sum;
}

cplx jtp_theta_product(cplx z, const QContext& ctx) {
  return qpoch_infinite(ctx.q(), ctx) * qpoch_infinite(-z, ctx) *
         qpoch_infinite(-ctx.q() / z, ctx);
}

cplx jtp_theta_logq_derivative_series(cplx z, const QContext& ctx) {
  if (z == 0.0) {
    throw QError(ErrorCode::DomainError,
                 "jtp_theta_logq_derivative_series: z = 0");
  }
  const double q = ctx.q();
  const cplx zi = 1.0 / z;
  cplx sum = 0.0;
  double running_max = 0.0;
  cplx pos = 1.0;
  cplx neg = 1.0;
  double qn = 1.0;
  for (int m = 1;; ++m) {
    pos *= qn * z;
    qn *= q;
    neg *= qn * zi;
    const cplx tp = pos * static_cast<double>(m);
    const cplx tn = neg * static_cast<double>(-m);
    sum += tp + tn;
    running_max = std::max({running_max, std::abs(tp), std::abs(tn)});
    if (std::abs(tp) < ctx.eps_trunc() * running_max &&
        std::abs(tn) < ctx.eps_trunc() * running_max) {
      break;
    }
    check_terms(m, ctx, "jtp_theta_logq_derivative_series");
  }
  return sum * (0.5 * ctx.log_q()) / qpoch_infinite(q, ctx);
}

cplx bhs_terminating(std::span<const cplx> upper, std::span<const cplx> lower,
                     cplx arg, int n_max, const QContext& ctx) {
  if (n_max < 0) {
    throw QError(ErrorCode::DomainError, "bhs_terminating: n_max < 0");
  }
  const double qn = std::pow(ctx.q(), n_max);
  std::size_t term_index = upper.size();
  for (std::size_t j = 0; j < upper.size(); ++j) {
    if (std::abs(upper[j] * qn - 1.0) < 1e-9) {
      term_index = j;
      break;
    }
  }
  if (term_index == upper.size()) {
    throw QError(ErrorCode::DomainError,
                 "bhs_terminating: no upper parameter equals q^{-n}");
  }

  const float128 q128 = ctx.q();
  std::vector<complex128> up;
  up.reserve(upper.size());
  for (std::size_t j = 0; j < upper.size(); ++j) {
    if (j == term_index) {
      up.emplace_back(boost::multiprecision::pow(q128, -n_max), float128(0));
    } else {
      up.emplace_back(upper[j].real(), upper[j].imag());
    }
  }
  std::vector<complex128> lo;
  lo.reserve(lower.size());
  for (const cplx& l : lower) lo.emplace_back(l.real(), l.imag());
  const complex128 z(arg.real(), arg.imag());

  complex128 term(1);
  complex128 sum(1);
  float128 qk(1);
  for (int k = 0; k < n_max; ++k) {
    complex128 num(1);
    for (const auto& u : up) num *= complex128(1) - u * qk;
    complex128 den(1);
    for (std::size_t j = 0; j < lo.size(); ++j) {
      const complex128 f = complex128(1) - lo[j] * qk;
      if (boost::multiprecision::abs(f) < 1e-14) {
        std::ostringstream os;
        os << "bhs_terminating: lower parameter " << j
           << " hits q^{-" << k << "}";
        throw QError(ErrorCode::SingularLowerParameter, os.str());
      }
      den *= f;
    }
    den *= float128(1) - qk * q128;
    term *= num / den * z;
    sum += term;
    qk *= q128;
  }
  return {static_cast<double>(sum.real()), static_cast<double>(sum.imag())};
}

}  // namespace qfrac
