#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace qfrac {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

enum class ErrorCode {
  NonConvergent,
  DivisionNearZero,
  SingularLowerParameter,
  DomainError,
  PoleOnContour,
  ParamDomain,
  AnnulusExhausted,
  MaxDepthExceeded,
  CaseInvalid,
  Usage,
};

const char* to_string(ErrorCode code);

/// Numerical failure raised by the q-series kernels and operators.
class QError : public std::runtime_error {
 public:
  QError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Global numerical regime: the base q and every truncation and quadrature
/// tolerance. Construction validates; instances are immutable values.
class QContext {
 public:
  explicit QContext(double q, double eps_trunc = 1e-15, int max_terms = 512,
                    double quad_rel_tol = 1e-11, int quad_max_depth = 40);

  double q() const noexcept { return q_; }
  double eps_trunc() const noexcept { return eps_trunc_; }
  int max_terms() const noexcept { return max_terms_; }
  double quad_rel_tol() const noexcept { return quad_rel_tol_; }
  int quad_max_depth() const noexcept { return quad_max_depth_; }
  double log_q() const noexcept { return log_q_; }

  /// q^p for real p.
  double qpow(double p) const;

  QContext with_q(double q) const;
  QContext with_quad_rel_tol(double tol) const;

 private:
  double q_;
  double eps_trunc_;
  int max_terms_;
  double quad_rel_tol_;
  int quad_max_depth_;
  double log_q_;
};

}  // namespace qfrac
