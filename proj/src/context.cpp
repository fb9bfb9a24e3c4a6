#include "qfrac/context.hpp"

#include <cmath>
#include <sstream>

namespace qfrac {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::DivisionNearZero: return "DivisionNearZero";
    case ErrorCode::SingularLowerParameter: return "SingularLowerParameter";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::PoleOnContour: return "PoleOnContour";
    case ErrorCode::ParamDomain: return "ParamDomain";
    case ErrorCode::AnnulusExhausted: return "AnnulusExhausted";
    case ErrorCode::MaxDepthExceeded: return "MaxDepthExceeded";
    case ErrorCode::CaseInvalid: return "CaseInvalid";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

QContext::QContext(double q, double eps_trunc, int max_terms,
                   double quad_rel_tol, int quad_max_depth)
    : q_(q),
      eps_trunc_(eps_trunc),
      max_terms_(max_terms),
      quad_rel_tol_(quad_rel_tol),
      quad_max_depth_(quad_max_depth) {
  if (!(q > 0.0 && q < 1.0)) {
    std::ostringstream os;
    os << "q = " << q << " outside (0, 1)";
    throw QError(ErrorCode::DomainError, os.str());
  }
  if (!(eps_trunc > 0.0)) {
    throw QError(ErrorCode::DomainError, "eps_trunc must be positive");
  }
  if (max_terms < 16) {
    throw QError(ErrorCode::DomainError, "max_terms must be at least 16");
  }
  if (!(quad_rel_tol > 0.0)) {
    throw QError(ErrorCode::DomainError, "quad_rel_tol must be positive");
  }
  if (quad_max_depth < 1) {
    throw QError(ErrorCode::DomainError, "quad_max_depth must be at least 1");
  }
  log_q_ = std::log(q);
}

double QContext::qpow(double p) const { return std::exp(p * log_q_); }

QContext QContext::with_q(double q) const {
  return QContext(q, eps_trunc_, max_terms_, quad_rel_tol_, quad_max_depth_);
}

QContext QContext::with_quad_rel_tol(double tol) const {
  return QContext(q_, eps_trunc_, max_terms_, tol, quad_max_depth_);
}

}  // namespace qfrac
