#include "qfrac/analytic_fn.hpp"

#include <cmath>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace qfrac {

AnalyticFn::AnalyticFn(Eval eval, double annulus_rho, std::string label)
    : eval_(std::make_shared<const Eval>(std::move(eval))),
      rho_(annulus_rho),
      label_(std::move(label)) {
  if (!(annulus_rho >= 0.0 && annulus_rho <= 1.0)) {
    throw QError(ErrorCode::DomainError, "AnalyticFn: annulus_rho outside [0,1]");
  }
}

AnalyticFn AnalyticFn::from_x(std::function<cplx(cplx)> fx, double annulus_rho,
                              std::string label) {
  return AnalyticFn(
      [fx = std::move(fx)](cplx z) { return fx(0.5 * (z + 1.0 / z)); },
      annulus_rho, std::move(label));
}

bool AnalyticFn::contains(cplx z) const {
  const double r = std::abs(z);
  if (r == 0.0 || !std::isfinite(r)) return false;
  // The unit circle is always admissible; elsewhere the annulus is open.
  if (std::abs(r - 1.0) <= 1e-12) return true;
  if (rho_ == 0.0) return true;
  return r > rho_ && r < 1.0 / rho_;
}

cplx AnalyticFn::operator()(cplx z) const {
  if (!contains(z)) {
    std::ostringstream os;
    os << label_ << ": |z| = " << std::abs(z) << " outside annulus rho = "
       << rho_;
    throw QError(ErrorCode::AnnulusExhausted, os.str());
  }
  return (*eval_)(z);
}

cplx AnalyticFn::at_theta(double theta) const {
  return (*this)(std::polar(1.0, theta));
}

struct ValueCache::Impl {
  struct KeyHash {
    std::size_t operator()(const std::pair<long long, long long>& k) const {
      return std::hash<long long>()(k.first) * 1000003u ^
             std::hash<long long>()(k.second);
    }
  };
  mutable std::mutex mutex;
  std::unordered_map<std::pair<long long, long long>, cplx, KeyHash> map;

  static std::pair<long long, long long> key(cplx z) {
    return {std::llround(z.real() * 1e12), std::llround(z.imag() * 1e12)};
  }
};

ValueCache::ValueCache() : impl_(std::make_unique<Impl>()) {}
ValueCache::~ValueCache() = default;

bool ValueCache::lookup(cplx z, cplx& out) const {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  const auto it = impl_->map.find(Impl::key(z));
  if (it == impl_->map.end()) return false;
  out = it->second;
  return true;
}

void ValueCache::store(cplx z, cplx value) {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  impl_->map[Impl::key(z)] = value;
}

AnalyticFn memoized(const AnalyticFn& f) {
  auto cache = std::make_shared<ValueCache>();
  return AnalyticFn(
      [f, cache](cplx z) {
        cplx v;
        if (cache->lookup(z, v)) return v;
        v = f(z);
        cache->store(z, v);
        return v;
      },
      f.annulus_rho(), f.label());
}

}  // namespace qfrac
