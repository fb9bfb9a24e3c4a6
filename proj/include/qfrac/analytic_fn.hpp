#pragma once

#include <functional>
#include <memory>
#include <string>

#include "qfrac/context.hpp"

namespace qfrac {

/// A function of x = (z + 1/z)/2 that can be evaluated at complex z in the
/// open annulus rho < |z| < 1/rho and on the unit circle. rho = 0 marks a
/// function analytic in the punctured plane; rho = 1 restricts evaluation to
/// the unit circle.
class AnalyticFn {
 public:
  using Eval = std::function<cplx(cplx)>;

  AnalyticFn() = default;
  AnalyticFn(Eval eval, double annulus_rho, std::string label);

  /// Wraps a function given in the variable x.
  static AnalyticFn from_x(std::function<cplx(cplx)> fx, double annulus_rho,
                           std::string label);

  /// Throws AnnulusExhausted outside the annulus.
  cplx operator()(cplx z) const;
  cplx at_theta(double theta) const;

  bool contains(cplx z) const;
  double annulus_rho() const noexcept { return rho_; }
  const std::string& label() const noexcept { return label_; }

 private:
  std::shared_ptr<const Eval> eval_;
  double rho_ = 0.0;
  std::string label_;
};

/// Thread-safe memo keyed on z quantized to a 1e-12 grid. Values are
/// deterministic, so concurrent writers racing on one key are harmless.
class ValueCache {
 public:
  ValueCache();
  ~ValueCache();
  bool lookup(cplx z, cplx& out) const;
  void store(cplx z, cplx value);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Evaluates f through a shared cache.
AnalyticFn memoized(const AnalyticFn& f);

}  // namespace qfrac
