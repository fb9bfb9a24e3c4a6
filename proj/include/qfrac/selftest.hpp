#pragma once
// Invariant checks of the q-series, special-function and quadrature layers,
// run by `qfrac selftest`.

#include <string>
#include <vector>

namespace qfrac {

struct SelfCheck {
  std::string name;
  double value = 0.0;      // observed error
  double tolerance = 0.0;
  bool passed = false;
  std::string notes;
};

std::vector<SelfCheck> run_selftest();

}  // namespace qfrac
