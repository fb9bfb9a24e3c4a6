#pragma once
// Registry of operator identities checked as residuals over theta-grids,
// plus the bilinear kernels of the K and T families.

#include <map>
#include <string>
#include <vector>

#include "qfrac/operators.hpp"

namespace qfrac {

/// One identity instance: registry id, parameter values and, for identities
/// with competing conventions, the variant tag. Besides its own parameters
/// every identity accepts ntheta (grid size, default 17) and reverse (nonzero
/// walks the grid backwards).
struct IdentityCase {
  std::string id;
  std::string variant;
  std::map<std::string, double> params;

  double get(const std::string& key) const;
  /// Stable text key "id[variant]{k=v,...}".
  std::string name() const;
};

struct Residual {
  double max_abs = 0.0;
  double max_rel = 0.0;
  int grid_points = 0;
  double lhs_scale = 0.0;
  bool passed = false;
  /// The case was rejected by a precondition; passed is false.
  bool skipped = false;
  std::string notes;
  long evals = 0;
  double seconds = 0.0;
};

struct IdentitySpec {
  std::string id;
  std::string title;
  double tolerance;
  /// Empty for single-convention identities. Otherwise the suite expects
  /// exactly one variant to pass on every case.
  std::vector<std::string> variants;
  /// Every accepted parameter with its default value.
  std::map<std::string, double> defaults;
};

const std::vector<IdentitySpec>& identity_registry();
/// Throws QError(CaseInvalid) for an unknown id.
const IdentitySpec& identity_spec(const std::string& id);

/// Fills defaults and checks keys, variant and operator preconditions.
/// Throws QError (CaseInvalid or ParamDomain) with the reason.
IdentityCase complete_case(const IdentityCase& c, const QContext& base);

/// Runs one identity. Preconditions are checked first and thrown; numerical
/// failures during evaluation are caught and reported as a failed residual.
Residual run_identity(const IdentityCase& c, const QContext& base);

/// n Chebyshev points in theta: (k + 1/2) pi / n.
std::vector<double> theta_grid(int n = 17);

struct IdentityReport {
  IdentityCase c;
  Residual r;
};

/// Default parameter grid: every registry id appears at least once; cases
/// whose preconditions fail are kept and reported as skipped.
std::vector<IdentityCase> default_grid();
/// A small grid touching every id once, for smoke runs.
std::vector<IdentityCase> quick_grid();

/// Runs cases on up to `threads` workers (0: QFRAC_THREADS or hardware
/// concurrency). Output order equals input order.
std::vector<IdentityReport> run_suite(const std::vector<IdentityCase>& cases,
                                      const QContext& base, int threads = 0);

/// Outcome of a suite: failures among single-convention cases and variant
/// groups where the number of passing variants is not exactly one.
struct SuiteSummary {
  int cases = 0;
  int passed = 0;
  int failed = 0;
  int skipped = 0;
  int variant_groups = 0;
  int variant_groups_ok = 0;
  /// Per variant group: "id{params} -> winning variant" or the failure.
  std::vector<std::string> variant_lines;
  bool ok() const;
};
SuiteSummary summarize(const std::vector<IdentityReport>& reports);

// ---- bilinear kernels ------------------------------------------------------

/// Kernel K(cos phi1, cos phi2) built from K_{a,c} with AW parameters
/// (-1/c, -cq, a3, a4). qa_squared multiplies by (q^a;q)_inf^2, the two
/// operator constants the kernel carries when it is assembled from K itself.
cplx bilinear_kernel_6(double phi1, double phi2, const KParams& p, double a3,
                       double a4, bool qa_squared, const QContext& ctx);
/// sum_n A_n (C_n/B_n)^2 p_n(phi1) p_n(phi2). terms receives the count.
cplx bilinear_series_6(double phi1, double phi2, const KParams& p, double a3,
                       double a4, const QContext& ctx, int* terms = nullptr);

/// Kernel k_0(cos phi1, cos phi2) of T(t1,t2,r).
cplx bilinear_kernel_7(double phi1, double phi2, double r, const AWParams& t,
                       const QContext& ctx);
cplx bilinear_series_7(double phi1, double phi2, double r, const AWParams& t,
                       const QContext& ctx, int* terms = nullptr);

/// Spot points used by the kernel identities.
const std::vector<std::pair<double, double>>& kernel_spot_points();

}  // namespace qfrac
