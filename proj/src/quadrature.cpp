#include "qfrac/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace qfrac {

namespace {

// QUADPACK qk15 abscissae and weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kRoundoffFloor =
    50.0 * std::numeric_limits<double>::epsilon();

struct Panel {
  double a, b;
  cplx value;
  double err;
  double resabs;
  int depth;
};

Panel gk15(const ThetaFn& f, double a, double b, int depth) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const cplx fc = f(center);
  cplx resg = fc * kWg[3];
  cplx resk = fc * kWgk[7];
  double resabs = std::abs(fc) * kWgk[7];
  std::array<cplx, 7> f1, f2;
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    f1[j] = f(center - dx);
    f2[j] = f(center + dx);
    resk += kWgk[j] * (f1[j] + f2[j]);
    resabs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
    if (j % 2 == 1) resg += kWg[j / 2] * (f1[j] + f2[j]);
  }
  const cplx mean = resk * 0.5;
  double resasc = kWgk[7] * std::abs(fc - mean);
  for (int j = 0; j < 7; ++j) {
    resasc += kWgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
  }
  const double width = std::abs(half);
  resasc *= width;
  resabs *= width;
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  err = std::max(err, kRoundoffFloor * resabs);
  return {a, b, resk * half, err, resabs, depth};
}

}  // namespace

long& quad_eval_counter() {
  thread_local long counter = 0;
  return counter;
}

QuadResult integrate(const ThetaFn& f, double lo, double hi,
                     const QContext& ctx,
                     std::span<const double> breakpoints) {
  std::vector<double> cuts{lo};
  for (double x : breakpoints) {
    if (x > lo && x < hi) cuts.push_back(x);
  }
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<Panel> panels;
  long evals = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] <= 0.0) continue;
    panels.push_back(gk15(f, cuts[i], cuts[i + 1], 0));
    evals += 15;
  }

  constexpr std::size_t kMaxPanels = 5000;
  const double rel_tol = ctx.quad_rel_tol();
  bool converged = false;
  for (;;) {
    cplx value = 0.0;
    double err = 0.0, resabs = 0.0;
    for (const Panel& p : panels) {
      value += p.value;
      err += p.err;
      resabs += p.resabs;
    }
    const double tol =
        rel_tol * std::max({std::abs(value), 1e-2 * resabs, 1e-300});
    // Once every panel sits at its roundoff floor, bisection cannot help.
    const double roundoff = 1.5 * kRoundoffFloor * resabs;
    if (err <= tol || err <= roundoff) {
      converged = true;
      break;
    }
    // Worst panel; ties go to the leftmost so the refinement order is fixed.
    auto worst = std::max_element(
        panels.begin(), panels.end(), [](const Panel& x, const Panel& y) {
          return x.err < y.err || (x.err == y.err && x.a > y.a);
        });
    if (worst->depth >= ctx.quad_max_depth() || panels.size() >= kMaxPanels) {
      break;
    }
    const Panel p = *worst;
    const double mid = 0.5 * (p.a + p.b);
    *worst = gk15(f, p.a, mid, p.depth + 1);
    panels.push_back(gk15(f, mid, p.b, p.depth + 1));
    evals += 30;
  }

  std::sort(panels.begin(), panels.end(),
            [](const Panel& x, const Panel& y) { return x.a < y.a; });
  QuadResult out;
  for (const Panel& p : panels) {
    out.value += p.value;
    out.err_est += p.err;
  }
  out.evals = evals;
  quad_eval_counter() += evals;
  out.converged = converged;
  return out;
}

QuadResult integrate_theta(const ThetaFn& f, const QContext& ctx,
                           std::span<const double> breakpoints) {
  return integrate(f, 0.0, kPi, ctx, breakpoints);
}

QuadResult integrate_theta_2d(const ThetaFn2& f, const QContext& ctx) {
  long inner_evals = 0;
  double inner_err = 0.0;
  bool inner_ok = true;
  const ThetaFn outer = [&](double phi) {
    const QuadResult r = integrate_theta(
        [&](double psi) { return f(phi, psi); }, ctx);
    inner_evals += r.evals;
    inner_err = std::max(inner_err, r.err_est);
    inner_ok = inner_ok && r.converged;
    return r.value;
  };
  QuadResult r = integrate_theta(outer, ctx);
  r.err_est += kPi * inner_err;
  r.evals = inner_evals;
  r.converged = r.converged && inner_ok;
  return r;
}

}  // namespace qfrac
