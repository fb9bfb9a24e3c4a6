// qfrac: command-line front end to the identity registry and operators.
//
// Exit status: 0 pass, 1 a check failed, 2 usage or parameter error.

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qfrac/identities.hpp"
#include "qfrac/selftest.hpp"

using namespace qfrac;
using json = nlohmann::ordered_json;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

const char* const kParamNames[] = {
    "q",  "a",  "b",  "c",  "r",  "s",    "n",    "nmax", "t",  "tval",
    "t1", "t2", "t3", "t4", "a2", "a3",   "a4",   "beta", "z",  "zi",
    "ntheta", "reverse"};

struct Output {
  std::string format = "csv";
  std::string path;
  bool timings = false;
  double quad_tol = 1e-11;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 17 significant digits, independent of locale.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void add_output_options(CLI::App* sub, Output& o) {
  sub->add_option("--format", o.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--out", o.path, "write the report here instead of stdout");
  sub->add_flag("--timings", o.timings, "fill the seconds field (not byte-stable)");
  sub->add_option("--quad-tol", o.quad_tol, "relative quadrature tolerance")
      ->check(CLI::Range(1e-15, 1e-2));
}

void add_param_options(CLI::App* sub, std::map<std::string, std::optional<double>>& p) {
  for (const char* name : kParamNames) {
    sub->add_option(std::string("--") + name, p[name],
                    std::string("case parameter ") + name);
  }
}

std::map<std::string, double> given(const std::map<std::string, std::optional<double>>& p) {
  std::map<std::string, double> out;
  for (const auto& [k, v] : p) {
    if (v) out[k] = *v;
  }
  return out;
}

QContext make_ctx(const Output& o, double q = 0.5) {
  return QContext(q, 1e-15, 512, o.quad_tol);
}

void emit(const Output& o, const std::string& text) {
  if (o.path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.path, std::ios::binary);
  if (!f) throw UsageError("cannot open " + o.path);
  f << text;
}

json report_json(const IdentityReport& rep, bool timings) {
  json j;
  j["case"] = rep.c.name();
  j["id"] = rep.c.id;
  j["variant"] = rep.c.variant.empty() ? json(nullptr) : json(rep.c.variant);
  json params = json::object();
  for (const auto& [k, v] : rep.c.params) params[k] = v;
  j["params"] = params;
  j["max_abs"] = rep.r.max_abs;
  j["max_rel"] = rep.r.max_rel;
  j["passed"] = rep.r.passed;
  j["evals"] = rep.r.evals;
  j["seconds"] = timings ? json(rep.r.seconds) : json(nullptr);
  j["skipped"] = rep.r.skipped;
  j["notes"] = rep.r.notes;
  return j;
}

const char* kReportHeader =
    "case,id,variant,max_abs,max_rel,grid_points,passed,skipped,evals,seconds,notes\n";

std::string report_csv_row(const IdentityReport& rep, bool timings) {
  std::ostringstream os;
  os << csv_field(rep.c.name()) << ',' << rep.c.id << ',' << csv_field(rep.c.variant) << ','
     << num(rep.r.max_abs) << ',' << num(rep.r.max_rel) << ',' << rep.r.grid_points << ','
     << (rep.r.passed ? 1 : 0) << ',' << (rep.r.skipped ? 1 : 0) << ',' << rep.r.evals << ','
     << (timings ? num(rep.r.seconds) : "") << ',' << csv_field(rep.r.notes) << '\n';
  return os.str();
}

std::string render(const std::vector<IdentityReport>& reps, const Output& o) {
  if (o.format == "json") {
    json arr = json::array();
    for (const auto& r : reps) arr.push_back(report_json(r, o.timings));
    return arr.dump(2) + "\n";
  }
  std::string s = kReportHeader;
  for (const auto& r : reps) s += report_csv_row(r, o.timings);
  return s;
}

// One case per variant (or the single case). Precondition failures of single
// variants are kept as skipped reports; if every variant fails its
// preconditions the first reason is raised as a usage error.
std::vector<IdentityReport> run_cases(const std::string& id, const std::string& variant,
                                      const std::map<std::string, double>& params,
                                      const QContext& ctx) {
  const IdentitySpec& spec = identity_spec(id);
  std::vector<std::string> variants;
  if (!variant.empty() || spec.variants.empty()) {
    variants.push_back(variant);
  } else {
    variants = spec.variants;
  }
  std::vector<IdentityReport> out;
  std::string first_reason;
  for (const std::string& v : variants) {
    IdentityReport rep;
    rep.c = IdentityCase{id, v, params};
    try {
      rep.c = complete_case(rep.c, ctx);
      rep.r = run_identity(rep.c, ctx);
    } catch (const QError& e) {
      if (e.code() == ErrorCode::CaseInvalid) throw UsageError(e.what());
      if (first_reason.empty()) first_reason = e.what();
      rep.r.skipped = true;
      rep.r.notes = std::string("skipped: ") + e.what();
    }
    out.push_back(rep);
  }
  bool any_run = false;
  for (const auto& r : out) any_run = any_run || !r.r.skipped;
  if (!any_run) throw UsageError(first_reason);
  return out;
}

std::string summary_text(const SuiteSummary& s) {
  std::ostringstream os;
  os << "cases " << s.cases << ", passed " << s.passed << ", failed " << s.failed
     << ", skipped " << s.skipped << "; variant groups " << s.variant_groups_ok << "/"
     << s.variant_groups << " with exactly one passing variant\n";
  for (const auto& line : s.variant_lines) os << "  " << line << "\n";
  return os.str();
}

// ---- commands -----------------------------------------------------------------

int cmd_verify(const std::string& id, const std::string& variant,
               const std::map<std::string, double>& params, const Output& o) {
  const auto reps = run_cases(id, variant, params, make_ctx(o));
  emit(o, render(reps, o));
  return summarize(reps).ok() ? kPass : kFail;
}

int cmd_suite(const std::string& grid, const std::vector<std::string>& ids, int threads,
              const Output& o) {
  std::vector<IdentityCase> cases = grid == "quick" ? quick_grid() : default_grid();
  if (!ids.empty()) {
    for (const auto& id : ids) identity_spec(id);
    std::erase_if(cases, [&](const IdentityCase& c) {
      return std::find(ids.begin(), ids.end(), c.id) == ids.end();
    });
  }
  const auto reps = run_suite(cases, make_ctx(o), threads);
  const SuiteSummary s = summarize(reps);
  emit(o, render(reps, o));
  (o.path.empty() ? std::cerr : std::cout) << summary_text(s);
  return s.ok() ? kPass : kFail;
}

std::vector<std::pair<double, double>> kernel_points(int n) {
  std::vector<std::pair<double, double>> pts = kernel_spot_points();
  // Further points on a deterministic low-discrepancy sequence in (0, pi).
  for (int k = static_cast<int>(pts.size()); static_cast<int>(pts.size()) < n; ++k) {
    const double u = std::fmod(0.5 + k * 0.6180339887498949, 1.0);
    const double v = std::fmod(0.5 + k * 0.4142135623730950, 1.0);
    pts.emplace_back(kPi * (0.05 + 0.9 * u), kPi * (0.05 + 0.9 * v));
  }
  pts.resize(n);
  return pts;
}

int cmd_kernel(int section, const std::map<std::string, double>& given_params, int points,
               bool displayed, double tol, const Output& o) {
  if (section != 6 && section != 7) throw UsageError("--section must be 6 or 7");
  const std::string id = section == 6 ? "I16" : "I22";
  IdentityCase c{id, section == 6 ? "qa-squared" : "", given_params};
  c.params.erase("ntheta");
  c.params.erase("reverse");
  c = complete_case(c, make_ctx(o));
  const QContext ctx = make_ctx(o, c.get("q"));
  std::ostringstream os;
  os << "phi1,phi2,kernel,series,residual,terms\n";
  bool ok = true;
  for (const auto& [p1, p2] : kernel_points(points)) {
    cplx k, s;
    int terms = 0;
    if (section == 6) {
      const KParams kp{c.get("a"), c.get("c")};
      const AWParams t{-1.0 / kp.c, -kp.c * ctx.q(), c.get("a3"), c.get("a4")};
      k = bilinear_kernel_6(p1, p2, kp, t.t3.real(), t.t4.real(), !displayed, ctx) /
          aw_weight(p1, t, ctx);
      s = bilinear_series_6(p1, p2, kp, t.t3.real(), t.t4.real(), ctx, &terms);
    } else {
      const AWParams t{c.get("t1"), c.get("t2"), c.get("t3"), c.get("t4")};
      k = bilinear_kernel_7(p1, p2, c.get("r"), t, ctx) / aw_weight(p1, t, ctx);
      s = bilinear_series_7(p1, p2, c.get("r"), t, ctx, &terms);
    }
    const double res = std::abs(k - s) / std::max(std::abs(k), std::abs(s));
    ok = ok && res <= tol;
    os << num(p1) << ',' << num(p2) << ',' << num(k.real()) << ',' << num(s.real()) << ','
       << num(res) << ',' << terms << '\n';
  }
  emit(o, os.str());
  return ok ? kPass : kFail;
}

int cmd_sweep(const std::string& id, const std::string& variant, const std::string& param,
              std::vector<double> values, std::optional<double> from, std::optional<double> to,
              int steps, const std::map<std::string, double>& fixed, const Output& o) {
  if (values.empty()) {
    if (!from || !to || steps < 1) {
      throw UsageError("sweep needs --values or --from/--to/--steps");
    }
    for (int k = 0; k <= steps; ++k) values.push_back(*from + (*to - *from) * k / steps);
  }
  std::vector<IdentityCase> cases;
  const IdentitySpec& spec = identity_spec(id);
  const std::vector<std::string> variants =
      !variant.empty() || spec.variants.empty() ? std::vector<std::string>{variant}
                                                : spec.variants;
  for (double v : values) {
    auto params = fixed;
    params[param] = v;
    for (const auto& var : variants) cases.push_back({id, var, params});
  }
  // Unknown keys and variants are usage errors; operator preconditions
  // become skipped rows.
  for (const auto& c : cases) {
    try {
      complete_case(c, make_ctx(o));
    } catch (const QError& e) {
      if (e.code() == ErrorCode::CaseInvalid) throw UsageError(e.what());
    }
  }
  const auto reps = run_suite(cases, make_ctx(o), 0);
  if (o.format == "json") {
    emit(o, render(reps, o));
  } else {
    std::ostringstream os;
    os << param << ",variant,max_abs,max_rel,passed,skipped,notes\n";
    for (const auto& r : reps) {
      os << num(r.c.params.at(param)) << ',' << csv_field(r.c.variant) << ','
         << num(r.r.max_abs) << ',' << num(r.r.max_rel) << ',' << (r.r.passed ? 1 : 0) << ','
         << (r.r.skipped ? 1 : 0) << ',' << csv_field(r.r.notes) << '\n';
    }
    emit(o, os.str());
  }
  return summarize(reps).ok() ? kPass : kFail;
}

AnalyticFn pick_fn(const std::string& f, const std::map<std::string, double>& p,
                   const std::string& family, const QContext& ctx) {
  const auto get = [&](const char* k, double d) {
    const auto it = p.find(k);
    return it == p.end() ? d : it->second;
  };
  const int n = static_cast<int>(get("n", 2));
  if (f == "cos2") return fn_cos2theta();
  if (f == "exp") return fn_exp();
  if (family == "K") return k_basis(get("c", 1.4), n, ctx);
  return t_basis(get("a", 0.3), get("b", 0.2), n, ctx);
}

int cmd_eval(const std::string& what, const std::string& fname,
             const std::map<std::string, double>& p, std::vector<double> thetas,
             double radius, const Output& o) {
  const auto get = [&](const char* k, double d) {
    const auto it = p.find(k);
    return it == p.end() ? d : it->second;
  };
  const QContext ctx = make_ctx(o, get("q", 0.5));
  if (thetas.empty()) thetas = theta_grid(static_cast<int>(get("ntheta", 17)));
  const int n = static_cast<int>(get("n", 2));
  const AWParams t{get("t1", 0.3), get("t2", 0.2), get("t3", 0.1), get("t4", 0.05)};
  std::function<cplx(cplx)> fn;
  if (what == "hermite") {
    fn = [&](cplx z) { return hermite_cq(n, 0.5 * (z + 1.0 / z), ctx); };
  } else if (what == "aw") {
    fn = [&](cplx z) { return aw_polynomial_z(n, z, t, ctx); };
  } else if (what == "qexp") {
    fn = [&](cplx z) { return q_exponential_z(z, get("tval", 0.2), ctx); };
  } else if (what == "jtp") {
    fn = [&](cplx z) { return jtp_theta_product(z, ctx); };
  } else if (what == "poisson") {
    fn = [&](cplx z) {
      return poisson_kernel(std::arg(z), get("s", 1.0), get("t", 0.4), KernelForm::Product, ctx);
    };
  } else if (what == "K") {
    const KParams kp{get("a", 0.8), get("c", 1.4)};
    validate(kp, ctx);
    const AnalyticFn g = apply_K(kp, pick_fn(fname, p, "K", ctx), ctx);
    fn = [g](cplx z) { return g(z); };
  } else if (what == "T") {
    const TParams tp{get("a", 0.3), get("b", 0.2), get("r", 0.5)};
    validate(tp, ctx);
    const AnalyticFn g = apply_T(tp, pick_fn(fname, p, "T", ctx), ctx);
    fn = [g](cplx z) { return g(z); };
  } else if (what == "Dq") {
    const AnalyticFn g = apply_Dq(pick_fn(fname, p, "K", ctx), ctx);
    fn = [g](cplx z) { return g(z); };
  } else {
    throw UsageError("unknown --what " + what);
  }
  std::ostringstream os;
  os << "theta,re,im\n";
  for (double th : thetas) {
    const cplx v = fn(std::polar(radius, th));
    os << num(th) << ',' << num(v.real()) << ',' << num(v.imag()) << '\n';
  }
  emit(o, os.str());
  return kPass;
}

int cmd_selftest(const Output& o) {
  const auto checks = run_selftest();
  bool ok = true;
  std::ostringstream os;
  if (o.format == "json") {
    json arr = json::array();
    for (const auto& c : checks) {
      arr.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance},
                     {"passed", c.passed}, {"notes", c.notes}});
      ok = ok && c.passed;
    }
    os << arr.dump(2) << "\n";
  } else {
    os << "name,value,tolerance,passed,notes\n";
    for (const auto& c : checks) {
      os << csv_field(c.name) << ',' << num(c.value) << ',' << num(c.tolerance) << ','
         << (c.passed ? 1 : 0) << ',' << csv_field(c.notes) << '\n';
      ok = ok && c.passed;
    }
  }
  emit(o, os.str());
  return ok ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"q-fractional operators: identity residuals, kernels and sweeps"};
  app.require_subcommand(1);

  Output o;
  std::map<std::string, std::optional<double>> params;

  std::string id, variant;
  auto* verify = app.add_subcommand("verify", "check one identity; exit 0 iff it passes");
  verify->add_option("--id", id, "registry id (I0a..I23)")->required();
  verify->add_option("--variant", variant, "convention variant; default runs all of them");
  add_param_options(verify, params);
  add_output_options(verify, o);
  verify->footer(
      "CSV columns: case,id,variant,max_abs,max_rel,grid_points,passed,skipped,evals,"
      "seconds,notes\nWith no --variant every variant runs and the exit status is 0 iff "
      "exactly one passes.");

  std::string grid = "default";
  std::vector<std::string> ids;
  int threads = 0;
  auto* suite = app.add_subcommand("suite", "run the registry over a parameter grid");
  suite->add_option("--grid", grid, "default or quick")
      ->check(CLI::IsMember({"default", "quick"}));
  suite->add_option("--id", ids, "restrict to these ids");
  suite->add_option("--threads", threads, "workers (default: QFRAC_THREADS or cores)")
      ->check(CLI::NonNegativeNumber);
  add_output_options(suite, o);
  suite->footer("Report columns as for verify; a summary goes to stderr (stdout with --out).");

  int section = 6, points = 3;
  bool displayed = false;
  double kernel_tol = 1e-6;
  auto* kernel = app.add_subcommand("kernel", "tabulate a bilinear kernel against its series");
  kernel->add_option("--section", section, "6 (K family) or 7 (T family)")->required();
  kernel->add_option("--points", points, "number of (phi1, phi2) pairs")
      ->check(CLI::Range(1, 10000));
  kernel->add_flag("--displayed", displayed, "section 6: omit the (q^a;q)_inf^2 factor");
  kernel->add_option("--tol", kernel_tol, "residual threshold for the exit status");
  add_param_options(kernel, params);
  add_output_options(kernel, o);
  kernel->footer(
      "CSV columns: phi1,phi2,kernel,series,residual,terms. kernel is the integral form "
      "divided by w(cos phi1); series is the truncated bilinear sum with its term count.");

  std::string sweep_id, sweep_variant, sweep_param;
  std::vector<double> sweep_values;
  std::optional<double> sweep_from, sweep_to;
  int sweep_steps = 10;
  auto* sweep = app.add_subcommand("sweep", "run one identity along a parameter");
  sweep->add_option("--id", sweep_id, "registry id")->required();
  sweep->add_option("--variant", sweep_variant, "variant; default runs all");
  sweep->add_option("--param", sweep_param, "parameter to vary")->required();
  sweep->add_option("--values", sweep_values, "explicit values");
  sweep->add_option("--from", sweep_from);
  sweep->add_option("--to", sweep_to);
  sweep->add_option("--steps", sweep_steps)->check(CLI::PositiveNumber);
  add_param_options(sweep, params);
  add_output_options(sweep, o);
  sweep->footer("CSV columns: <param>,variant,max_abs,max_rel,passed,skipped,notes");

  std::string what = "hermite", fname = "basis";
  std::vector<double> thetas;
  double radius = 1.0;
  auto* eval = app.add_subcommand("eval", "evaluate a function or operator pointwise");
  eval->add_option("--what", what, "hermite, aw, qexp, jtp, poisson, K, T or Dq")
      ->check(CLI::IsMember({"hermite", "aw", "qexp", "jtp", "poisson", "K", "T", "Dq"}));
  eval->add_option("--f", fname, "operand for K/T/Dq: basis, cos2 or exp")
      ->check(CLI::IsMember({"basis", "cos2", "exp"}));
  eval->add_option("--theta", thetas, "evaluation angles (default: ntheta grid)");
  eval->add_option("--radius", radius, "evaluate at z = radius e^{i theta}");
  add_param_options(eval, params);
  add_output_options(eval, o);
  eval->footer("CSV columns: theta,re,im. For poisson, --s is the second angle phi.");

  auto* selftest = app.add_subcommand("selftest", "invariant checks of the numerical core");
  add_output_options(selftest, o);
  selftest->footer("CSV columns: name,value,tolerance,passed,notes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    const auto p = given(params);
    if (verify->parsed()) return cmd_verify(id, variant, p, o);
    if (suite->parsed()) return cmd_suite(grid, ids, threads, o);
    if (kernel->parsed()) return cmd_kernel(section, p, points, displayed, kernel_tol, o);
    if (sweep->parsed()) {
      return cmd_sweep(sweep_id, sweep_variant, sweep_param, sweep_values, sweep_from,
                       sweep_to, sweep_steps, p, o);
    }
    if (eval->parsed()) return cmd_eval(what, fname, p, thetas, radius, o);
    if (selftest->parsed()) return cmd_selftest(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const QError& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool usage = e.code() == ErrorCode::CaseInvalid || e.code() == ErrorCode::ParamDomain ||
                       e.code() == ErrorCode::DomainError;
    return usage ? kUsage : kFail;
  }
  return kUsage;
}
