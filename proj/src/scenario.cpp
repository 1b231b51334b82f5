#include "qcurv/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "qcurv/diagnostics.hpp"
#include "qcurv/report_io.hpp"
#include "qcurv/shooter.hpp"
#include "qcurv/solver.hpp"

namespace qcurv {

namespace {

using njson = nlohmann::ordered_json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------- plumbing

void parallel_for(int njobs, int threads, const std::function<void(int)>& fn) {
  threads = std::clamp(threads, 1, njobs);
  if (threads <= 1) {
    for (int i = 0; i < njobs; ++i) fn(i);
    return;
  }
  std::atomic<int> cursor{0};
  std::mutex emu;
  std::exception_ptr eptr;
  auto worker = [&]() {
    for (int i = cursor.fetch_add(1); i < njobs; i = cursor.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(emu);
        if (!eptr) eptr = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (eptr) std::rethrow_exception(eptr);
}

struct AssertRec {
  std::string check;
  bool passed = false;
  double computed = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

// collects config-requested assertions; in strict mode evaluation stops
// after the first failure
class Asserter {
 public:
  Asserter(std::string scenario, bool strict)
      : scenario_(std::move(scenario)), strict_(strict) {}

  void record(const std::string& check, bool passed, double computed,
              double tolerance, const std::string& detail = "") {
    if (strict_ && failures_ > 0) return;  // already stopping
    recs_.push_back({check, passed, computed, tolerance, detail});
    if (!passed) {
      ++failures_;
      std::cerr << "assertion failed: scenario=" << scenario_
                << " check=" << check << " computed=" << fmt_g17(computed)
                << " tolerance=" << fmt_g17(tolerance)
                << (detail.empty() ? "" : " (" + detail + ")") << "\n";
    }
  }

  int failures() const { return failures_; }

  njson to_json() const {
    njson arr = njson::array();
    for (const auto& r : recs_) {
      njson j;
      j["check"] = r.check;
      j["passed"] = r.passed;
      j["computed"] = r.computed;
      j["tolerance"] = r.tolerance;
      if (!r.detail.empty()) j["detail"] = r.detail;
      arr.push_back(j);
    }
    return arr;
  }

 private:
  std::string scenario_;
  bool strict_;
  int failures_ = 0;
  std::vector<AssertRec> recs_;
};

// two-number config value "target, reltol"
std::pair<double, double> pair_of(const ConfigMap& cfg, const std::string& key) {
  const std::vector<double> v = cfg.get_list("assert", key);
  if (v.size() != 2)
    throw ConfigError("config: [assert] " + key + " wants 'value, tolerance'");
  return {v[0], v[1]};
}

// ------------------------------------------------- config -> domain objects

QProfile profile_from(const ConfigMap& cfg, int n, double alpha) {
  const std::string kind = cfg.get_str("profile", "kind", "constant");
  const double c0 = cfg.get_num("profile", "c0", 1.0);
  if (kind == "constant") return QProfile::constant(c0);
  if (kind == "power_sum")
    return QProfile::power_sum(c0, cfg.get_num("profile", "c1", 0.0),
                               cfg.get_num("profile", "p", 0.0),
                               cfg.get_num("profile", "c2", 0.0));
  if (kind == "inverse_power") return QProfile::inverse_power(n, alpha);
  if (kind == "one_plus_gauss") return QProfile::one_plus_gauss(c0);
  if (kind == "one_plus_exp") return QProfile::one_plus_exp(c0);
  if (kind == "tent") return QProfile::tent();
  if (kind == "spike") return QProfile::spike_family(c0);
  if (kind == "self_scaled") return QProfile::self_scaled(n, alpha);
  if (kind == "tabulated") {
    // samples = r:Q, r:Q, ...
    const std::string raw = cfg.get_str("profile", "samples");
    std::vector<std::pair<double, double>> samples;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const size_t colon = item.find(':');
      if (colon == std::string::npos)
        throw ConfigError("config: [profile] samples entries want r:Q");
      try {
        samples.emplace_back(std::stod(item.substr(0, colon)),
                             std::stod(item.substr(colon + 1)));
      } catch (const std::exception&) {
        throw ConfigError("config: [profile] samples entry '" + item +
                          "' is not numeric");
      }
    }
    try {
      return QProfile::tabulated(std::move(samples));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: [profile] samples: ") + e.what());
    }
  }
  throw ConfigError("config: unknown profile kind '" + kind + "'");
}

RadialGrid grid_from(const ConfigMap& cfg, double alpha, int n) {
  const int m = static_cast<int>(cfg.get_int("grid", "m", 1024));
  const double r_min = cfg.get_num("grid", "r_min", 1e-6);
  const double r_max = cfg.get_num("grid", "r_max", 1e4);
  return make_grid(m, r_min, r_max, alpha, n);
}

SolverOptions solver_from(const ConfigMap& cfg) {
  SolverOptions o;
  o.tol = cfg.get_num("solver", "tol", 1e-9);
  o.max_iter = static_cast<int>(cfg.get_int("solver", "max_iter", 2000));
  o.damping = cfg.get_num("solver", "damping", 0.5);
  o.gaussian_eps = cfg.get_num("solver", "gaussian_eps", 0.0);
  o.cutoffs.eps = cfg.get_num("solver", "cutoff_eps", 0.0);
  o.cutoffs.delta = cfg.get_num("solver", "cutoff_delta", 0.0);
  o.cutoffs.p = cfg.get_num("solver", "cutoff_p", 0.5);
  return o;
}

Normalization norm_from(const ConfigMap& cfg) {
  const std::string mode = cfg.get_str("normalization", "mode", "origin");
  const double value = cfg.get_num("normalization", "value", 0.0);
  if (mode == "constant") return Normalization::fixed_constant(value);
  if (mode == "origin") return Normalization::fixed_origin(value);
  if (mode == "volume") return Normalization::fixed_volume(value);
  throw ConfigError("config: unknown normalization mode '" + mode + "'");
}

njson report_of(const SolveReport& r) {
  njson j;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["residual"] = r.residual;
  j["c"] = r.c;
  j["lambda_vol"] = r.lambda_vol;
  j["lambda_star"] = r.lambda_star;
  j["beta"] = r.beta;
  j["beta_fit"] = r.beta_fit;
  j["pohozaev_lhs"] = r.pohozaev_lhs;
  j["pohozaev_rhs"] = r.pohozaev_rhs;
  j["pohozaev_residual"] = r.pohozaev_residual;
  j["truncation_estimate"] = r.truncation_estimate;
  j["verdict"] = to_string(r.bol_verdict);
  j["tail_flagged"] = r.tail_flagged;
  j["clipped"] = r.clipped;
  j["identity_flagged"] = r.identity_flagged;
  j["stage_failed"] = r.stage_failed;
  j["cause"] = r.cause;
  return j;
}

njson header_json(const ConfigMap& cfg, const std::string& scenario, int n,
                  double alpha) {
  njson rep;
  rep["scenario"] = scenario;
  rep["seed"] = cfg.get_int("scenario", "seed", 0);
  rep["n"] = n;
  rep["alpha"] = alpha;
  return rep;
}

std::string out_path(const std::string& out_dir, const std::string& rel) {
  return (std::filesystem::path(out_dir) / rel).string();
}

void finish_report(njson& rep, Asserter& A, const ConfigMap& cfg,
                   const std::string& out_dir, ScenarioOutcome& outcome) {
  rep["assertions"] = A.to_json();
  rep["assertions_failed"] = A.failures();
  outcome.assertions_failed = A.failures();
  outcome.exit_code = A.failures() > 0 ? 2 : 0;
  outcome.report_path =
      out_path(out_dir, cfg.get_str("output", "report", "report.json"));
  write_json_file(outcome.report_path, rep);
}

// identity-residual allowance grows with the squared volume once it
// exceeds the base level
double poho_allowance(double tol, double lambda_vol, double lambda_1) {
  return tol * std::max(1.0, lambda_vol * lambda_vol / lambda_1);
}

// -------------------------------------------------------------- scenarios

ScenarioOutcome run_solve(const ConfigMap& cfg, const std::string& out_dir,
                          int threads, bool strict) {
  const int n = static_cast<int>(cfg.get_int("params", "n", 2));
  const double alpha = cfg.get_num("params", "alpha", 0.0);
  const ModelParams P = make_params(n, alpha);
  const RadialGrid G = grid_from(cfg, alpha, n);
  const QProfile q = profile_from(cfg, n, alpha);
  const Normalization nm = norm_from(cfg);
  const SolverOptions so = solver_from(cfg);
  const KernelMatrix K = build_kernel(P, G, threads);
  const SolveResult res = solve_normal(q, P, G, nm, so, &K);

  njson rep = header_json(cfg, "solve", n, alpha);
  rep["profile"] = q.describe();
  rep["run"] = report_of(res.report);

  Asserter A("solve", strict);
  if (cfg.has("assert", "converged"))
    A.record("converged", res.report.converged == cfg.get_bool("assert", "converged", true),
             res.report.converged ? 1.0 : 0.0, 1.0, res.report.cause);
  if (cfg.has("assert", "lambda_vol_rel")) {
    const auto [target, tol] = pair_of(cfg, "lambda_vol_rel");
    A.record("lambda_vol_rel",
             res.report.converged &&
                 std::abs(res.report.lambda_vol - target) <= tol * std::abs(target),
             res.report.lambda_vol, tol, "target " + fmt_g17(target));
  }
  if (cfg.has("assert", "lambda_star_rel")) {
    const auto [target, tol] = pair_of(cfg, "lambda_star_rel");
    A.record("lambda_star_rel",
             res.report.converged &&
                 std::abs(res.report.lambda_star - target) <= tol * std::abs(target),
             res.report.lambda_star, tol, "target " + fmt_g17(target));
  }
  if (cfg.has("assert", "verdict"))
    A.record("verdict",
             to_string(res.report.bol_verdict) == cfg.get_str("assert", "verdict"),
             0.0, 0.0, std::string("got ") + to_string(res.report.bol_verdict));
  if (cfg.has("assert", "poho_rel")) {
    const double tol = cfg.get_num("assert", "poho_rel");
    const double cap = poho_allowance(tol, res.report.lambda_vol, P.lambda_1);
    A.record("poho_rel", std::abs(res.report.pohozaev_residual) <= cap,
             res.report.pohozaev_residual, cap);
  }

  if (cfg.has("output", "profile"))
    emit_profile(res.field, G, q, P, so.cutoffs, so.gaussian_eps,
                 out_path(out_dir, cfg.get_str("output", "profile")));

  ScenarioOutcome outcome;
  finish_report(rep, A, cfg, out_dir, outcome);
  return outcome;
}

// shared engine for the alpha x rho FixedOrigin solve grids
struct GridRun {
  double alpha = 0.0, rho = 0.0;
  SolveReport report;
  double pointwise_sup = kNaN;  // sup_{r>=1} r^{n a} e^{n u}, alpha > 0 only
  std::string error;
};

std::vector<GridRun> run_grid(const ConfigMap& cfg, int n, int threads,
                              bool want_pointwise) {
  std::vector<double> alphas =
      cfg.get_list("scan", "alphas", {cfg.get_num("params", "alpha", 0.0)});
  std::vector<double> rhos = cfg.get_list("scan", "rho", {0.0});
  std::sort(alphas.begin(), alphas.end());
  std::sort(rhos.begin(), rhos.end());

  std::vector<GridRun> rows;
  const SolverOptions so = solver_from(cfg);
  for (const double a : alphas) {
    const ModelParams P = make_params(n, a);
    const RadialGrid G = grid_from(cfg, a, n);
    const QProfile q = profile_from(cfg, n, a);
    const KernelMatrix K = build_kernel(P, G, threads);
    const size_t base = rows.size();
    rows.resize(base + rhos.size());
    parallel_for(static_cast<int>(rhos.size()), threads, [&](int i) {
      GridRun row;
      row.alpha = a;
      row.rho = rhos[i];
      try {
        const SolveResult res = solve_normal(
            q, P, G, Normalization::fixed_origin(rhos[i]), so, &K);
        row.report = res.report;
        if (want_pointwise && a > 0.0 && res.report.converged)
          row.pointwise_sup = pointwise_bound_check(res.field, G, P);
      } catch (const std::exception& e) {
        row.error = e.what();
        row.report.converged = false;
        row.report.cause = e.what();
      }
      rows[base + i] = row;
    });
  }
  return rows;
}

njson rows_json(const std::vector<GridRun>& rows) {
  njson arr = njson::array();
  for (const auto& r : rows) {
    njson j;
    j["alpha"] = r.alpha;
    j["rho"] = r.rho;
    j["run"] = report_of(r.report);
    if (std::isfinite(r.pointwise_sup)) j["pointwise_sup"] = r.pointwise_sup;
    if (!r.error.empty()) j["error"] = r.error;
    arr.push_back(j);
  }
  return arr;
}

void maybe_write_grid_table(const ConfigMap& cfg, const std::string& out_dir,
                            const std::vector<GridRun>& rows) {
  if (!cfg.has("output", "table")) return;
  std::vector<std::vector<std::string>> body;
  for (const auto& r : rows)
    body.push_back({fmt_g17(r.alpha), fmt_g17(r.rho),
                    r.report.converged ? "1" : "0", fmt_g17(r.report.lambda_vol),
                    fmt_g17(r.report.lambda_star),
                    fmt_g17(r.report.pohozaev_residual),
                    to_string(r.report.bol_verdict)});
  write_csv(out_path(out_dir, cfg.get_str("output", "table")),
            {"alpha", "rho", "converged", "lambda_vol", "lambda_star",
             "pohozaev_residual", "verdict"},
            body);
}

void assert_all_converged(Asserter& A, const std::vector<GridRun>& rows) {
  int bad = 0;
  std::string detail;
  for (const auto& r : rows)
    if (!r.report.converged) {
      ++bad;
      if (detail.empty())
        detail = "first failure at alpha=" + fmt_g17(r.alpha) +
                 " rho=" + fmt_g17(r.rho) + ": " + r.report.cause;
    }
  A.record("converged", bad == 0, static_cast<double>(bad), 0.0, detail);
}

void assert_poho_rel(Asserter& A, const ConfigMap& cfg,
                     const std::vector<GridRun>& rows, double lambda_1) {
  if (!cfg.has("assert", "poho_rel")) return;
  const double tol = cfg.get_num("assert", "poho_rel");
  double worst_ratio = 0.0;
  bool ok = true;
  for (const auto& r : rows) {
    if (!r.report.converged) continue;
    const double cap = poho_allowance(tol, r.report.lambda_vol, lambda_1);
    const double ratio = std::abs(r.report.pohozaev_residual) / cap;
    worst_ratio = std::max(worst_ratio, ratio);
    if (ratio > 1.0) ok = false;
  }
  A.record("poho_rel", ok, worst_ratio, 1.0, "worst residual / allowance");
}

ScenarioOutcome run_bol_scan(const ConfigMap& cfg, const std::string& out_dir,
                             int threads, bool strict) {
  const int n = static_cast<int>(cfg.get_int("params", "n", 2));
  const std::vector<GridRun> rows = run_grid(cfg, n, threads, false);
  const double lambda_1 = make_params(n, 0.0).lambda_1;

  njson rep = header_json(cfg, "bol-scan", n, cfg.get_num("params", "alpha", 0.0));
  rep["profile"] = profile_from(cfg, n, cfg.get_num("params", "alpha", 0.0)).describe();
  rep["rows"] = rows_json(rows);

  Asserter A("bol-scan", strict);
  if (cfg.has("assert", "converged")) assert_all_converged(A, rows);
  if (cfg.has("assert", "upper_cap_rel")) {
    const double tol = cfg.get_num("assert", "upper_cap_rel");
    double worst = -1.0;
    for (const auto& r : rows)
      if (r.report.converged)
        worst = std::max(worst, r.report.lambda_vol / (lambda_1 * (1.0 + r.alpha)) - 1.0);
    A.record("upper_cap_rel", worst <= tol, worst, tol,
             "max excess of lambda_vol over Lambda_1(1+alpha)");
  }
  if (cfg.has("assert", "lower_cap_rel")) {
    const double tol = cfg.get_num("assert", "lower_cap_rel");
    double worst = 1.0;
    for (const auto& r : rows)
      if (r.report.converged)
        worst = std::min(worst, r.report.lambda_vol / (lambda_1 * (1.0 + r.alpha)) - 1.0);
    A.record("lower_cap_rel", worst >= -tol, worst, tol,
             "min shortfall of lambda_vol under Lambda_1(1+alpha)");
  }
  if (cfg.has("assert", "strict_gap_rel")) {
    const double gap = cfg.get_num("assert", "strict_gap_rel");
    double smallest = std::numeric_limits<double>::infinity();
    for (const auto& r : rows)
      if (r.report.converged)
        smallest = std::min(
            smallest, 1.0 - r.report.lambda_vol / (lambda_1 * (1.0 + r.alpha)));
    A.record("strict_gap_rel", smallest >= gap, smallest, gap,
             "smallest strict gap below Lambda_1(1+alpha)");
  }
  if (cfg.has("assert", "verdict")) {
    const std::string want = cfg.get_str("assert", "verdict");
    bool ok = true;
    std::string got;
    for (const auto& r : rows)
      if (r.report.converged && to_string(r.report.bol_verdict) != want) {
        ok = false;
        got = to_string(r.report.bol_verdict);
      }
    A.record("verdict", ok, 0.0, 0.0,
             ok ? "all rows " + want : "found " + got);
  }
  assert_poho_rel(A, cfg, rows, lambda_1);

  maybe_write_grid_table(cfg, out_dir, rows);
  ScenarioOutcome outcome;
  finish_report(rep, A, cfg, out_dir, outcome);
  return outcome;
}

ScenarioOutcome run_window_scan(const ConfigMap& cfg, const std::string& out_dir,
                                int threads, bool strict) {
  const int n = static_cast<int>(cfg.get_int("params", "n", 2));
  const double alpha = cfg.get_num("params", "alpha");
  const double p = cfg.get_num("continuation", "p", 0.5);
  const ModelParams P = make_params(n, alpha);
  const RadialGrid G = grid_from(cfg, alpha, n);
  const SolverOptions so = solver_from(cfg);
  ContinuationSchedule sch;
  sch.eps_seq = cfg.get_list("continuation", "eps", sch.eps_seq);
  sch.delta_seq = cfg.get_list("continuation", "delta", sch.delta_seq);

  std::vector<double> targets = cfg.get_list("scan", "targets");
  std::sort(targets.begin(), targets.end());
  struct Row {
    double fraction = 0.0;
    SolveReport report;
    bool feasible = false;
    std::string error;
  };
  std::vector<Row> rows(targets.size());
  parallel_for(static_cast<int>(targets.size()), threads, [&](int i) {
    Row row;
    row.fraction = targets[i];
    try {
      const SolveResult res = continuation_solve(targets[i] * P.lambda_1, alpha,
                                                 p, P, G, sch, so);
      row.report = res.report;
      row.feasible = res.report.converged && !res.report.identity_flagged;
    } catch (const std::exception& e) {
      row.error = e.what();
      row.report.converged = false;
      row.report.cause = e.what();
    }
    rows[i] = row;
  });

  njson rep = header_json(cfg, "window-scan", n, alpha);
  rep["p"] = p;
  rep["lambda_1"] = P.lambda_1;
  njson arr = njson::array();
  for (const auto& r : rows) {
    njson j;
    j["target_fraction"] = r.fraction;
    j["lambda_star_target"] = r.fraction * P.lambda_1;
    j["feasible"] = r.feasible;
    j["run"] = report_of(r.report);
    if (!r.error.empty()) j["error"] = r.error;
    arr.push_back(j);
  }
  rep["rows"] = arr;

  auto find_row = [&](double f) -> const Row* {
    for (const auto& r : rows)
      if (std::abs(r.fraction - f) < 1e-12) return &r;
    return nullptr;
  };
  Asserter A("window-scan", strict);
  if (cfg.has("assert", "expect_feasible")) {
    for (const double f : cfg.get_list("assert", "expect_feasible")) {
      const Row* r = find_row(f);
      A.record("expect_feasible", r != nullptr && r->feasible, f, 0.0,
               r == nullptr ? "target not in scan"
                            : (r->feasible ? "" : "flagged: " + r->report.cause));
    }
  }
  if (cfg.has("assert", "expect_infeasible")) {
    for (const double f : cfg.get_list("assert", "expect_infeasible")) {
      const Row* r = find_row(f);
      A.record("expect_infeasible", r != nullptr && !r->feasible, f, 0.0,
               r == nullptr ? "target not in scan" : "");
    }
  }
  if (cfg.has("assert", "poho_singular_max")) {
    const double tol = cfg.get_num("assert", "poho_singular_max");
    double worst = 0.0;
    for (const auto& r : rows)
      if (r.feasible)
        worst = std::max(worst, std::abs(r.report.pohozaev_residual));
    A.record("poho_singular_max", worst <= tol * P.lambda_1, worst,
             tol * P.lambda_1, "max singular-identity residual over feasible rows");
  }

  if (cfg.has("output", "table")) {
    std::vector<std::vector<std::string>> body;
    for (const auto& r : rows)
      body.push_back({fmt_g17(r.fraction), fmt_g17(r.fraction * P.lambda_1),
                      r.report.converged ? "1" : "0", r.feasible ? "1" : "0",
                      fmt_g17(r.report.lambda_star),
                      fmt_g17(r.report.pohozaev_residual),
                      std::to_string(r.report.stage_failed)});
    write_csv(out_path(out_dir, cfg.get_str("output", "table")),
              {"target_fraction", "lambda_star_target", "converged", "feasible",
               "lambda_star_measured", "poho_singular_residual", "stage_failed"},
              body);
  }

  ScenarioOutcome outcome;
  finish_report(rep, A, cfg, out_dir, outcome);
  return outcome;
}

ScenarioOutcome run_lambda_rho(const ConfigMap& cfg, const std::string& out_dir,
                               int threads, bool strict) {
  const int n = static_cast<int>(cfg.get_int("params", "n", 2));
  const double alpha = cfg.get_num("params", "alpha");
  const std::vector<GridRun> rows = run_grid(cfg, n, threads, false);
  const ModelParams P = make_params(n, alpha);
  const double bound = P.lambda_1 * (1.0 + alpha);

  njson rep = header_json(cfg, "lambda-rho-curve", n, alpha);
  rep["profile"] = profile_from(cfg, n, alpha).describe();
  rep["volume_bound"] = bound;
  rep["rows"] = rows_json(rows);

  Asserter A("lambda-rho-curve", strict);
  if (cfg.has("assert", "converged")) assert_all_converged(A, rows);
  if (cfg.has("assert", "endpoints_rel")) {
    // the curvature total tends to the quantized value at both extremes of
    // rho; the plain volume does not (it splits off the 1/Q(0) factor under
    // concentration), so the endpoint check reads lambda_star
    const double tol = cfg.get_num("assert", "endpoints_rel");
    double worst = 0.0;
    bool ok = !rows.empty();
    for (const GridRun* r : {&rows.front(), &rows.back()}) {
      const double dev = std::abs(r->report.lambda_star - bound) / bound;
      worst = std::max(worst, dev);
      ok = ok && r->report.converged && dev <= tol;
    }
    A.record("endpoints_rel", ok, worst, tol,
             "limit curvature deviation at extreme rho");
  }
  if (cfg.has("assert", "upper_cap_rel")) {
    const double tol = cfg.get_num("assert", "upper_cap_rel");
    double worst = -1.0;
    for (const auto& r : rows)
      if (r.report.converged)
        worst = std::max(worst, r.report.lambda_vol / bound - 1.0);
    A.record("upper_cap_rel", worst <= tol, worst, tol,
             "regularized volume cap across rho");
  }

  maybe_write_grid_table(cfg, out_dir, rows);
  ScenarioOutcome outcome;
  finish_report(rep, A, cfg, out_dir, outcome);
  return outcome;
}

ScenarioOutcome run_remark62(const ConfigMap& cfg, const std::string& out_dir,
                             int threads, bool strict) {
  const int case_id = static_cast<int>(cfg.get_int("scan", "case", 1));
  const std::vector<double> ks = cfg.get_list("scan", "k");
  const double r_max = cfg.get_num("scan", "r_max", 100.0);
  const std::vector<ScanRow> rows = remark62_scan(case_id, ks, r_max, threads);

  njson rep = header_json(cfg, "remark62", 2, 0.0);
  rep["case"] = case_id;
  njson arr = njson::array();
  for (const auto& r : rows) {
    njson j;
    j["k"] = r.k;
    j["total_curvature"] = r.total_curvature;
    j["interior_dev"] = r.interior_dev;
    j["ok"] = r.ok;
    if (!r.error.empty()) j["error"] = r.error;
    arr.push_back(j);
  }
  rep["rows"] = arr;

  Asserter A("remark62", strict);
  if (cfg.has("assert", "all_ok")) {
    int bad = 0;
    for (const auto& r : rows)
      if (!r.ok) ++bad;
    A.record("all_ok", bad == 0, static_cast<double>(bad), 0.0);
  }
  if (cfg.has("assert", "monotone_from")) {
    const double from = cfg.get_num("assert", "monotone_from");
    double min_step = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (size_t i = 1; i < rows.size(); ++i) {
      if (rows[i - 1].k < from || !rows[i].ok || !rows[i - 1].ok) continue;
      const double d = rows[i].total_curvature - rows[i - 1].total_curvature;
      min_step = std::min(min_step, d);
      if (!(d > 0.0)) ok = false;
    }
    A.record("monotone_from", ok, min_step, 0.0,
             "smallest increment of total curvature for k >= " + fmt_g17(from));
  }
  if (cfg.has("assert", "growth_ratio_min")) {
    const double want = cfg.get_num("assert", "growth_ratio_min");
    const double first = rows.front().total_curvature;
    const double last = rows.back().total_curvature;
    const double ratio = first > 0.0 ? last / first : kNaN;
    A.record("growth_ratio_min",
             rows.front().ok && rows.back().ok && ratio >= want, ratio, want);
  }
  if (cfg.has("assert", "interior_flat")) {
    const double tol = cfg.get_num("assert", "interior_flat");
    double worst = 0.0;
    for (const auto& r : rows)
      if (r.ok) worst = std::max(worst, r.interior_dev);
    A.record("interior_flat", worst <= tol, worst, tol,
             "max |u - u(0)| on the unit ball");
  }
  if (cfg.has("assert", "max_curv_below")) {
    const double cap = cfg.get_num("assert", "max_curv_below");
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& r : rows)
      worst = std::max(worst, r.total_curvature);
    A.record("max_curv_below", worst < cap, worst, cap);
  }

  if (cfg.has("output", "table")) {
    std::vector<std::vector<std::string>> body;
    for (const auto& r : rows)
      body.push_back({fmt_g17(r.k), fmt_g17(r.total_curvature),
                      r.ok ? "1" : "0", r.error});
    write_csv(out_path(out_dir, cfg.get_str("output", "table")),
              {"k", "total_curvature", "ok", "error"}, body);
  }

  ScenarioOutcome outcome;
  finish_report(rep, A, cfg, out_dir, outcome);
  return outcome;
}

ScenarioOutcome run_pohozaev_check(const ConfigMap& cfg,
                                   const std::string& out_dir, int threads,
                                   bool strict) {
  const int n = static_cast<int>(cfg.get_int("params", "n", 2));
  const std::vector<GridRun> rows = run_grid(cfg, n, threads, false);
  const double lambda_1 = make_params(n, 0.0).lambda_1;

  njson rep = header_json(cfg, "pohozaev-check", n,
                          cfg.get_num("params", "alpha", 0.0));
  rep["profile"] =
      profile_from(cfg, n, cfg.get_num("params", "alpha", 0.0)).describe();
  rep["rows"] = rows_json(rows);

  Asserter A("pohozaev-check", strict);
  if (cfg.has("assert", "converged")) assert_all_converged(A, rows);
  assert_poho_rel(A, cfg, rows, lambda_1);

  if (cfg.has("output", "table")) {
    std::vector<std::vector<std::string>> body;
    for (const auto& r : rows)
      body.push_back({fmt_g17(r.alpha), fmt_g17(r.rho),
                      fmt_g17(r.report.pohozaev_lhs),
                      fmt_g17(r.report.pohozaev_rhs),
                      fmt_g17(r.report.pohozaev_residual),
                      fmt_g17(r.report.truncation_estimate)});
    write_csv(out_path(out_dir, cfg.get_str("output", "table")),
              {"alpha", "rho", "lhs", "rhs", "residual", "truncation_estimate"},
              body);
  }

  ScenarioOutcome outcome;
  finish_report(rep, A, cfg, out_dir, outcome);
  return outcome;
}

ScenarioOutcome run_totalcurv_bound(const ConfigMap& cfg,
                                    const std::string& out_dir, int threads,
                                    bool strict) {
  const int n = static_cast<int>(cfg.get_int("params", "n", 2));
  const std::vector<GridRun> rows = run_grid(cfg, n, threads, true);

  njson rep = header_json(cfg, "totalcurv-bound", n,
                          cfg.get_num("params", "alpha", 0.0));
  rep["profile"] =
      profile_from(cfg, n, cfg.get_num("params", "alpha", 0.0)).describe();
  rep["rows"] = rows_json(rows);

  Asserter A("totalcurv-bound", strict);
  if (cfg.has("assert", "min_converged")) {
    const double want = cfg.get_num("assert", "min_converged");
    int got = 0;
    for (const auto& r : rows)
      if (r.report.converged) ++got;
    A.record("min_converged", got >= want, static_cast<double>(got), want);
  }
  if (cfg.has("assert", "max_below")) {
    const double cap = cfg.get_num("assert", "max_below");
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& r : rows)
      if (r.report.converged && !r.report.tail_flagged)
        worst = std::max(worst, r.report.lambda_star);
    A.record("max_below", std::isfinite(worst) && worst < cap, worst, cap,
             "uniform total-curvature cap over trustworthy rows");
  }
  if (cfg.has("assert", "ratio_below")) {
    const double cap = cfg.get_num("assert", "ratio_below");
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : rows)
      if (std::isfinite(r.pointwise_sup)) {
        lo = std::min(lo, r.pointwise_sup);
        hi = std::max(hi, r.pointwise_sup);
      }
    const double ratio = lo > 0.0 ? hi / lo : kNaN;
    A.record("ratio_below", std::isfinite(ratio) && ratio < cap, ratio, cap,
             "spread of sup r^{n a} e^{n u} across rho");
  }
  if (cfg.has("assert", "sup_below")) {
    // one-sided uniform cap on the weighted density outside the unit ball;
    // unlike ratio_below this stays meaningful for wide rho scans, where
    // member sups shrink toward the extremes
    const double cap = cfg.get_num("assert", "sup_below");
    double hi = 0.0;
    int seen = 0;
    for (const auto& r : rows)
      if (std::isfinite(r.pointwise_sup)) {
        hi = std::max(hi, r.pointwise_sup);
        ++seen;
      }
    A.record("sup_below", seen > 0 && hi <= cap, hi, cap,
             "max over rho of sup r^{n a} e^{n u} outside the unit ball");
  }

  maybe_write_grid_table(cfg, out_dir, rows);
  ScenarioOutcome outcome;
  finish_report(rep, A, cfg, out_dir, outcome);
  return outcome;
}

ScenarioOutcome run_cross_validate(const ConfigMap& cfg,
                                   const std::string& out_dir, int threads,
                                   bool strict) {
  const int n = static_cast<int>(cfg.get_int("params", "n", 2));
  if (n != 2) throw ConfigError("cross-validate: the shooter is 2-D only");
  std::vector<double> alphas =
      cfg.get_list("scan", "alphas", {cfg.get_num("params", "alpha", 0.0)});
  std::sort(alphas.begin(), alphas.end());
  const double shoot_tol = cfg.get_num("scan", "shoot_tol", 1e-10);

  struct Row {
    double alpha = 0.0, rho = 0.0;
    double sup_aligned = kNaN, deviation = kNaN;
    bool converged = false;
    std::string error;
  };
  std::vector<Row> rows(alphas.size());
  parallel_for(static_cast<int>(alphas.size()), threads, [&](int i) {
    Row row;
    row.alpha = alphas[i];
    try {
      const double rho = cfg.has("scan", "rho")
                             ? cfg.get_num("scan", "rho")
                             : std::log(2.0 * (1.0 + alphas[i]));
      row.rho = rho;
      const ModelParams P = make_params(n, alphas[i]);
      const RadialGrid G = grid_from(cfg, alphas[i], n);
      const QProfile q = profile_from(cfg, n, alphas[i]);
      const KernelMatrix K = build_kernel(P, G);
      SolverOptions so;
      const SolveResult res =
          solve_normal(q, P, G, Normalization::fixed_origin(rho), so, &K);
      row.converged = res.report.converged;
      const ShootResult shot = shoot(q, alphas[i], rho, G.r_max, shoot_tol);
      Eigen::ArrayXd diff(G.size());
      for (int j = 0; j < G.size(); ++j)
        diff[j] = shoot_interp_u(shot, G.nodes[j]) - res.field.values[j];
      row.sup_aligned = (diff - diff.mean()).abs().maxCoeff();
      row.deviation = cross_validate(shot, K, shoot_tol);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows[i] = row;
  });

  njson rep = header_json(cfg, "cross-validate", n,
                          cfg.get_num("params", "alpha", 0.0));
  rep["profile"] =
      profile_from(cfg, n, cfg.get_num("params", "alpha", 0.0)).describe();
  njson arr = njson::array();
  for (const auto& r : rows) {
    njson j;
    j["alpha"] = r.alpha;
    j["rho"] = r.rho;
    j["converged"] = r.converged;
    j["sup_aligned"] = r.sup_aligned;
    j["deviation"] = r.deviation;
    if (!r.error.empty()) j["error"] = r.error;
    arr.push_back(j);
  }
  rep["rows"] = arr;

  Asserter A("cross-validate", strict);
  if (cfg.has("assert", "align_sup_max")) {
    const double tol = cfg.get_num("assert", "align_sup_max");
    double worst = 0.0;
    bool ok = true;
    for (const auto& r : rows) {
      if (!r.converged || !std::isfinite(r.sup_aligned)) ok = false;
      worst = std::max(worst, r.sup_aligned);
    }
    A.record("align_sup_max", ok && worst <= tol, worst, tol,
             "sup |u_shoot - u_normal| after constant alignment");
  }
  if (cfg.has("assert", "deviation_max")) {
    const double tol = cfg.get_num("assert", "deviation_max");
    double worst = 0.0;
    bool ok = true;
    for (const auto& r : rows) {
      if (!std::isfinite(r.deviation)) ok = false;
      worst = std::max(worst, r.deviation);
    }
    A.record("deviation_max", ok && worst <= tol, worst, tol,
             "normality deviation of the shoot solution");
  }

  ScenarioOutcome outcome;
  finish_report(rep, A, cfg, out_dir, outcome);
  return outcome;
}

}  // namespace

ScenarioOutcome run_scenario(const ConfigMap& cfg, const std::string& out_dir,
                             int threads, bool strict) {
  const std::string name = cfg.get_str("scenario", "name");
  validate_config(cfg, name);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec && !std::filesystem::is_directory(out_dir))
    throw std::runtime_error("cannot create output directory '" + out_dir + "'");

  if (name == "solve") return run_solve(cfg, out_dir, threads, strict);
  if (name == "bol-scan") return run_bol_scan(cfg, out_dir, threads, strict);
  if (name == "window-scan")
    return run_window_scan(cfg, out_dir, threads, strict);
  if (name == "lambda-rho-curve")
    return run_lambda_rho(cfg, out_dir, threads, strict);
  if (name == "remark62") return run_remark62(cfg, out_dir, threads, strict);
  if (name == "pohozaev-check")
    return run_pohozaev_check(cfg, out_dir, threads, strict);
  if (name == "totalcurv-bound")
    return run_totalcurv_bound(cfg, out_dir, threads, strict);
  if (name == "cross-validate")
    return run_cross_validate(cfg, out_dir, threads, strict);
  throw ConfigError("config: unknown scenario '" + name + "'");
}

}  // namespace qcurv
