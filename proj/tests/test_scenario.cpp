#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "qcurv/report_io.hpp"
#include "qcurv/scenario.hpp"

using namespace qcurv;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// minimal constant-curvature solve at a small grid size
std::string solve_config_text(const std::string& extra_assert = "") {
  return "[scenario]\n"
         "name = solve\n"
         "seed = 1\n"
         "[params]\n"
         "n = 2\n"
         "alpha = 0\n"
         "[grid]\n"
         "m = 256\n"
         "r_min = 1e-5\n"
         "r_max = 1e3\n"
         "[profile]\n"
         "kind = constant\n"
         "c0 = 1\n"
         "[solver]\n"
         "tol = 1e-8\n"
         "max_iter = 800\n"
         "[normalization]\n"
         "mode = origin\n"
         "value = 0.6931471805599453\n"  // log 2
         "[assert]\n"
         "converged = true\n" +
         extra_assert +
         "[output]\n"
         "report = solve_report.json\n";
}

}  // namespace

TEST_CASE("config parsing") {
  const std::string text =
      "# leading comment\n"
      "[scenario]\n"
      "name = solve   ; trailing comment\n"
      "seed = 42\n"
      "\n"
      "[scan]\n"
      "alphas = -0.5, 0, 0.5\n"
      "flag = true\n"
      "[params]\n"
      "alpha = -3e-1\n";
  const ConfigMap cfg = parse_config_text(text);

  CHECK(cfg.get_str("scenario", "name") == "solve");
  CHECK(cfg.get_int("scenario", "seed", 0) == 42);
  CHECK(cfg.get_num("params", "alpha") == doctest::Approx(-0.3).epsilon(1e-15));
  CHECK(cfg.get_bool("scan", "flag", false));
  const auto xs = cfg.get_list("scan", "alphas");
  REQUIRE(xs.size() == 3);
  CHECK(xs[0] == -0.5);
  CHECK(xs[1] == 0.0);
  CHECK(xs[2] == 0.5);

  SUBCASE("defaults and presence checks") {
    CHECK(cfg.has("scenario", "seed"));
    CHECK_FALSE(cfg.has("scenario", "missing"));
    CHECK(cfg.get_num("params", "absent", 7.5) == 7.5);
    CHECK(cfg.get_str("params", "absent", "x") == "x");
    CHECK_THROWS_AS(cfg.get_num("params", "absent"), ConfigError);
    CHECK_THROWS_AS(cfg.get_str("nosec", "k"), ConfigError);
  }
}

TEST_CASE("config parse errors") {
  CHECK_THROWS_AS(parse_config_text("key = 1\n"), ConfigError);  // no section
  CHECK_THROWS_AS(parse_config_text("[a]\nk = 1\nk = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[a\nk = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[a]\nnot-a-pair\n"), ConfigError);
  const ConfigMap bad = parse_config_text("[a]\nx = notanumber\n");
  CHECK_THROWS_AS(bad.get_num("a", "x"), ConfigError);
  CHECK_THROWS_AS(bad.get_bool("a", "x", true), ConfigError);
}

TEST_CASE("config file round trip") {
  const fs::path p = "cfg_roundtrip_test.ini";
  {
    std::ofstream out(p, std::ios::binary);
    out << solve_config_text();
  }
  const ConfigMap cfg = load_config(p.string());
  CHECK(cfg.get_str("scenario", "name") == "solve");
  CHECK(cfg.get_num("grid", "r_min") == 1e-5);
  fs::remove(p);
  CHECK_THROWS_AS(load_config("definitely_missing_file.ini"), ConfigError);
}

TEST_CASE("scenario key allow-lists") {
  ConfigMap good = parse_config_text(solve_config_text());
  CHECK_NOTHROW(validate_config(good, "solve"));

  SUBCASE("unknown key in a known section") {
    ConfigMap cfg = good;
    cfg.set("solver", "typo_key", "1");
    CHECK_THROWS_AS(validate_config(cfg, "solve"), ConfigError);
  }
  SUBCASE("section that the scenario does not use") {
    ConfigMap cfg = good;
    cfg.set("continuation", "p", "0.4");
    CHECK_THROWS_AS(validate_config(cfg, "solve"), ConfigError);
  }
  SUBCASE("window-scan accepts continuation keys") {
    ConfigMap cfg = parse_config_text(
        "[scenario]\nname = window-scan\n[params]\nn = 2\nalpha = -0.3\n"
        "[scan]\ntargets = 0.8\n[continuation]\np = 0.4\n");
    CHECK_NOTHROW(validate_config(cfg, "window-scan"));
  }
}

TEST_CASE("seventeen-digit formatting round-trips doubles exactly") {
  for (double x : {1.0 / 3.0, 1e-300, 3.14159265358979e17, -0.1, 0.0,
                   6.02214076e23, 1.7976931348623157e308}) {
    const std::string s = fmt_g17(x);
    CHECK(std::strtod(s.c_str(), nullptr) == x);
  }
}

TEST_CASE("table writing") {
  const fs::path p = "table_roundtrip_test.csv";
  const double a = 1.0 / 3.0, b = -2.5e-17;
  write_csv(p.string(), {"a", "b"},
            {{fmt_g17(a), fmt_g17(b)}, {fmt_g17(7.0), fmt_g17(0.0)}});
  std::ifstream in(p);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "a,b");
  REQUIRE(std::getline(in, line));
  const auto comma = line.find(',');
  CHECK(std::strtod(line.substr(0, comma).c_str(), nullptr) == a);
  CHECK(std::strtod(line.substr(comma + 1).c_str(), nullptr) == b);
  fs::remove(p);

  CHECK_THROWS_AS(write_csv("bad_width.csv", {"a", "b"}, {{"1"}}),
                  std::runtime_error);
  fs::remove("bad_width.csv");
}

TEST_CASE("solve scenario end to end") {
  const std::string text = solve_config_text(
      "lambda_vol_rel = 12.566370614359172, 0.02\n"
      "poho_rel = 1e-3\n");
  const ConfigMap cfg = parse_config_text(text);
  const fs::path dir = "scenario_out_a";
  const ScenarioOutcome out = run_scenario(cfg, dir.string(), 1, false);
  CHECK(out.exit_code == 0);
  CHECK(out.assertions_failed == 0);

  const auto rep = nlohmann::json::parse(read_file(dir / "solve_report.json"));
  CHECK(rep.at("run").at("converged").get<bool>());
  CHECK(rep.at("run").at("lambda_vol").get<double>() ==
        doctest::Approx(4.0 * 3.14159265358979323846).epsilon(0.02));
  CHECK(rep.at("assertions").is_array());
  CHECK(rep.at("assertions_failed").get<int>() == 0);
  for (const auto& a : rep.at("assertions"))
    CHECK(a.at("passed").get<bool>());

  SUBCASE("rerun is byte-identical") {
    const fs::path dir2 = "scenario_out_b";
    run_scenario(cfg, dir2.string(), 1, false);
    CHECK(read_file(dir / "solve_report.json") ==
          read_file(dir2 / "solve_report.json"));
    fs::remove_all(dir2);
  }
  fs::remove_all(dir);
}

TEST_CASE("failing assertions set the exit code and are all recorded") {
  const std::string text = solve_config_text(
      "lambda_vol_rel = 20, 0.001\n"
      "poho_rel = 1e-18\n");
  const ConfigMap cfg = parse_config_text(text);

  SUBCASE("non-strict records every failure") {
    const fs::path dir = "scenario_out_fail";
    const ScenarioOutcome out = run_scenario(cfg, dir.string(), 1, false);
    CHECK(out.exit_code == 2);
    CHECK(out.assertions_failed == 2);
    const auto rep =
        nlohmann::json::parse(read_file(dir / "solve_report.json"));
    CHECK(rep.at("assertions_failed").get<int>() == 2);
    fs::remove_all(dir);
  }
  SUBCASE("strict stops at the first failure") {
    const fs::path dir = "scenario_out_strict";
    const ScenarioOutcome out = run_scenario(cfg, dir.string(), 1, true);
    CHECK(out.exit_code == 2);
    CHECK(out.assertions_failed == 1);
    fs::remove_all(dir);
  }
}

TEST_CASE("unknown scenario name is a config error") {
  const ConfigMap cfg = parse_config_text("[scenario]\nname = nonsense\n");
  CHECK_THROWS_AS(run_scenario(cfg, "unused_out", 1, false), ConfigError);
}

TEST_CASE("tabulated profile through the config layer") {
  const std::string text =
      "[scenario]\n"
      "name = solve\n"
      "[params]\n"
      "n = 2\n"
      "alpha = 0\n"
      "[grid]\n"
      "m = 256\n"
      "r_min = 1e-5\n"
      "r_max = 1e3\n"
      "[profile]\n"
      "kind = tabulated\n"
      "samples = 0:1, 1:2, 1e9:2\n"
      "[solver]\n"
      "tol = 1e-8\n"
      "max_iter = 1500\n"
      "[normalization]\n"
      "mode = origin\n"
      "value = 0\n"
      "[assert]\n"
      "converged = true\n"
      "[output]\n"
      "report = tab_report.json\n"
      "profile = tab_profile.csv\n";
  const ConfigMap cfg = parse_config_text(text);
  const fs::path dir = "scenario_out_tab";
  const ScenarioOutcome out = run_scenario(cfg, dir.string(), 1, false);
  CHECK(out.exit_code == 0);

  // profile table columns satisfy density = Q r^{n a} e^{n u} (alpha = 0)
  std::ifstream in(dir / "tab_profile.csv");
  REQUIRE(in.good());
  std::string line;
  REQUIRE(std::getline(in, line));  // header
  CHECK(line == "r,u,density,Q");
  int rows = 0;
  while (std::getline(in, line)) {
    double col[4];
    size_t pos = 0;
    for (int c = 0; c < 4; ++c) {
      const size_t next = line.find(',', pos);
      col[c] = std::strtod(line.substr(pos, next - pos).c_str(), nullptr);
      pos = next == std::string::npos ? line.size() : next + 1;
    }
    const double expect = col[3] * std::exp(2.0 * col[1]);
    CHECK(std::abs(col[2] - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
    ++rows;
  }
  CHECK(rows == 256);
  in.close();
  fs::remove_all(dir);
}

TEST_CASE("profile emission rejects mismatched input") {
  const RadialGrid grid = make_grid(64, 1e-2, 1e2, 0.0, 2);
  RadialField f;  // empty
  CHECK_THROWS_AS(emit_profile(f, grid, QProfile::constant(1.0),
                               make_params(2, 0.0), CutoffConfig{}, 0.0,
                               "never_written.csv"),
                  std::invalid_argument);
}
