#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qcurv/scenario.hpp"

namespace {

const char* kScenarios[] = {"solve",          "bol-scan",
                            "window-scan",    "lambda-rho-curve",
                            "remark62",       "pohozaev-check",
                            "totalcurv-bound", "cross-validate"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radial curvature-equation scenario runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  int threads = 1;
  bool strict = false;
  for (const char* name : kScenarios) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name +
                                                 " scenario");
    sub->add_option("--config", config_path, "scenario config file")
        ->required();
    sub->add_option("--out", out_dir, "output directory (default .)");
    sub->add_option("--threads", threads, "worker threads (default 1)");
    sub->add_flag("--strict", strict, "stop at the first failed assertion");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string chosen = app.get_subcommands().front()->get_name();

  if (const char* env = std::getenv("QCURV_THREADS")) {
    try {
      threads = std::stoi(env);
    } catch (const std::exception&) {
      std::cerr << "error: QCURV_THREADS='" << env << "' is not an integer\n";
      return 1;
    }
  }
  if (threads < 1) threads = 1;

  try {
    qcurv::ConfigMap cfg = qcurv::load_config(config_path);
    const std::string in_cfg = cfg.get_str("scenario", "name", chosen);
    if (in_cfg != chosen) {
      std::cerr << "error: config names scenario '" << in_cfg
                << "' but subcommand is '" << chosen << "'\n";
      return 1;
    }
    cfg.set("scenario", "name", chosen);
    const qcurv::ScenarioOutcome outcome =
        qcurv::run_scenario(cfg, out_dir, threads, strict);
    if (outcome.assertions_failed > 0)
      std::cerr << outcome.assertions_failed
                << " assertion(s) failed; report at " << outcome.report_path
                << "\n";
    else
      std::cout << "report written to " << outcome.report_path << "\n";
    return outcome.exit_code;
  } catch (const qcurv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
