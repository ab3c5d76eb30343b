// Command-line front end: `dualcharge run <config>` executes one experiment
// and writes its artifacts, `dualcharge validate <result> <oracle>` checks
// stored artifacts against the analytic solutions. Exit codes: 0 success,
// 1 runtime failure (including a FAIL verdict), 2 invalid configuration or
// usage, 3 refusal to overwrite existing results.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dualcharge/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"dual charge solver for strictly correlated electrons"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  bool overwrite = false;
  std::uint64_t seed = 0;
  CLI::App* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config_path, "experiment config file")->required();
  CLI::Option* output_opt =
      run->add_option("--output-dir", output_dir, "override the config's output directory");
  run->add_flag("--overwrite", overwrite, "replace results already present in the output directory");
  CLI::Option* seed_opt = run->add_option("--seed", seed, "override the config's seed");

  std::string result_path;
  std::string oracle;
  dualcharge::ValidationOptions opt;
  CLI::App* validate = app.add_subcommand("validate", "check stored results against an oracle");
  validate->add_option("result", result_path, "result directory or summary file")->required();
  validate->add_option("oracle", oracle, "comb1d, droplet2e or droplet_energy")->required();
  validate->add_option("--sup-tol", opt.sup_tol, "sup-deviation tolerance for curve oracles");
  validate->add_option("--l2-tol", opt.l2_tol, "rms-deviation tolerance for curve oracles");
  validate->add_option("--ref", opt.reference, "energy reference; defaults to the built-in table");
  validate->add_option("--band-lo", opt.band_lo, "lower band edge as a fraction of the reference");
  validate->add_option("--band-hi", opt.band_hi, "upper band edge as a fraction of the reference");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) {
      dualcharge::ExperimentConfig cfg = dualcharge::load_experiment_config(config_path);
      if (*seed_opt) cfg.seed = seed;
      if (*output_opt) cfg.output_dir = output_dir;
      const dualcharge::ExperimentResult result = dualcharge::run_experiment(cfg, overwrite);
      std::cout << "wrote " << cfg.output_dir << " (f_sce = " << result.f_sce
                << ", charge mass = " << result.charge_mass << ", iterations = "
                << result.iterations << ", " << result.wall_seconds << " s)\n";
      return 0;
    }
    const dualcharge::ValidationReport report = dualcharge::validate_result(result_path, oracle, opt);
    std::cout << report.text();
    return report.passed ? 0 : 1;
  } catch (const dualcharge::OverwriteRefused& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const dualcharge::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
