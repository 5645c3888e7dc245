// mvdwls: command-line front end for the weighted least squares toolkit.

#include <iostream>

#include "CLI11.hpp"
#include "mvdwls/cli.hpp"

namespace {

void add_common(CLI::App* cmd, mvdwls::cli::CliConfig& cfg, std::string& output_dir) {
  cmd->add_option("--seed", cfg.seed, "Seed for every random stream")->capture_default_str();
  cmd->add_option("--output-dir", output_dir, "Output directory (default: timestamped)");
  auto& s = cfg.solver;
  cmd->add_option("--m-min", s.m_min, "Lower end of the exponent interval")->capture_default_str();
  cmd->add_option("--m-max", s.m_max, "Upper end of the exponent interval")->capture_default_str();
  cmd->add_option("--epsilon", s.epsilon, "Fixed-point tolerance on m")->capture_default_str();
  cmd->add_option("--max-outer-iters", s.max_outer_iters, "Fixed-point iteration cap")->capture_default_str();
  cmd->add_option("--population", s.population, "Differential evolution population (0 = 15p)")
      ->capture_default_str();
  cmd->add_option("--generations", s.generations, "Differential evolution generations")->capture_default_str();
  cmd->add_option("--w-floor", s.w_floor, "Smallest admissible x'k for a unit direction")->capture_default_str();
}

void add_input(CLI::App* cmd, mvdwls::cli::CliConfig& cfg, std::string& input) {
  cmd->add_option("--input", input, "CSV file with a header row")->required();
  cmd->add_option("--response", cfg.response_column, "Response column name or 0-based index (default: last)");
  cmd->add_option("--features", cfg.feature_columns, "Feature columns (default: all others)")->delimiter(',');
  cmd->add_flag("--standardize", cfg.standardize, "z-score the response, scale features to unit SD");
  cmd->add_flag("--stepwise", cfg.stepwise, "Backward AIC feature selection before fitting");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mvdwls;
  CLI::App app{"Multivariate-dependent weighted least squares"};
  app.set_config("--config", "", "Key-value config file (INI/TOML); command-line flags take precedence");
  app.require_subcommand(1);

  cli::CliConfig cfg;
  std::string input, output_dir;
  int repeats = 100;
  cli::SimulateOptions sim;
  int scenario = 0;

  auto* fit = app.add_subcommand("fit", "Diagnostics plus M1 and M2 fits on a CSV dataset");
  add_input(fit, cfg, input);
  add_common(fit, cfg, output_dir);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo comparison of M1 and M2 on synthetic scenarios");
  simulate->add_option("--scenario", scenario, "Variance scenario 1, 2 or 3")->check(CLI::Range(1, 3));
  simulate->add_option("--n", sim.n, "Sample size")->capture_default_str();
  simulate->add_option("--replications", sim.replications, "Replications per cell")->capture_default_str();
  simulate->add_flag("--all", sim.all, "Run every scenario at n = 30, 60, 90");
  add_common(simulate, cfg, output_dir);

  auto* crossval = app.add_subcommand("crossval", "Repeated half/half split comparison of M1 and M2");
  add_input(crossval, cfg, input);
  crossval->add_option("--repeats", repeats, "Number of random splits")->capture_default_str();
  add_common(crossval, cfg, output_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kExitUsage;
  }
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  if (scenario != 0) sim.scenario = scenario;

  try {
    if (fit->parsed()) {
      cli::cmd_fit(input, cfg, std::cout);
    } else if (simulate->parsed()) {
      cli::cmd_simulate(sim, cfg, std::cout);
    } else if (crossval->parsed()) {
      cli::cmd_crossval(input, repeats, cfg, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return cli::kExitInternal;
  }
  return cli::kExitOk;
}
