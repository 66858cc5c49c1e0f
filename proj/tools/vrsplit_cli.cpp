// vrsplit: run, validate and compare splitting experiments.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vrsplit/errors.hpp"
#include "vrsplit/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Variance-reduced fast operator splitting benchmarks"};
  app.require_subcommand(1);

  vrsplit::RunCommandOptions run_opts;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Run every (method, seed, instance) of a config");
  run->add_option("--config", run_opts.config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--threads", run_opts.threads, "Worker threads (default: VRSPLIT_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  bool check_only = false;
  run->add_flag("--check", check_only, "Validate the config and exit");

  vrsplit::ValidateOptions val_opts;
  auto* validate = app.add_subcommand("validate", "Run the built-in invariant checks");
  validate->add_option("--seed", val_opts.seed, "Sampling seed");
  validate->add_option("--beta-bar-scale", val_opts.beta_bar_scale)->group("");  // mutation hook

  std::string manifest;
  std::string csv_out;
  auto* compare = app.add_subcommand("compare", "Summarize the traces listed in a manifest");
  compare->add_option("--manifest", manifest, "manifest.json written by run")->required()->check(CLI::ExistingFile);
  compare->add_option("--csv", csv_out, "Summary CSV path (default: summary.csv beside the manifest)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? vrsplit::kExitOk : vrsplit::kExitUsage;
  }

  try {
    if (*run) {
      if (check_only) {
        vrsplit::validate_config_file(run_opts.config_path);
        std::cout << "config ok\n";
        return vrsplit::kExitOk;
      }
      if (!out_dir.empty()) run_opts.out_dir = out_dir;
      return vrsplit::cmd_run(run_opts, std::cerr);
    }
    if (*validate) return vrsplit::cmd_validate(val_opts, std::cout);
    if (*compare) {
      return vrsplit::cmd_compare(manifest, csv_out.empty() ? std::nullopt : std::optional<std::string>(csv_out),
                                  std::cout);
    }
  } catch (const vrsplit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return vrsplit::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return vrsplit::kExitCheckFailed;
  }
  return vrsplit::kExitUsage;
}
