// SPDX-License-Identifier: Apache-2.0
// simforge: run one experiment config, or sweep one numeric field of it.
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "simforge/cli/artifacts.hpp"

namespace {

std::vector<std::string> split_values(const std::string& list) {
  std::vector<std::string> out;
  if (list.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = list.find(',', start);
    out.push_back(list.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stacked metasurface simulator and experiment driver"};
  app.require_subcommand(1);

  std::string config;
  simforge::cli::RunOptions run_opts;
  std::string run_out;
  auto* run = app.add_subcommand("run", "Run the task named in a config file");
  run->add_option("config", config, "Experiment config (JSON)")->required();
  run->add_flag("--strict", run_opts.strict, "Fail on geometry validity warnings");
  run->add_option("--out", run_out, "Output directory (overrides output_dir)");

  simforge::cli::SweepOptions sweep_opts;
  std::string values;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Re-run a config over values of one numeric field");
  sweep->add_option("config", config, "Experiment config (JSON)")->required();
  sweep->add_option("--axis", sweep_opts.axis, "Dotted field path, or 'layers'")->required();
  sweep->add_option("--values", values, "Comma-separated values (may be empty)")->required();
  sweep->add_flag("--strict", sweep_opts.strict, "Fail on geometry validity warnings");
  sweep->add_option("--out", sweep_out, "Output directory (overrides output_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : simforge::cli::kExitConfig;
  }

  if (*run) {
    if (!run_out.empty()) run_opts.out_dir = run_out;
    return simforge::cli::run_command(config, run_opts, std::cout, std::cerr);
  }
  sweep_opts.values = split_values(values);
  if (!sweep_out.empty()) sweep_opts.out_dir = sweep_out;
  return simforge::cli::sweep_command(config, sweep_opts, std::cout, std::cerr);
}
