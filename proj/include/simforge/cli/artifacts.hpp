// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "simforge/cli/experiment.hpp"

namespace simforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNonFinite = 3;
inline constexpr int kExitStrictWarning = 4;

// %.17g cells, comma separated, one header line.
std::string format_table(const Table& t);
void write_table(const std::filesystem::path& dir, const Table& t);
void write_artifacts(const std::filesystem::path& dir, const RunResult& r);

struct RunOptions {
  bool strict = false;
  std::optional<std::string> out_dir;
};

int run_command(const std::string& config_path, const RunOptions& opts, std::ostream& out,
                std::ostream& err);

struct SweepOptions {
  std::string axis;
  std::vector<std::string> values;
  bool strict = false;
  std::optional<std::string> out_dir;
};

// Replaces the value at a dotted path ("train.step_size"); "layers"
// replicates the first layer n times.
Json apply_axis(const Json& config, const std::string& axis, const std::string& value);

int sweep_command(const std::string& config_path, const SweepOptions& opts, std::ostream& out,
                  std::ostream& err);

}  // namespace simforge::cli
