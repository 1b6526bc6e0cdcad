// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "simforge/em_core.hpp"
#include "simforge/error.hpp"
#include "simforge/optimizer.hpp"

namespace simforge::cli {

using Json = nlohmann::json;

// Schema violation; `field` is the dotted path of the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Task { diagonalize, fit_dft, doa, sum_rate, classify, assign };

std::string_view task_name(Task t);

struct Experiment {
  Task task = Task::fit_dft;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::optional<StackGeometry> geometry;  // absent only for `assign`
  // rows x cols of the port lattices when laid out as grids
  std::optional<std::pair<std::size_t, std::size_t>> source_grid;
  std::optional<std::pair<std::size_t, std::size_t>> observation_grid;
  TrainConfig train;
  std::optional<int> codebook_bits;
  std::size_t sweeps = 4;
  Json params = Json::object();
  Json echo;  // the config as read, for replay
};

// Reads and parses a config file. JSON syntax errors carry line/column.
Json load_config_file(const std::string& path);
Experiment parse_experiment(const Json& config);

// Column-named numeric table written as CSV.
struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct RunResult {
  Json report;
  std::vector<Table> tables;
  std::vector<std::string> log;
  std::vector<GeometryWarning> warnings;
  // Flat key -> value summary used for sweep rows.
  std::map<std::string, double> summary;
  bool diverged = false;
};

// Geometry warnings for every stack the experiment will build.
std::vector<GeometryWarning> experiment_warnings(const Experiment& exp);

RunResult run_experiment(const Experiment& exp);

}  // namespace simforge::cli
