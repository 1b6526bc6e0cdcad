// SPDX-License-Identifier: Apache-2.0
#include "simforge/cli/artifacts.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

namespace simforge::cli {

namespace fs = std::filesystem;

namespace {

std::string format_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line + '\n';
}

int exit_code_for(const RunResult& r) { return r.diverged ? kExitNonFinite : kExitOk; }

struct Prepared {
  Experiment exp;
  fs::path out_dir;
};

// Shared by run and sweep: parse, warn, escalate under --strict.
std::optional<int> prepare(const Json& config, bool strict, const std::optional<std::string>& out_override,
                           Prepared& prep, std::ostream& err) {
  prep.exp = parse_experiment(config);
  prep.out_dir = out_override ? fs::path(*out_override) : fs::path(prep.exp.output_dir);
  const auto warnings = experiment_warnings(prep.exp);
  for (const auto& w : warnings) err << "warning: " << w.message << '\n';
  if (strict && !warnings.empty()) {
    err << "error: " << warnings.size() << " geometry warning(s) under --strict\n";
    return kExitStrictWarning;
  }
  return std::nullopt;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NonFiniteLoss& e) {
    err << "non-finite loss: " << e.what() << '\n';
    return kExitNonFinite;
  } catch (const Error& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

std::vector<std::string> split_path(const std::string& axis) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = axis.find('.', start);
    parts.push_back(axis.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return parts;
}

Json parse_number(const std::string& axis, const std::string& text) {
  Json v;
  try {
    v = Json::parse(text);
  } catch (const Json::parse_error&) {
    throw ConfigError(axis, "sweep value '" + text + "' is not a number");
  }
  if (!v.is_number()) throw ConfigError(axis, "sweep value '" + text + "' is not a number");
  return v;
}

}  // namespace

std::string format_table(const Table& t) {
  std::string s = csv_line(t.header);
  std::vector<std::string> cells;
  for (const auto& row : t.rows) {
    cells.clear();
    for (double v : row) cells.push_back(format_cell(v));
    s += csv_line(cells);
  }
  return s;
}

void write_table(const fs::path& dir, const Table& t) {
  write_text(dir / (t.name + ".csv"), format_table(t));
}

void write_artifacts(const fs::path& dir, const RunResult& r) {
  fs::create_directories(dir);
  for (const auto& t : r.tables) write_table(dir, t);
  write_text(dir / "report.json", r.report.dump(2) + '\n');
  std::string log;
  for (const auto& line : r.log) log += line + '\n';
  write_text(dir / "run.log", log);
}

int run_command(const std::string& config_path, const RunOptions& opts, std::ostream& out,
                std::ostream& err) {
  return guarded(err, [&] {
    Prepared prep;
    if (auto code = prepare(load_config_file(config_path), opts.strict, opts.out_dir, prep, err)) {
      return *code;
    }
    const RunResult r = run_experiment(prep.exp);
    write_artifacts(prep.out_dir, r);
    out << task_name(prep.exp.task) << ": wrote " << r.tables.size() << " tables to "
        << prep.out_dir.string() << '\n';
    if (r.diverged) err << "training diverged (non-finite loss)\n";
    return exit_code_for(r);
  });
}

Json apply_axis(const Json& config, const std::string& axis, const std::string& value) {
  Json c = config;
  const Json v = parse_number(axis, value);
  if (axis == "layers" || axis == "geometry.layers") {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
      throw ConfigError(axis, "layer count must be a positive integer");
    }
    const auto n = v.get<std::size_t>();
    if (!c.contains("geometry") || !c["geometry"].contains("layers") ||
        !c["geometry"]["layers"].is_array() || c["geometry"]["layers"].empty()) {
      throw ConfigError("geometry.layers", "sweeping layers needs at least one layer to replicate");
    }
    Json& g = c["geometry"];
    const Json first = g["layers"][0];
    g["layers"] = Json::array();
    for (std::size_t i = 0; i < n; ++i) g["layers"].push_back(first);
    if (g.contains("gaps_in_wavelengths") && g["gaps_in_wavelengths"].is_array()) {
      const Json old = g["gaps_in_wavelengths"];
      if (old.size() < 2) throw ConfigError("geometry.gaps_in_wavelengths", "too few entries to resize");
      const Json inner = old.size() > 2 ? old[1] : old.back();
      Json gaps = Json::array();
      gaps.push_back(old.front());
      for (std::size_t i = 1; i < n; ++i) gaps.push_back(inner);
      gaps.push_back(old.back());
      g["gaps_in_wavelengths"] = gaps;
    }
    if (c.contains("params") && c["params"].is_object()) c["params"].erase("depths");
    return c;
  }
  const auto parts = split_path(axis);
  Json* node = &c;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ConfigError(axis, "path does not name a config field");
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = Json::object();
  }
  if (!node->is_object() || parts.back().empty()) {
    throw ConfigError(axis, "path does not name a config field");
  }
  (*node)[parts.back()] = v;
  return c;
}

int sweep_command(const std::string& config_path, const SweepOptions& opts, std::ostream& out,
                  std::ostream& err) {
  return guarded(err, [&] {
    const Json base = load_config_file(config_path);
    Prepared prep;
    // Validates the base config even when the value list is empty.
    if (auto code = prepare(base, opts.strict, opts.out_dir, prep, err)) return *code;
    const fs::path root = prep.out_dir;

    std::vector<std::map<std::string, double>> summaries;
    int worst = kExitOk;
    for (std::size_t i = 0; i < opts.values.size(); ++i) {
      Prepared run;
      if (auto code = prepare(apply_axis(base, opts.axis, opts.values[i]), opts.strict,
                              root.string(), run, err)) {
        return *code;
      }
      const RunResult r = run_experiment(run.exp);
      write_artifacts(root / ("run" + std::to_string(i)), r);
      summaries.push_back(r.summary);
      worst = std::max(worst, exit_code_for(r));
    }

    // Columns: the union of summary keys in sorted order; missing cells are NaN.
    std::set<std::string> keys;
    for (const auto& s : summaries)
      for (const auto& [k, _] : s) keys.insert(k);
    Table t{"sweep", {"index", opts.axis}, {}};
    t.header.insert(t.header.end(), keys.begin(), keys.end());
    for (std::size_t i = 0; i < summaries.size(); ++i) {
      std::vector<double> row{static_cast<double>(i), parse_number(opts.axis, opts.values[i]).get<double>()};
      for (const auto& k : keys) {
        const auto it = summaries[i].find(k);
        row.push_back(it == summaries[i].end() ? std::nan("") : it->second);
      }
      t.rows.push_back(std::move(row));
    }
    fs::create_directories(root);
    write_table(root, t);
    out << "sweep over " << opts.axis << ": " << summaries.size() << " runs, table at "
        << (root / "sweep.csv").string() << '\n';
    return worst;
  });
}

}  // namespace simforge::cli
