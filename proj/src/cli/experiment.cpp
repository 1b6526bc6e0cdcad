// SPDX-License-Identifier: Apache-2.0
#include "simforge/cli/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "simforge/tasks/assignment.hpp"
#include "simforge/tasks/channels.hpp"
#include "simforge/tasks/dft_doa.hpp"
#include "simforge/tasks/mimo.hpp"
#include "simforge/tasks/routing.hpp"
#include "simforge/tasks/sum_rate_task.hpp"

namespace simforge::cli {

std::string_view task_name(Task t) {
  switch (t) {
    case Task::diagonalize: return "diagonalize";
    case Task::fit_dft: return "fit-dft";
    case Task::doa: return "doa";
    case Task::sum_rate: return "sum-rate";
    case Task::classify: return "classify";
    case Task::assign: return "assign";
  }
  return "?";
}

namespace {

constexpr double kDeg = kPi / 180.0;

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

// Strict view of one JSON object: unknown keys are rejected up front and
// every accessor reports the dotted path of the field it reads.
class Reader {
 public:
  Reader(const Json& j, std::string path, std::initializer_list<const char*> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items()) {
      if (!ok.count(key)) throw ConfigError(join_path(path_, key), "unknown key");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string path(const std::string& key) const { return join_path(path_, key); }

  const Json& raw(const std::string& key) const {
    if (!has(key)) throw ConfigError(path(key), "required field is missing");
    return j_.at(key);
  }

  double number(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path(key), "must be finite");
    return d;
  }
  double number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }
  double positive(const std::string& key) const {
    const double d = number(key);
    if (!(d > 0.0)) throw ConfigError(path(key), "must be positive");
    return d;
  }
  double positive(const std::string& key, double fallback) const {
    return has(key) ? positive(key) : fallback;
  }

  std::uint64_t count(const std::string& key) const { return as_count(raw(key), path(key)); }
  std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? count(key) : fallback;
  }

  std::string text(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_string()) throw ConfigError(path(key), "expected a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string choice(const std::string& key, const std::string& fallback,
                     std::initializer_list<const char*> options) const {
    const std::string v = text(key, fallback);
    for (const char* o : options) {
      if (v == o) return v;
    }
    std::string msg = "expected one of";
    for (const char* o : options) msg += std::string(" \"") + o + "\"";
    throw ConfigError(path(key), msg);
  }

  static std::uint64_t as_count(const Json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) throw ConfigError(where, "must be non-negative");
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    throw ConfigError(where, "expected a non-negative integer");
  }

 private:
  const Json& j_;
  std::string path_;
};

struct PortSpec {
  std::vector<Vec3> points_wl;
  std::optional<std::pair<std::size_t, std::size_t>> grid;
};

PortSpec parse_ports(const Json& j, const std::string& path, double default_pitch) {
  Reader r(j, path, {"layout", "rows", "cols", "count", "pitch_in_wavelengths", "points"});
  const std::string layout = r.choice("layout", "grid", {"grid", "line", "points"});
  PortSpec out;
  if (layout == "grid") {
    const auto rows = r.count("rows");
    const auto cols = r.count("cols");
    if (rows == 0 || cols == 0) throw ConfigError(path, "grid needs rows and cols >= 1");
    out.points_wl = grid_points(rows, cols, r.positive("pitch_in_wavelengths", default_pitch), 0.0);
    out.grid = std::pair{static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)};
  } else if (layout == "line") {
    const auto n = r.count("count");
    if (n == 0) throw ConfigError(r.path("count"), "must be >= 1");
    out.points_wl = line_points(n, r.positive("pitch_in_wavelengths", default_pitch), 0.0);
  } else {
    const Json& pts = r.raw("points");
    if (!pts.is_array() || pts.empty()) throw ConfigError(r.path("points"), "expected [[x,y,z],...]");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::string where = r.path("points") + "[" + std::to_string(i) + "]";
      if (!pts[i].is_array() || pts[i].size() != 3) throw ConfigError(where, "expected [x, y, z]");
      Vec3 p{};
      for (std::size_t k = 0; k < 3; ++k) {
        if (!pts[i][k].is_number()) throw ConfigError(where, "coordinates must be numbers");
        p[k] = pts[i][k].get<double>();
      }
      out.points_wl.push_back(p);
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_layers(const Json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty list of [rows, cols]");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string where = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || v[i].size() != 2) throw ConfigError(where, "expected [rows, cols]");
    const auto rows = Reader::as_count(v[i][0], where);
    const auto cols = Reader::as_count(v[i][1], where);
    if (rows == 0 || cols == 0) throw ConfigError(where, "rows and cols must be >= 1");
    out.emplace_back(rows, cols);
  }
  return out;
}

void parse_geometry(const Json& j, Experiment& exp) {
  Reader r(j, "geometry", {"frequency_hz", "layers", "pitch_in_wavelengths", "gaps_in_wavelengths",
                           "atom_area_in_wavelengths2", "sources", "observations"});
  StackGeometry g;
  try {
    g.wavelength = Wavelength::from_frequency(r.positive("frequency_hz"));
  } catch (const InvalidParameter& e) {
    throw ConfigError(r.path("frequency_hz"), e.what());
  }
  const double lambda = g.wavelength.lambda_m();
  const double pitch_wl = r.positive("pitch_in_wavelengths");
  const double area_wl2 = r.positive("atom_area_in_wavelengths2", pitch_wl * pitch_wl);
  for (auto [rows, cols] : parse_layers(r.raw("layers"), r.path("layers"))) {
    g.layers.push_back(GridLayout{rows, cols, pitch_wl * lambda, area_wl2 * lambda * lambda});
  }
  const Json& gaps = r.raw("gaps_in_wavelengths");
  const std::size_t n_gaps = g.layers.size() + 1;
  if (gaps.is_number()) {
    const double gap = r.positive("gaps_in_wavelengths");
    g.gaps_m.assign(n_gaps, gap * lambda);
  } else if (gaps.is_array()) {
    if (gaps.size() != n_gaps) {
      throw ConfigError(r.path("gaps_in_wavelengths"),
                        "expected " + std::to_string(n_gaps) + " entries (one more than layers)");
    }
    for (const auto& v : gaps) {
      if (!v.is_number() || !(v.get<double>() > 0.0)) {
        throw ConfigError(r.path("gaps_in_wavelengths"), "entries must be positive numbers");
      }
      g.gaps_m.push_back(v.get<double>() * lambda);
    }
  } else {
    throw ConfigError(r.path("gaps_in_wavelengths"), "expected a number or a list");
  }

  const PortSpec src = parse_ports(r.raw("sources"), r.path("sources"), pitch_wl);
  const PortSpec obs = r.has("observations")
                           ? parse_ports(r.raw("observations"), r.path("observations"), pitch_wl)
                           : src;
  for (const auto& p : src.points_wl) g.source_points.push_back({p[0] * lambda, p[1] * lambda, p[2] * lambda});
  const double zo = g.observation_z();
  for (const auto& p : obs.points_wl) {
    g.observation_points.push_back({p[0] * lambda, p[1] * lambda, zo + p[2] * lambda});
  }
  try {
    g.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError("geometry", e.what());
  }
  exp.source_grid = src.grid;
  exp.observation_grid = obs.grid;
  exp.geometry = std::move(g);
}

void parse_train(const Json& j, Experiment& exp) {
  Reader r(j, "train", {"max_iters", "step_size", "step_decay", "tolerance", "gradient_mode",
                        "fd_epsilon", "codebook_bits", "sweeps"});
  TrainConfig& t = exp.train;
  t.max_iters = r.count("max_iters", t.max_iters);
  t.step_size = r.number("step_size", t.step_size);
  t.step_decay = r.number("step_decay", t.step_decay);
  t.tolerance = r.number("tolerance", t.tolerance);
  t.fd_epsilon = r.number("fd_epsilon", t.fd_epsilon);
  t.gradient_mode = r.choice("gradient_mode", "analytic", {"analytic", "finite_difference"}) == "analytic"
                        ? GradientMode::analytic
                        : GradientMode::finite_difference;
  if (r.has("codebook_bits")) {
    const auto b = r.count("codebook_bits");
    if (b < 1 || b > 16) throw ConfigError(r.path("codebook_bits"), "must be in [1, 16]");
    exp.codebook_bits = static_cast<int>(b);
  }
  exp.sweeps = r.count("sweeps", exp.sweeps);
  if (exp.sweeps == 0) throw ConfigError(r.path("sweeps"), "must be >= 1");
  try {
    t.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError("train", e.what());
  }
}

// ---- task parameters -------------------------------------------------------

struct DiagonalizeParams {
  std::optional<std::vector<std::pair<std::size_t, std::size_t>>> rx_layers;
  double link_distance_wl = 10.0;
  std::string channel = "los";
  double variance = 1.0;
  bool normalized = false;
};

DiagonalizeParams diagonalize_params(const Json& j) {
  Reader r(j, "params", {"rx_layers", "link_distance_in_wavelengths", "channel", "channel_variance",
                         "normalized_leakage"});
  DiagonalizeParams p;
  if (r.has("rx_layers")) p.rx_layers = parse_layers(r.raw("rx_layers"), r.path("rx_layers"));
  p.link_distance_wl = r.positive("link_distance_in_wavelengths", p.link_distance_wl);
  p.channel = r.choice("channel", p.channel, {"los", "rayleigh"});
  p.variance = r.positive("channel_variance", p.variance);
  p.normalized = r.flag("normalized_leakage", p.normalized);
  return p;
}

struct FitDftParams {
  std::vector<std::size_t> depths;
  double probe_az_deg = 12.0;
  double probe_el_deg = 6.0;
};

FitDftParams fit_dft_params(const Json& j) {
  Reader r(j, "params", {"depths", "probe_azimuth_deg", "probe_elevation_deg"});
  FitDftParams p;
  if (r.has("depths")) {
    const Json& d = r.raw("depths");
    if (!d.is_array() || d.empty()) throw ConfigError(r.path("depths"), "expected a list of layer counts");
    for (const auto& v : d) {
      const auto n = Reader::as_count(v, r.path("depths"));
      if (n == 0) throw ConfigError(r.path("depths"), "layer counts must be >= 1");
      p.depths.push_back(n);
    }
  }
  p.probe_az_deg = r.number("probe_azimuth_deg", p.probe_az_deg);
  p.probe_el_deg = r.number("probe_elevation_deg", p.probe_el_deg);
  return p;
}

struct DoaParams {
  std::string op = "trained";
  std::vector<tasks::PlaneWaveSource> sources;
  std::size_t k = 0;
  std::size_t snapshots = 1;
  std::optional<double> snr_db;
  double reference_mse_db = -40.0;
};

DoaParams doa_params(const Json& j) {
  Reader r(j, "params", {"operator", "sources", "num_sources", "snapshots", "snr_db", "reference_mse_db"});
  DoaParams p;
  p.op = r.choice("operator", p.op, {"trained", "ideal"});
  const Json& src = r.raw("sources");
  if (!src.is_array() || src.empty()) throw ConfigError(r.path("sources"), "expected a non-empty list");
  for (std::size_t i = 0; i < src.size(); ++i) {
    Reader s(src[i], r.path("sources") + "[" + std::to_string(i) + "]",
             {"azimuth_deg", "elevation_deg", "amplitude"});
    p.sources.push_back({s.number("azimuth_deg") * kDeg, s.number("elevation_deg") * kDeg,
                         s.positive("amplitude", 1.0)});
  }
  p.k = r.count("num_sources", p.sources.size());
  if (p.k == 0) throw ConfigError(r.path("num_sources"), "must be >= 1");
  p.snapshots = r.count("snapshots", 1);
  if (p.snapshots == 0) throw ConfigError(r.path("snapshots"), "must be >= 1");
  if (r.has("snr_db")) p.snr_db = r.number("snr_db");
  p.reference_mse_db = r.number("reference_mse_db", p.reference_mse_db);
  return p;
}

struct SumRateParams {
  std::string channel = "rayleigh";
  double variance = 1.0;
  double distance_wl = 20.0;
  double user_pitch_wl = 2.0;
  double noise_power = 1e-3;
  double power_budget = 1.0;
  std::size_t rounds = 3;
};

SumRateParams sum_rate_params(const Json& j) {
  Reader r(j, "params", {"user_channel", "channel_variance", "user_distance_in_wavelengths",
                         "user_pitch_in_wavelengths", "noise_power", "power_budget", "rounds"});
  SumRateParams p;
  p.channel = r.choice("user_channel", p.channel, {"rayleigh", "los"});
  p.variance = r.positive("channel_variance", p.variance);
  p.distance_wl = r.positive("user_distance_in_wavelengths", p.distance_wl);
  p.user_pitch_wl = r.positive("user_pitch_in_wavelengths", p.user_pitch_wl);
  p.noise_power = r.positive("noise_power", p.noise_power);
  p.power_budget = r.positive("power_budget", p.power_budget);
  p.rounds = r.count("rounds", p.rounds);
  if (p.rounds == 0) throw ConfigError(r.path("rounds"), "must be >= 1");
  return p;
}

struct ClassifyParams {
  std::size_t per_class_train = 25;
  std::size_t per_class_test = 50;
  double temperature = 10.0;
  double min_sine = 0.15;
  double max_sine = 0.55;
};

ClassifyParams classify_params(const Json& j) {
  Reader r(j, "params", {"per_class_train", "per_class_test", "temperature", "min_sine", "max_sine"});
  ClassifyParams p;
  p.per_class_train = r.count("per_class_train", p.per_class_train);
  p.per_class_test = r.count("per_class_test", p.per_class_test);
  if (p.per_class_train == 0) throw ConfigError(r.path("per_class_train"), "must be >= 1");
  if (p.per_class_test == 0) throw ConfigError(r.path("per_class_test"), "must be >= 1");
  p.temperature = r.positive("temperature", p.temperature);
  p.min_sine = r.number("min_sine", p.min_sine);
  p.max_sine = r.number("max_sine", p.max_sine);
  return p;
}

struct AssignParams {
  tasks::AssignmentProblem problem;
  std::string method = "both";
};

AssignParams assign_params(const Json& j, std::uint64_t seed) {
  Reader r(j, "params", {"gain", "antennas", "users", "method"});
  AssignParams p;
  p.method = r.choice("method", p.method, {"exhaustive", "greedy", "both"});
  if (r.has("gain")) {
    if (r.has("antennas") || r.has("users")) {
      throw ConfigError(r.path("gain"), "give either gain or antennas/users, not both");
    }
    const Json& g = r.raw("gain");
    if (!g.is_array() || g.empty()) throw ConfigError(r.path("gain"), "expected an M x K list of lists");
    for (std::size_t a = 0; a < g.size(); ++a) {
      const std::string where = r.path("gain") + "[" + std::to_string(a) + "]";
      if (!g[a].is_array() || g[a].size() != g[0].size() || g[a].empty()) {
        throw ConfigError(where, "rows must be non-empty and of equal length");
      }
      std::vector<double> row;
      for (const auto& v : g[a]) {
        if (!v.is_number()) throw ConfigError(where, "gains must be numbers");
        row.push_back(v.get<double>());
      }
      p.problem.gain.push_back(std::move(row));
    }
  } else {
    const auto m = r.count("antennas");
    const auto k = r.count("users");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    p.problem.gain.assign(m, std::vector<double>(k));
    for (auto& row : p.problem.gain)
      for (auto& v : row) v = u(rng);
  }
  try {
    p.problem.validate();
  } catch (const Error& e) {
    throw ConfigError("params", e.what());
  }
  return p;
}

void check_params(const Experiment& exp) {
  switch (exp.task) {
    case Task::diagonalize: diagonalize_params(exp.params); break;
    case Task::fit_dft: fit_dft_params(exp.params); break;
    case Task::doa: doa_params(exp.params); break;
    case Task::sum_rate: sum_rate_params(exp.params); break;
    case Task::classify: classify_params(exp.params); break;
    case Task::assign: assign_params(exp.params, exp.seed); break;
  }
}

// ---- geometry helpers -------------------------------------------------------

// Same stack with `depth` copies of the first layer; the first and last gaps
// are kept and inner gaps reuse gap 1.
StackGeometry with_depth(const StackGeometry& g, std::size_t depth) {
  StackGeometry out = g;
  out.layers.assign(depth, g.layers.front());
  const double inner = g.gaps_m.size() > 2 ? g.gaps_m[1] : g.gaps_m.back();
  out.gaps_m.assign(depth + 1, inner);
  out.gaps_m.front() = g.gaps_m.front();
  out.gaps_m.back() = g.gaps_m.back();
  const double shift = out.observation_z() - g.observation_z();
  for (auto& p : out.observation_points) p[2] += shift;
  return out;
}

StackGeometry rx_geometry(const StackGeometry& tx, const DiagonalizeParams& p) {
  if (!p.rx_layers) return tx;
  StackGeometry rx = tx;
  rx.layers.clear();
  for (auto [rows, cols] : *p.rx_layers) {
    rx.layers.push_back(GridLayout{rows, cols, tx.layers.front().pitch_m,
                                   tx.layers.front().meta_atom_area_m2});
  }
  const double inner = tx.gaps_m.size() > 2 ? tx.gaps_m[1] : tx.gaps_m.back();
  rx.gaps_m.assign(rx.layers.size() + 1, inner);
  rx.gaps_m.front() = tx.gaps_m.front();
  rx.gaps_m.back() = tx.gaps_m.back();
  const double shift = rx.observation_z() - tx.observation_z();
  for (auto& q : rx.observation_points) q[2] += shift;
  return rx;
}

std::vector<std::size_t> dft_depths(const Experiment& exp, const FitDftParams& p) {
  if (!p.depths.empty()) return p.depths;
  return {exp.geometry->layer_count()};
}

// ---- result helpers ---------------------------------------------------------

Table history_table(const std::string& name, const std::vector<double>& h) {
  Table t{name, {"iteration", "loss"}, {}};
  for (std::size_t i = 0; i < h.size(); ++i) t.rows.push_back({static_cast<double>(i), h[i]});
  return t;
}

Table profile_table(const std::string& name, const StackGeometry& g, const PhaseProfile& prof,
                    std::size_t first_layer = 0) {
  Table t{name, {"layer", "atom", "row", "col", "phase_rad"}, {}};
  for (std::size_t l = 0; l < prof.layer_count(); ++l) {
    const auto& lay = g.layers.at(first_layer + l);
    for (std::size_t n = 0; n < prof.phases[l].size(); ++n) {
      t.rows.push_back({static_cast<double>(l), static_cast<double>(n),
                        static_cast<double>(n / lay.cols), static_cast<double>(n % lay.cols),
                        prof.phases[l][n]});
    }
  }
  return t;
}

Table matrix_table(const std::string& name, const CMatrix& m) {
  Table t{name, {"row", "col", "re", "im", "abs"}, {}};
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      t.rows.push_back({static_cast<double>(i), static_cast<double>(j), m(i, j).real(),
                        m(i, j).imag(), std::abs(m(i, j))});
    }
  }
  return t;
}

// Dense |m| grid, one row per matrix row.
Table magnitude_grid(const std::string& name, const CMatrix& m) {
  Table t{name, {}, {}};
  for (std::size_t j = 0; j < m.cols(); ++j) t.header.push_back("col" + std::to_string(j));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(std::abs(m(i, j)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Json train_json(const TrainConfig& c) {
  return {{"max_iters", c.max_iters},
          {"step_size", c.step_size},
          {"step_decay", c.step_decay},
          {"tolerance", c.tolerance},
          {"seed", c.seed},
          {"gradient_mode", c.gradient_mode == GradientMode::analytic ? "analytic" : "finite_difference"},
          {"fd_epsilon", c.fd_epsilon}};
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json run_json(const std::string& name, const TrainReport& r) {
  Json metrics = Json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = finite_or_null(v);
  Json hist = Json::array();
  for (double v : r.loss_history) hist.push_back(finite_or_null(v));
  return {{"name", name},
          {"final_loss", finite_or_null(r.final_loss)},
          {"iterations_run", r.iterations_run},
          {"diverged", r.diverged},
          {"train", train_json(r.config_echo)},
          {"metrics", metrics},
          {"loss_history", hist}};
}

void add_run(RunResult& out, const std::string& name, const TrainReport& r) {
  out.report["runs"].push_back(run_json(name, r));
  out.summary[name + ".final_loss"] = r.final_loss;
  out.summary[name + ".iterations_run"] = static_cast<double>(r.iterations_run);
  for (const auto& [k, v] : r.metrics) out.summary[name + "." + k] = v;
  out.diverged = out.diverged || r.diverged;
  std::ostringstream line;
  line << name << ": loss " << r.loss_history.front() << " -> " << r.final_loss << " after "
       << r.iterations_run << " iterations" << (r.diverged ? " (diverged)" : "");
  out.log.push_back(line.str());
}

TrainConfig seeded(const Experiment& exp) {
  TrainConfig c = exp.train;
  c.seed = exp.seed;
  return c;
}

// ---- task runners -----------------------------------------------------------

void run_diagonalize(const Experiment& exp, RunResult& out) {
  const auto p = diagonalize_params(exp.params);
  const StackGeometry& tx = *exp.geometry;
  const StackGeometry rx = rx_geometry(tx, p);
  tasks::ChannelModel ch;
  ch.kind = p.channel == "los" ? tasks::ChannelKind::los_spherical : tasks::ChannelKind::rayleigh;
  ch.link_distance_m = p.link_distance_wl * tx.wavelength.lambda_m();
  ch.variance = p.variance;
  ch.seed = exp.seed;
  const auto res = tasks::diagonalize_mimo(tx, rx, ch, seeded(exp), p.normalized);
  add_run(out, "diagonalize", res.report);

  out.tables.push_back(magnitude_grid("channel_magnitude", res.trained_channel));
  out.tables.push_back(magnitude_grid("channel_magnitude_initial", res.initial_channel));
  out.tables.push_back(matrix_table("channel_trained", res.trained_channel));
  Table ratios{"leakage_ratio_db", {"stream", "initial_db", "trained_db"}, {}};
  for (std::size_t s = 0; s < res.trained_ratio_db.size(); ++s) {
    ratios.rows.push_back({static_cast<double>(s), res.initial_ratio_db[s], res.trained_ratio_db[s]});
  }
  out.tables.push_back(std::move(ratios));
  out.tables.push_back(history_table("loss_history", res.report.loss_history));
  out.tables.push_back(profile_table("profile_tx", tx, res.tx_profile));
  out.tables.push_back(profile_table("profile_rx", rx, res.rx_profile));
}

void run_fit_dft(const Experiment& exp, RunResult& out) {
  const auto p = fit_dft_params(exp.params);
  Table errors{"fit_errors", {"layers", "initial_error", "normalized_fit_error", "iterations"}, {}};
  const auto depths = dft_depths(exp, p);
  for (std::size_t depth : depths) {
    const StackGeometry g = with_depth(*exp.geometry, depth);
    const auto rep = tasks::fit_dft(g, seeded(exp));
    const std::string name = "L" + std::to_string(depth);
    add_run(out, depths.size() == 1 ? "fit" : name, rep);
    errors.rows.push_back({static_cast<double>(depth), rep.loss_history.front(), rep.final_loss,
                           static_cast<double>(rep.iterations_run)});

    const auto& grid = g.layers.front();
    const CMatrix f = tasks::dft2_matrix(grid.rows, grid.cols);
    const CMatrix op = forward_operator(g, rep.final_profile).matrix;
    const cplx beta = best_scale(op, f);
    const auto x = tasks::plane_wave_field(g.source_points, p.probe_az_deg * kDeg,
                                           p.probe_el_deg * kDeg, g.wavelength.lambda_m());
    const auto ideal = multiply(f, std::span<const cplx>(x));
    const auto fitted = multiply(op, std::span<const cplx>(x));
    Table spec{name + "_spectrum", {"row", "col", "ideal_intensity", "fitted_intensity"}, {}};
    for (std::size_t i = 0; i < ideal.size(); ++i) {
      spec.rows.push_back({static_cast<double>(i / grid.cols), static_cast<double>(i % grid.cols),
                           std::norm(ideal[i]), std::norm(beta * fitted[i])});
    }
    out.tables.push_back(std::move(spec));
    out.tables.push_back(history_table(name + "_loss_history", rep.loss_history));
    out.tables.push_back(profile_table(name + "_profile", g, rep.final_profile));
  }
  out.tables.insert(out.tables.begin(), std::move(errors));
}

void run_doa(const Experiment& exp, RunResult& out) {
  const auto p = doa_params(exp.params);
  const StackGeometry& g = *exp.geometry;
  const tasks::BeamGrid grid = tasks::BeamGrid::from_geometry(g);
  CMatrix op;
  if (p.op == "ideal") {
    op = tasks::dft2_matrix(grid.rows, grid.cols);
  } else {
    const auto rep = tasks::fit_dft(g, seeded(exp));
    add_run(out, "fit", rep);
    op = forward_operator(g, rep.final_profile).matrix;
    out.tables.push_back(profile_table("profile", g, rep.final_profile));
  }
  tasks::DoaOptions opts;
  opts.num_sources = p.k;
  opts.snapshots = p.snapshots;
  opts.seed = exp.seed;
  if (p.snr_db) opts.snr_db = *p.snr_db;
  const auto est = tasks::doa_estimate(op, grid, g.source_points, p.sources, opts);

  Table spec{"doa_spectrum", {"fine_row", "fine_col", "u_row", "v_col", "intensity"}, {}};
  for (std::size_t i = 0; i < est.spectrum.size(); ++i) {
    const std::size_t r = i / est.spectrum_cols, c = i % est.spectrum_cols;
    const auto s = tasks::bin_center(grid, r, c, est.refinement);
    spec.rows.push_back({static_cast<double>(r), static_cast<double>(c), s.u_row, s.v_col, est.spectrum[i]});
  }
  out.tables.push_back(std::move(spec));
  Table peaks{"doa_estimates", {"rank", "bin", "azimuth_deg", "elevation_deg"}, {}};
  for (std::size_t k = 0; k < est.angles.size(); ++k) {
    peaks.rows.push_back({static_cast<double>(k), static_cast<double>(est.bin_indices[k]),
                          est.angles[k].first / kDeg, est.angles[k].second / kDeg});
  }
  out.tables.push_back(std::move(peaks));

  Json m = Json::object();
  m["refinement"] = est.refinement;
  m["reference_mse_db"] = p.reference_mse_db;
  out.summary["refinement"] = static_cast<double>(est.refinement);
  if (p.k == p.sources.size()) {
    const double mse = tasks::angular_mse(est.angles, p.sources);
    m["angular_mse_rad2"] = mse;
    m["angular_mse_db"] = finite_or_null(10.0 * std::log10(mse));
    out.summary["angular_mse_rad2"] = mse;
    if (p.snapshots > 1) {
      tasks::DoaOptions one = opts;
      one.snapshots = 1;
      const double mse1 = tasks::angular_mse(
          tasks::doa_estimate(op, grid, g.source_points, p.sources, one).angles, p.sources);
      m["single_snapshot_mse_rad2"] = mse1;
      out.summary["single_snapshot_mse_rad2"] = mse1;
    }
  }
  out.report["metrics"] = m;
  out.log.push_back("doa: " + std::to_string(est.angles.size()) + " peaks on a " +
                    std::to_string(est.spectrum_rows) + "x" + std::to_string(est.spectrum_cols) +
                    " spectrum");
}

void run_sum_rate(const Experiment& exp, RunResult& out) {
  const auto p = sum_rate_params(exp.params);
  const StackGeometry& g = *exp.geometry;
  const std::size_t users = g.source_points.size();
  const auto& last = g.layers.back();
  CMatrix h;
  if (p.channel == "rayleigh") {
    h = tasks::rayleigh_channel(users, last.atom_count(), p.variance, exp.seed);
  } else {
    const double lambda = g.wavelength.lambda_m();
    const double z = g.layer_z(g.layer_count() - 1);
    h = tasks::los_channel(last.atom_positions(z),
                           line_points(users, p.user_pitch_wl * lambda, z + p.distance_wl * lambda),
                           last.meta_atom_area_m2, lambda);
  }
  tasks::SumRateOptions opts;
  opts.noise_power = p.noise_power;
  opts.power_budget = p.power_budget;
  opts.rounds = p.rounds;
  opts.codebook_bits = exp.codebook_bits;
  opts.refinement_sweeps = exp.sweeps;
  const auto res = tasks::optimize_sum_rate(g, h, seeded(exp), opts);
  add_run(out, "sum_rate", res.report);
  out.summary["sum_rate"] = res.sum_rate;
  out.summary["initial_sum_rate"] = res.initial_sum_rate;
  out.report["metrics"] = {{"sum_rate", res.sum_rate}, {"initial_sum_rate", res.initial_sum_rate}};
  Table pw{"powers", {"user", "power"}, {}};
  for (std::size_t k = 0; k < res.powers.size(); ++k) pw.rows.push_back({static_cast<double>(k), res.powers[k]});
  out.tables.push_back(std::move(pw));
  out.tables.push_back(matrix_table("effective_channel", res.effective_channel));
  out.tables.push_back(history_table("loss_history", res.report.loss_history));
  out.tables.push_back(profile_table("profile", g, res.report.final_profile));
}

void run_classify(const Experiment& exp, RunResult& out) {
  const auto p = classify_params(exp.params);
  const StackGeometry& g = *exp.geometry;
  if (!exp.observation_grid) {
    throw ConfigError("geometry.observations", "classification needs a grid of observation ports");
  }
  const auto regions = tasks::quadrant_regions(exp.observation_grid->first, exp.observation_grid->second);
  const double lambda = g.wavelength.lambda_m();
  const auto train = tasks::quadrant_beam_dataset(g.source_points, lambda, p.per_class_train,
                                                  exp.seed, p.min_sine, p.max_sine);
  const auto test = tasks::quadrant_beam_dataset(g.source_points, lambda, p.per_class_test,
                                                 exp.seed + 0x9E3779B97F4A7C15ULL, p.min_sine, p.max_sine);
  const auto rep = tasks::energy_routing_train(g, regions, train, seeded(exp), {p.temperature});
  add_run(out, "classify", rep);
  const double acc = tasks::routing_accuracy(g, rep.final_profile, regions, test);
  out.summary["test_accuracy"] = acc;
  out.report["metrics"] = {{"test_accuracy", acc}, {"train_accuracy", rep.metrics.at("train_accuracy")}};

  const CMatrix op = forward_operator(g, rep.final_profile).matrix;
  const RoutingTarget target{test.inputs, test.labels, regions, p.temperature};
  const auto energies = region_energies(op, target);
  Table e{"region_energies", {"sample", "label", "predicted", "e0", "e1", "e2", "e3"}, {}};
  Table conf{"confusion", {"label", "pred0", "pred1", "pred2", "pred3"}, {}};
  for (int c = 0; c < 4; ++c) conf.rows.push_back({static_cast<double>(c), 0, 0, 0, 0});
  for (std::size_t s = 0; s < test.labels.size(); ++s) {
    std::vector<double> col;
    for (const auto& per_region : energies) col.push_back(per_region[s]);
    const int pred = predicted_class(col);
    std::vector<double> row{static_cast<double>(s), static_cast<double>(test.labels[s]),
                            static_cast<double>(pred)};
    row.insert(row.end(), col.begin(), col.end());
    e.rows.push_back(std::move(row));
    conf.rows[static_cast<std::size_t>(test.labels[s])][1 + static_cast<std::size_t>(pred)] += 1;
  }
  out.tables.push_back(std::move(e));
  out.tables.push_back(std::move(conf));
  out.tables.push_back(history_table("loss_history", rep.loss_history));
  out.tables.push_back(profile_table("profile", g, rep.final_profile));
}

void run_assign(const Experiment& exp, RunResult& out) {
  const auto p = assign_params(exp.params, exp.seed);
  const auto m = p.problem.antennas(), k = p.problem.users();
  Table t{"assignment", {"method", "user", "antenna", "gain"}, {}};
  Json metrics = Json::object();
  metrics["antennas"] = m;
  metrics["users"] = k;
  try {
    metrics["combinations"] = tasks::assignment_count(m, k);
  } catch (const TooLarge&) {
    metrics["combinations"] = nullptr;
  }
  std::size_t method_index = 0;
  for (const char* method : {"exhaustive", "greedy"}) {
    if (p.method != "both" && p.method != method) {
      ++method_index;
      continue;
    }
    const auto res = tasks::assign_antennas(p.problem, std::string(method) == "exhaustive"
                                                           ? tasks::AssignmentMethod::exhaustive
                                                           : tasks::AssignmentMethod::greedy);
    for (std::size_t u = 0; u < k; ++u) {
      const std::size_t a = res.antenna_of_user[u];
      t.rows.push_back({static_cast<double>(method_index), static_cast<double>(u),
                        static_cast<double>(a), p.problem.gain[a][u]});
    }
    metrics[std::string(method) + "_objective"] = res.objective;
    out.summary[std::string(method) + "_objective"] = res.objective;
    out.log.push_back(std::string(method) + ": objective " + std::to_string(res.objective));
    ++method_index;
  }
  out.report["metrics"] = metrics;
  out.tables.push_back(std::move(t));
}

}  // namespace

Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
}

Experiment parse_experiment(const Json& config) {
  Reader r(config, "", {"task", "seed", "output_dir", "geometry", "train", "params"});
  Experiment exp;
  exp.echo = config;
  r.raw("task");
  const std::string task =
      r.choice("task", "", {"diagonalize", "fit-dft", "doa", "sum-rate", "classify", "assign"});
  if (task == "diagonalize") exp.task = Task::diagonalize;
  else if (task == "fit-dft") exp.task = Task::fit_dft;
  else if (task == "doa") exp.task = Task::doa;
  else if (task == "sum-rate") exp.task = Task::sum_rate;
  else if (task == "classify") exp.task = Task::classify;
  else exp.task = Task::assign;
  exp.seed = r.count("seed", 0);
  exp.output_dir = r.text("output_dir", exp.output_dir);
  if (r.has("geometry")) {
    parse_geometry(r.raw("geometry"), exp);
  } else if (exp.task != Task::assign) {
    throw ConfigError("geometry", "required field is missing");
  }
  if (r.has("train")) parse_train(r.raw("train"), exp);
  exp.train.seed = exp.seed;
  if (r.has("params")) exp.params = r.raw("params");
  check_params(exp);

  const auto& g = exp.geometry;
  auto require_square_ports = [&](const char* what) {
    if (g->source_points.size() != g->observation_points.size()) {
      throw ConfigError("geometry", std::string(what) + " needs as many observation ports as sources");
    }
  };
  switch (exp.task) {
    case Task::diagonalize: require_square_ports("diagonalize"); break;
    case Task::fit_dft:
    case Task::doa:
      require_square_ports(task.c_str());
      if (g->source_points.size() != g->layers.front().atom_count() || !exp.source_grid) {
        throw ConfigError("geometry.sources", "must be a grid matching the first layer lattice");
      }
      break;
    case Task::classify:
      if (!exp.observation_grid) {
        throw ConfigError("geometry.observations", "classification needs a grid of observation ports");
      }
      break;
    case Task::sum_rate:
      if (exp.codebook_bits && exp.train.gradient_mode == GradientMode::finite_difference) {
        throw ConfigError("train.gradient_mode", "not used with codebook_bits");
      }
      break;
    case Task::assign: break;
  }
  return exp;
}

std::vector<GeometryWarning> experiment_warnings(const Experiment& exp) {
  if (!exp.geometry) return {};
  std::vector<GeometryWarning> out = validate_geometry(*exp.geometry);
  if (exp.task == Task::fit_dft) {
    for (std::size_t d : dft_depths(exp, fit_dft_params(exp.params))) {
      if (d == exp.geometry->layer_count()) continue;
      for (auto& w : validate_geometry(with_depth(*exp.geometry, d))) out.push_back(w);
    }
  }
  if (exp.task == Task::diagonalize) {
    const auto p = diagonalize_params(exp.params);
    if (p.rx_layers) {
      for (auto& w : validate_geometry(rx_geometry(*exp.geometry, p))) out.push_back(w);
    }
  }
  return out;
}

RunResult run_experiment(const Experiment& exp) {
  RunResult out;
  out.report = {{"task", std::string(task_name(exp.task))},
                {"seed", exp.seed},
                {"config", exp.echo},
                {"runs", Json::array()}};
  out.warnings = experiment_warnings(exp);
  Json warns = Json::array();
  for (const auto& w : out.warnings) {
    warns.push_back({{"interface", w.interface_index}, {"max_abs", w.max_abs}, {"message", w.message}});
    out.log.push_back("warning: " + w.message);
  }
  out.report["warnings"] = warns;
  if (exp.geometry) {
    const auto& g = *exp.geometry;
    std::ostringstream s;
    s << "geometry: " << g.layer_count() << " layers, " << g.source_points.size() << " sources, "
      << g.observation_points.size() << " observation ports, lambda " << g.wavelength.lambda_m() << " m";
    out.log.push_back(s.str());
  }
  switch (exp.task) {
    case Task::diagonalize: run_diagonalize(exp, out); break;
    case Task::fit_dft: run_fit_dft(exp, out); break;
    case Task::doa: run_doa(exp, out); break;
    case Task::sum_rate: run_sum_rate(exp, out); break;
    case Task::classify: run_classify(exp, out); break;
    case Task::assign: run_assign(exp, out); break;
  }
  Json names = Json::array();
  for (const auto& t : out.tables) names.push_back(t.name + ".csv");
  out.report["tables"] = names;
  return out;
}

}  // namespace simforge::cli
