// SPDX-License-Identifier: Apache-2.0
#include "simforge/tasks/dft_doa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "simforge/error.hpp"

namespace simforge::tasks {

CMatrix dft2_matrix(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw InvalidParameter("dft2_matrix: empty grid");
  const std::size_t n = rows * cols;
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  CMatrix f(n, n);
  for (std::size_t p = 0; p < rows; ++p) {
    for (std::size_t q = 0; q < cols; ++q) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          // Reduce the integer products first so the angle stays exact-ish.
          const double frac = static_cast<double>((p * r) % rows) / static_cast<double>(rows) +
                              static_cast<double>((q * c) % cols) / static_cast<double>(cols);
          f(p * cols + q, r * cols + c) = std::polar(norm, -kTwoPi * frac);
        }
      }
    }
  }
  return f;
}

namespace {

void check_dft_ports(const StackGeometry& geom) {
  geom.validate();
  const std::size_t n = geom.layers.front().atom_count();
  if (geom.source_points.size() != geom.observation_points.size()) {
    throw ShapeError("fit_dft: " + std::to_string(geom.source_points.size()) + " sources vs " +
                     std::to_string(geom.observation_points.size()) +
                     " observation ports; the DFT fit needs a square operator");
  }
  if (geom.source_points.size() != n) {
    throw ShapeError("fit_dft: port count must equal the first layer's atom count");
  }
}

}  // namespace

TrainReport fit_dft(const StackGeometry& geom, const PhaseProfile& init, const TrainConfig& cfg) {
  check_dft_ports(geom);
  const auto& grid = geom.layers.front();
  const Cascade cascade = stack_cascade(geom);
  const LossSpec loss{MatrixFitTarget{dft2_matrix(grid.rows, grid.cols), true}};
  TrainReport report = gradient_descent(cascade, init, loss, cfg);
  const CMatrix g = cascade.evaluate(report.final_profile);
  const cplx beta = best_scale(g, std::get<MatrixFitTarget>(loss.target).target);
  report.metrics["normalized_fit_error"] = report.final_loss;
  report.metrics["beta_re"] = beta.real();
  report.metrics["beta_im"] = beta.imag();
  return report;
}

TrainReport fit_dft(const StackGeometry& geom, const TrainConfig& cfg) {
  return fit_dft(geom, random_profile(geom, cfg.seed), cfg);
}

BeamGrid BeamGrid::from_geometry(const StackGeometry& geom) {
  geom.validate();
  const auto& l0 = geom.layers.front();
  if (geom.source_points.size() != l0.atom_count()) {
    throw ShapeError("beam grid: source ports must match the first layer lattice");
  }
  return {l0.rows, l0.cols, l0.pitch_m, geom.wavelength.lambda_m()};
}

namespace {

double centered(double f, std::size_t n) {
  return f >= 0.5 * static_cast<double>(n) ? f - static_cast<double>(n) : f;
}

}  // namespace

DirectionSines bin_center(const BeamGrid& grid, std::size_t fine_row, std::size_t fine_col,
                          std::size_t refinement) {
  const double m = static_cast<double>(refinement);
  const double fr = centered(static_cast<double>(fine_row) / m, grid.rows);
  const double fc = centered(static_cast<double>(fine_col) / m, grid.cols);
  return {fr * grid.lambda_m / (static_cast<double>(grid.rows) * grid.pitch_m),
          fc * grid.lambda_m / (static_cast<double>(grid.cols) * grid.pitch_m)};
}

std::pair<std::size_t, std::size_t> nearest_bin(const BeamGrid& grid, const DirectionSines& s) {
  auto index = [](double sine, std::size_t n, double pitch, double lambda) {
    const double f = sine * static_cast<double>(n) * pitch / lambda;
    const auto nn = static_cast<long long>(n);
    long long k = std::llround(f) % nn;
    if (k < 0) k += nn;
    return static_cast<std::size_t>(k);
  };
  return {index(s.u_row, grid.rows, grid.pitch_m, grid.lambda_m),
          index(s.v_col, grid.cols, grid.pitch_m, grid.lambda_m)};
}

std::vector<cplx> snapshot_ramp(const BeamGrid& grid, double row_offset, double col_offset) {
  std::vector<cplx> ramp(grid.rows * grid.cols);
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      const double frac = row_offset * static_cast<double>(r) / static_cast<double>(grid.rows) +
                          col_offset * static_cast<double>(c) / static_cast<double>(grid.cols);
      ramp[r * grid.cols + c] = std::polar(1.0, -kTwoPi * frac);
    }
  }
  return ramp;
}

std::vector<std::size_t> top_k_peaks(const std::vector<double>& v, std::size_t rows,
                                     std::size_t cols, std::size_t k, std::size_t radius) {
  if (v.size() != rows * cols) throw ShapeError("top_k_peaks: map size mismatch");
  if (k > v.size()) throw InvalidParameter("top_k_peaks: k exceeds the number of cells");
  if (radius == 0) throw InvalidParameter("top_k_peaks: radius must be >= 1");
  std::vector<std::size_t> peaks;
  std::vector<std::size_t> others;
  const double floor = 1e-12 * *std::max_element(v.begin(), v.end());
  const auto span = static_cast<long long>(radius);
  const auto rr = static_cast<long long>(rows);
  const auto cc = static_cast<long long>(cols);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto r = static_cast<long long>(i / cols);
    const auto c = static_cast<long long>(i % cols);
    bool is_peak = v[i] > floor;
    bool above_some = false;
    for (long long dr = -span; dr <= span && is_peak; ++dr) {
      for (long long dc = -span; dc <= span; ++dc) {
        const auto j = static_cast<std::size_t>((((r + dr) % rr + rr) % rr) * cc + ((c + dc) % cc + cc) % cc);
        if (j == i) continue;
        if (v[i] > v[j]) above_some = true;
        if (j < i ? !(v[i] > v[j]) : !(v[i] >= v[j])) {
          is_peak = false;
          break;
        }
      }
    }
    (is_peak && above_some ? peaks : others).push_back(i);
  }
  auto by_value = [&](std::size_t a, std::size_t b) { return v[a] > v[b] || (v[a] == v[b] && a < b); };
  std::stable_sort(peaks.begin(), peaks.end(), by_value);
  if (peaks.size() >= k) {
    peaks.resize(k);
    return peaks;
  }
  std::stable_sort(others.begin(), others.end(), by_value);
  for (std::size_t i = 0; peaks.size() < k; ++i) peaks.push_back(others[i]);
  return peaks;
}

DoaEstimate doa_estimate(const CMatrix& op, const BeamGrid& grid,
                         const std::vector<Vec3>& input_points,
                         const std::vector<PlaneWaveSource>& sources, const DoaOptions& opts) {
  const std::size_t bins = grid.rows * grid.cols;
  if (op.rows() != bins || op.cols() != bins || input_points.size() != bins) {
    throw ShapeError("doa_estimate: operator and input grid must both cover rows*cols ports");
  }
  if (opts.num_sources == 0 || opts.num_sources > bins) {
    throw InvalidParameter("doa_estimate: K must be in [1, number of detection regions]");
  }
  if (opts.snapshots == 0) throw InvalidParameter("doa_estimate: snapshots must be >= 1");

  std::vector<cplx> field(bins, cplx{});
  for (const auto& s : sources) {
    const auto pw = plane_wave_field(input_points, s.azimuth, s.elevation, grid.lambda_m);
    for (std::size_t i = 0; i < bins; ++i) field[i] += s.amplitude * pw[i];
  }

  const auto m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(opts.snapshots))));
  DoaEstimate est;
  est.refinement = m;
  est.spectrum_rows = grid.rows * m;
  est.spectrum_cols = grid.cols * m;
  est.spectrum.assign(est.spectrum_rows * est.spectrum_cols, 0.0);
  est.num_sources = opts.num_sources;

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const bool noisy = std::isfinite(opts.snr_db);
  for (std::size_t s = 0; s < opts.snapshots; ++s) {
    const std::size_t a = s / m;
    const std::size_t b = s % m;
    const auto ramp = snapshot_ramp(grid, static_cast<double>(a) / static_cast<double>(m),
                                    static_cast<double>(b) / static_cast<double>(m));
    std::vector<cplx> x(bins);
    for (std::size_t i = 0; i < bins; ++i) x[i] = ramp[i] * field[i];
    auto y = multiply(op, std::span<const cplx>(x));
    if (noisy) {
      double power = 0.0;
      for (const auto& v : y) power += std::norm(v);
      power /= static_cast<double>(bins);
      const double sigma = std::sqrt(0.5 * power / std::pow(10.0, opts.snr_db / 10.0));
      for (auto& v : y) v += cplx{sigma * gauss(rng), sigma * gauss(rng)};
    }
    for (std::size_t p = 0; p < grid.rows; ++p) {
      for (std::size_t q = 0; q < grid.cols; ++q) {
        est.spectrum[(p * m + a) * est.spectrum_cols + q * m + b] = std::norm(y[p * grid.cols + q]);
      }
    }
  }

  est.bin_indices =
      top_k_peaks(est.spectrum, est.spectrum_rows, est.spectrum_cols, opts.num_sources, m);
  for (std::size_t idx : est.bin_indices) {
    const auto sines = bin_center(grid, idx / est.spectrum_cols, idx % est.spectrum_cols, m);
    double az = 0.0, el = 0.0;
    angles_from_sines(sines, az, el);
    est.angles.emplace_back(az, el);
  }
  return est;
}

DoaEstimate doa_estimate(const StackGeometry& geom, const PhaseProfile& trained,
                         const std::vector<PlaneWaveSource>& sources, const DoaOptions& opts) {
  const BeamGrid grid = BeamGrid::from_geometry(geom);
  const auto op = forward_operator(geom, trained);
  return doa_estimate(op.matrix, grid, geom.source_points, sources, opts);
}

double angular_mse(const std::vector<std::pair<double, double>>& est,
                   const std::vector<PlaneWaveSource>& truth) {
  if (est.size() != truth.size() || est.empty()) {
    throw ShapeError("angular_mse: estimate and truth counts differ");
  }
  std::vector<std::size_t> perm(est.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double err = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      const double da = est[perm[i]].first - truth[i].azimuth;
      const double de = est[perm[i]].second - truth[i].elevation;
      err += da * da + de * de;
    }
    best = std::min(best, err);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(truth.size());
}

}  // namespace simforge::tasks
