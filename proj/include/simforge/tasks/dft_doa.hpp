// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "simforge/optimizer.hpp"
#include "simforge/tasks/channels.hpp"

namespace simforge::tasks {

// Unitary 2D DFT on an R x C grid. Input index r * C + c, output (bin) index
// p * C + q, entry exp(-j 2 pi (p r / R + q c / C)) / sqrt(R C).
CMatrix dft2_matrix(std::size_t rows, std::size_t cols);

// Least-squares fit of beta * G(phases) to the 2D DFT over the source grid.
// The geometry's source and observation ports must both hold rows * cols
// points of the first layer's lattice. Reports normalized_fit_error,
// beta_re and beta_im.
TrainReport fit_dft(const StackGeometry& geom, const TrainConfig& cfg);
TrainReport fit_dft(const StackGeometry& geom, const PhaseProfile& init, const TrainConfig& cfg);

// Beamspace lattice: R x C input grid at a given pitch.
struct BeamGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double pitch_m = 0.0;
  double lambda_m = 0.0;

  static BeamGrid from_geometry(const StackGeometry& geom);
};

// Direction sines at the center of a (possibly refined) bin. With refinement
// m the grid is (R m) x (C m) and fine row index i sits at frequency i / m.
DirectionSines bin_center(const BeamGrid& grid, std::size_t fine_row, std::size_t fine_col,
                          std::size_t refinement = 1);
// Bin (p, q) whose center is nearest the given sines (refinement 1).
std::pair<std::size_t, std::size_t> nearest_bin(const BeamGrid& grid, const DirectionSines& s);

struct PlaneWaveSource {
  double azimuth = 0.0;
  double elevation = 0.0;
  double amplitude = 1.0;
};

struct DoaOptions {
  std::size_t num_sources = 1;  // K
  std::size_t snapshots = 1;
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
};

struct DoaEstimate {
  std::vector<std::pair<double, double>> angles;  // (azimuth, elevation) per peak
  std::vector<std::size_t> bin_indices;           // into spectrum, row-major
  std::vector<double> spectrum;                   // aggregated intensity
  std::size_t spectrum_rows = 0;
  std::size_t spectrum_cols = 0;
  std::size_t refinement = 1;
  std::size_t num_sources = 0;
};

// Per-snapshot input phase ramp: shifts every bin by (row_offset, col_offset)
// bin widths.
std::vector<cplx> snapshot_ramp(const BeamGrid& grid, double row_offset, double col_offset);

// Applies `op` (bins x input ports) to the superposed plane-wave field with a
// ramp per snapshot and interleaves the intensities into a refined spectrum.
// Snapshot s uses offsets ((s / m) / m, (s % m) / m), m = ceil(sqrt(S)).
DoaEstimate doa_estimate(const CMatrix& op, const BeamGrid& grid,
                         const std::vector<Vec3>& input_points,
                         const std::vector<PlaneWaveSource>& sources, const DoaOptions& opts);
DoaEstimate doa_estimate(const StackGeometry& geom, const PhaseProfile& trained,
                         const std::vector<PlaneWaveSource>& sources, const DoaOptions& opts);

// Toroidal local maxima over a (2 radius + 1)^2 window, above a round-off
// floor, strongest first with ties to the lower index; remaining cells fill
// in by value when fewer than k exist.
std::vector<std::size_t> top_k_peaks(const std::vector<double>& values, std::size_t rows,
                                     std::size_t cols, std::size_t k, std::size_t radius = 1);

// Mean over sources of (d_az^2 + d_el^2), with estimates matched to truths by
// the cheapest permutation. Radians^2.
double angular_mse(const std::vector<std::pair<double, double>>& estimates,
                   const std::vector<PlaneWaveSource>& truth);

}  // namespace simforge::tasks
