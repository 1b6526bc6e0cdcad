// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "simforge/em_core.hpp"
#include "simforge/linalg.hpp"

namespace simforge::tasks {

enum class ChannelKind { los_spherical, rayleigh, plane_wave };

struct ChannelModel {
  ChannelKind kind = ChannelKind::los_spherical;
  // los_spherical: axial distance between the two apertures.
  double link_distance_m = 0.0;
  // rayleigh: entries are CN(0, variance).
  double variance = 1.0;
  std::uint64_t seed = 0;
  // plane_wave
  double azimuth = 0.0;
  double elevation = 0.0;
};

// Eq.-(1) kernels between two apertures (destinations x sources).
CMatrix los_channel(const std::vector<Vec3>& from, const std::vector<Vec3>& to, double area_m2,
                    double lambda_m);
CMatrix rayleigh_channel(std::size_t rows, std::size_t cols, double variance, std::uint64_t seed);

// Direction sines along the lattice axes. `u_row` points toward increasing
// row index (-y), `v_col` toward increasing column index (+x). The wave
// vector is (cos el sin az, sin el, cos el cos az).
struct DirectionSines {
  double u_row = 0.0;
  double v_col = 0.0;
};
DirectionSines direction_sines(double azimuth, double elevation);
// Inverse of direction_sines; sines outside the visible region are clamped.
void angles_from_sines(const DirectionSines& s, double& azimuth, double& elevation);

// Unit-magnitude plane wave sampled at `points`.
std::vector<cplx> plane_wave_field(const std::vector<Vec3>& points, double azimuth,
                                   double elevation, double lambda_m);

}  // namespace simforge::tasks
