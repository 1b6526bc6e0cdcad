// SPDX-License-Identifier: Apache-2.0
#include "simforge/tasks/channels.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "simforge/error.hpp"

namespace simforge::tasks {

CMatrix los_channel(const std::vector<Vec3>& from, const std::vector<Vec3>& to, double area_m2,
                    double lambda_m) {
  return propagation_matrix(from, kAxis, to, area_m2, lambda_m).entries;
}

CMatrix rayleigh_channel(std::size_t rows, std::size_t cols, double variance, std::uint64_t seed) {
  if (!(variance > 0.0)) throw InvalidParameter("rayleigh_channel: variance must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, std::sqrt(0.5 * variance));
  CMatrix h(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double re = n01(rng);
      const double im = n01(rng);
      h(r, c) = {re, im};
    }
  }
  return h;
}

DirectionSines direction_sines(double azimuth, double elevation) {
  return {-std::sin(elevation), std::cos(elevation) * std::sin(azimuth)};
}

void angles_from_sines(const DirectionSines& s, double& azimuth, double& elevation) {
  elevation = std::asin(std::clamp(-s.u_row, -1.0, 1.0));
  const double ce = std::cos(elevation);
  azimuth = ce > 0.0 ? std::asin(std::clamp(s.v_col / ce, -1.0, 1.0)) : 0.0;
}

std::vector<cplx> plane_wave_field(const std::vector<Vec3>& points, double azimuth,
                                   double elevation, double lambda_m) {
  if (!(lambda_m > 0.0)) throw InvalidParameter("plane_wave_field: wavelength must be positive");
  const double kx = std::cos(elevation) * std::sin(azimuth);
  const double ky = std::sin(elevation);
  std::vector<cplx> f(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double phase = kTwoPi * (kx * points[i][0] + ky * points[i][1]) / lambda_m;
    f[i] = {std::cos(phase), std::sin(phase)};
  }
  return f;
}

}  // namespace simforge::tasks
