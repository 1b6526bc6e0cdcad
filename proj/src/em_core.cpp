// SPDX-License-Identifier: Apache-2.0
#include "simforge/em_core.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "simforge/error.hpp"

namespace simforge {

Wavelength Wavelength::from_frequency(double frequency_hz) {
  if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz)) {
    throw InvalidParameter("frequency must be positive and finite");
  }
  return Wavelength(frequency_hz, kSpeedOfLight / frequency_hz);
}

void GridLayout::validate() const {
  if (rows == 0 || cols == 0) throw InvalidParameter("grid layout needs rows, cols >= 1");
  if (!(pitch_m > 0.0)) throw InvalidParameter("grid pitch must be positive");
  if (!(meta_atom_area_m2 > 0.0)) throw InvalidParameter("meta-atom area must be positive");
  if (meta_atom_area_m2 > pitch_m * pitch_m * (1.0 + 1e-12)) {
    throw InvalidParameter("meta-atom area exceeds pitch^2 (atoms overlap)");
  }
}

std::vector<Vec3> grid_points(std::size_t rows, std::size_t cols, double pitch_m, double z) {
  std::vector<Vec3> pts;
  pts.reserve(rows * cols);
  const double r0 = 0.5 * static_cast<double>(rows - 1);
  const double c0 = 0.5 * static_cast<double>(cols - 1);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      pts.push_back({(static_cast<double>(c) - c0) * pitch_m,
                     (r0 - static_cast<double>(r)) * pitch_m, z});
    }
  }
  return pts;
}

std::vector<Vec3> line_points(std::size_t count, double pitch_m, double z) {
  return grid_points(1, count, pitch_m, z);
}

std::vector<Vec3> GridLayout::atom_positions(double z) const {
  return grid_points(rows, cols, pitch_m, z);
}

double StackGeometry::layer_z(std::size_t l) const {
  if (l >= layers.size() || gaps_m.size() < l + 1) throw InvalidParameter("layer index out of range");
  return std::accumulate(gaps_m.begin(), gaps_m.begin() + static_cast<std::ptrdiff_t>(l) + 1, 0.0);
}

double StackGeometry::observation_z() const {
  return std::accumulate(gaps_m.begin(), gaps_m.end(), 0.0);
}

std::vector<Vec3> StackGeometry::layer_positions(std::size_t l) const {
  return layers.at(l).atom_positions(layer_z(l));
}

double StackGeometry::port_area_m2() const {
  if (source_area_m2) return *source_area_m2;
  if (layers.empty()) throw InvalidParameter("geometry has no layers");
  return layers.front().meta_atom_area_m2;
}

std::vector<std::size_t> StackGeometry::layer_sizes() const {
  std::vector<std::size_t> sizes;
  for (const auto& g : layers) sizes.push_back(g.atom_count());
  return sizes;
}

void StackGeometry::validate() const {
  if (layers.empty()) throw InvalidParameter("geometry needs at least one layer");
  if (gaps_m.size() != layers.size() + 1) {
    throw InvalidParameter("geometry needs " + std::to_string(layers.size() + 1) +
                           " gaps, got " + std::to_string(gaps_m.size()));
  }
  for (double g : gaps_m) {
    if (!(g > 0.0) || !std::isfinite(g)) throw InvalidParameter("gaps must be positive");
  }
  for (const auto& g : layers) g.validate();
  if (source_area_m2 && !(*source_area_m2 > 0.0)) {
    throw InvalidParameter("source port area must be positive");
  }
  if (source_points.empty()) throw InvalidParameter("geometry needs at least one source port");
  if (observation_points.empty()) {
    throw InvalidParameter("geometry needs at least one observation port");
  }
  const double z1 = layer_z(0);
  for (const auto& p : source_points) {
    if (!(p[2] < z1)) throw InvalidParameter("source ports must lie before the first layer");
  }
  const double zl = layer_z(layers.size() - 1);
  for (const auto& p : observation_points) {
    if (!(p[2] > zl)) throw InvalidParameter("observation ports must lie after the last layer");
  }
}

StackGeometry StackGeometry::uniform(double frequency_hz, std::size_t num_layers, std::size_t rows,
                                     std::size_t cols, double pitch_in_wavelengths,
                                     double gap_in_wavelengths,
                                     std::vector<Vec3> sources_in_wavelengths,
                                     std::vector<Vec3> observations_in_wavelengths) {
  StackGeometry g;
  g.wavelength = Wavelength::from_frequency(frequency_hz);
  const double lambda = g.wavelength.lambda_m();
  const double pitch = pitch_in_wavelengths * lambda;
  g.layers.assign(num_layers, GridLayout{rows, cols, pitch, pitch * pitch});
  g.gaps_m.assign(num_layers + 1, gap_in_wavelengths * lambda);
  for (auto& p : sources_in_wavelengths) {
    g.source_points.push_back({p[0] * lambda, p[1] * lambda, p[2] * lambda});
  }
  const double zo = g.observation_z();
  for (auto& p : observations_in_wavelengths) {
    // Observation z is relative to the observation plane.
    g.observation_points.push_back({p[0] * lambda, p[1] * lambda, zo + p[2] * lambda});
  }
  return g;
}

cplx propagation_coefficient(const Vec3& src, const Vec3& dst, const Vec3& src_normal,
                             double area_m2, double lambda_m) {
  if (!(area_m2 > 0.0)) throw InvalidParameter("propagation_coefficient: area must be positive");
  if (!(lambda_m > 0.0)) {
    throw InvalidParameter("propagation_coefficient: wavelength must be positive");
  }
  const double dx = dst[0] - src[0];
  const double dy = dst[1] - src[1];
  const double dz = dst[2] - src[2];
  const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (d == 0.0) throw DegenerateGeometry("propagation_coefficient: coincident points");
  const double cos_zeta = (dx * src_normal[0] + dy * src_normal[1] + dz * src_normal[2]) / d;
  const double gain = area_m2 * cos_zeta / d;
  const cplx radial{1.0 / (kTwoPi * d), -1.0 / lambda_m};
  const double phase = kTwoPi * d / lambda_m;
  return gain * radial * cplx{std::cos(phase), std::sin(phase)};
}

PropagationMatrix propagation_matrix(const std::vector<Vec3>& from_points, const Vec3& from_normal,
                                     const std::vector<Vec3>& to_points, double area_m2,
                                     double lambda_m) {
  if (from_points.empty() || to_points.empty()) {
    throw InvalidParameter("propagation_matrix: empty point list");
  }
  PropagationMatrix pm{CMatrix(to_points.size(), from_points.size()), 0.0};
  for (std::size_t n = 0; n < to_points.size(); ++n) {
    for (std::size_t m = 0; m < from_points.size(); ++m) {
      const cplx w = propagation_coefficient(from_points[m], to_points[n], from_normal, area_m2,
                                             lambda_m);
      pm.entries(n, m) = w;
      pm.max_abs = std::max(pm.max_abs, std::abs(w));
    }
  }
  return pm;
}

std::vector<PropagationMatrix> stack_propagation(const StackGeometry& geom) {
  geom.validate();
  const double lambda = geom.wavelength.lambda_m();
  std::vector<PropagationMatrix> out;
  out.reserve(geom.layer_count() + 1);
  std::vector<Vec3> prev = geom.source_points;
  double area = geom.port_area_m2();
  for (std::size_t l = 0; l < geom.layer_count(); ++l) {
    auto next = geom.layer_positions(l);
    out.push_back(propagation_matrix(prev, kAxis, next, area, lambda));
    prev = std::move(next);
    area = geom.layers[l].meta_atom_area_m2;
  }
  out.push_back(propagation_matrix(prev, kAxis, geom.observation_points, area, lambda));
  return out;
}

std::vector<GeometryWarning> validate_geometry(const StackGeometry& geom) {
  const auto mats = stack_propagation(geom);
  std::vector<GeometryWarning> warnings;
  const std::size_t last = mats.size() - 1;
  for (std::size_t i = 0; i < mats.size(); ++i) {
    if (mats[i].max_abs < 1.0) continue;
    std::ostringstream msg;
    msg << "interface " << i << " (";
    msg << (i == 0 ? std::string("sources") : "layer " + std::to_string(i));
    msg << " -> " << (i == last ? std::string("observations") : "layer " + std::to_string(i + 1));
    msg << "): max |w| = " << mats[i].max_abs << " >= 1; gap too small for the atom size";
    warnings.push_back({i, mats[i].max_abs, msg.str()});
  }
  return warnings;
}

}  // namespace simforge
