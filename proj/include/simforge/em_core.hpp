// SPDX-License-Identifier: Apache-2.0
#pragma once

// Free-space geometry of a metasurface stack and the atom-to-atom
// diffraction coefficient between parallel planes.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "simforge/linalg.hpp"

namespace simforge {

inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

using Vec3 = std::array<double, 3>;

inline constexpr Vec3 kAxis{0.0, 0.0, 1.0};

class Wavelength {
 public:
  static Wavelength from_frequency(double frequency_hz);

  double frequency_hz() const { return frequency_hz_; }
  double lambda_m() const { return lambda_m_; }

 private:
  Wavelength(double f, double l) : frequency_hz_(f), lambda_m_(l) {}
  double frequency_hz_;
  double lambda_m_;
};

// Rectangular lattice of meta-atoms. Atom (r, c) has index r * cols + c;
// row 0 is the top row (largest y), column 0 the leftmost (smallest x).
struct GridLayout {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double pitch_m = 0.0;
  double meta_atom_area_m2 = 0.0;

  std::size_t atom_count() const { return rows * cols; }
  void validate() const;
  // Atom centers on the plane z, centered on the optical axis.
  std::vector<Vec3> atom_positions(double z) const;
};

// Row-major lattice points without an associated atom area.
std::vector<Vec3> grid_points(std::size_t rows, std::size_t cols, double pitch_m, double z);
// `count` points along x, centered on the axis.
std::vector<Vec3> line_points(std::size_t count, double pitch_m, double z);

struct StackGeometry {
  Wavelength wavelength = Wavelength::from_frequency(28e9);
  std::vector<GridLayout> layers;
  // gaps_m[0]: source plane -> layer 1, gaps_m[l]: layer l -> layer l+1,
  // gaps_m[L]: layer L -> observation plane.
  std::vector<double> gaps_m;
  std::vector<Vec3> source_points;
  std::vector<Vec3> observation_points;
  // Emitting area used for source ports; defaults to the first layer's atom area.
  std::optional<double> source_area_m2;

  std::size_t layer_count() const { return layers.size(); }
  // Axial coordinate of layer l (0-based). Source plane sits at z = 0.
  double layer_z(std::size_t l) const;
  double observation_z() const;
  std::vector<Vec3> layer_positions(std::size_t l) const;
  double port_area_m2() const;
  std::vector<std::size_t> layer_sizes() const;

  // Throws InvalidParameter when the structure is inconsistent.
  void validate() const;

  // L identical layers with uniform gaps; ports are placed on the source
  // plane (z = 0) and the observation plane.
  static StackGeometry uniform(double frequency_hz, std::size_t num_layers, std::size_t rows,
                               std::size_t cols, double pitch_in_wavelengths,
                               double gap_in_wavelengths, std::vector<Vec3> sources_in_wavelengths,
                               std::vector<Vec3> observations_in_wavelengths);
};

// Diffraction coefficient from `src` to `dst`:
//   (A cos z / d) (1 / (2 pi d) - j / lambda) exp(j 2 pi d / lambda)
// with cos z = <dst - src, src_normal> / d.
cplx propagation_coefficient(const Vec3& src, const Vec3& dst, const Vec3& src_normal,
                             double area_m2, double lambda_m);

struct PropagationMatrix {
  CMatrix entries;  // rows: destinations, cols: sources
  double max_abs = 0.0;
};

PropagationMatrix propagation_matrix(const std::vector<Vec3>& from_points, const Vec3& from_normal,
                                     const std::vector<Vec3>& to_points, double area_m2,
                                     double lambda_m);

// Every propagation matrix of the stack in order: source ports -> layer 1,
// layer l -> layer l+1, ..., layer L -> observation ports.
std::vector<PropagationMatrix> stack_propagation(const StackGeometry& geom);

struct GeometryWarning {
  std::size_t interface_index;  // 0 = source plane -> layer 1
  double max_abs;
  std::string message;
};

// Flags every adjacent-plane interface whose largest coefficient magnitude
// is at least one (the coupling model stops being physically consistent).
std::vector<GeometryWarning> validate_geometry(const StackGeometry& geom);

}  // namespace simforge
