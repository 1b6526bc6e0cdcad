// SPDX-License-Identifier: Apache-2.0
#include "simforge/tasks/routing.hpp"

#include <random>

#include "simforge/error.hpp"
#include "simforge/tasks/channels.hpp"

namespace simforge::tasks {

LabeledFields quadrant_beam_dataset(const std::vector<Vec3>& points, double lambda_m,
                                    std::size_t per_class, std::uint64_t seed, double min_sine,
                                    double max_sine) {
  if (!(min_sine >= 0.0 && min_sine < max_sine && max_sine < 0.7)) {
    throw InvalidParameter("quadrant_beam_dataset: need 0 <= min_sine < max_sine < 0.7");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(min_sine, max_sine);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  LabeledFields ds;
  ds.inputs = CMatrix(points.size(), 4 * per_class);
  std::size_t col = 0;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (int c = 0; c < 4; ++c) {
      const double u = (c & 2 ? 1.0 : -1.0) * mag(rng);
      const double v = (c & 1 ? 1.0 : -1.0) * mag(rng);
      const cplx global = std::polar(1.0, phase(rng));
      double az = 0.0, el = 0.0;
      angles_from_sines({u, v}, az, el);
      const auto f = plane_wave_field(points, az, el, lambda_m);
      for (std::size_t p = 0; p < points.size(); ++p) ds.inputs(p, col) = global * f[p];
      ds.labels.push_back(c);
      ++col;
    }
  }
  return ds;
}

std::vector<std::vector<std::size_t>> quadrant_regions(std::size_t rows, std::size_t cols) {
  if (rows < 2 || cols < 2) throw InvalidParameter("quadrant_regions: grid must be at least 2x2");
  std::vector<std::vector<std::size_t>> regions(4);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const bool low = 2 * r >= rows;
      const bool right = 2 * c >= cols;
      if (2 * r + 1 == rows || 2 * c + 1 == cols) continue;  // odd grids: skip the center line
      regions[(low ? 2 : 0) + (right ? 1 : 0)].push_back(r * cols + c);
    }
  }
  return regions;
}

namespace {

RoutingTarget make_target(const std::vector<std::vector<std::size_t>>& regions,
                          const LabeledFields& ds, double temperature) {
  return RoutingTarget{ds.inputs, ds.labels, regions, temperature};
}

}  // namespace

TrainReport energy_routing_train(const StackGeometry& geom,
                                 const std::vector<std::vector<std::size_t>>& regions,
                                 const LabeledFields& dataset, const TrainConfig& cfg,
                                 const RoutingOptions& opts) {
  const Cascade cascade = stack_cascade(geom);
  const LossSpec loss{make_target(regions, dataset, opts.temperature)};
  loss.check(cascade.output_dim(), cascade.input_dim());
  TrainReport report = gradient_descent(cascade, random_profile(geom, cfg.seed), loss, cfg);
  report.metrics["train_accuracy"] =
      simforge::routing_accuracy(cascade.evaluate(report.final_profile),
                                 std::get<RoutingTarget>(loss.target));
  return report;
}

double routing_accuracy(const StackGeometry& geom, const PhaseProfile& prof,
                        const std::vector<std::vector<std::size_t>>& regions,
                        const LabeledFields& dataset) {
  const auto op = forward_operator(geom, prof);
  return simforge::routing_accuracy(op.matrix, make_target(regions, dataset, 1.0));
}

}  // namespace simforge::tasks
