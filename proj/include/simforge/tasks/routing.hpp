// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "simforge/optimizer.hpp"

namespace simforge::tasks {

struct LabeledFields {
  CMatrix inputs;  // ports x samples
  std::vector<int> labels;
};

// Four classes of unit plane waves, one per quadrant of direction-sine space:
// class c has sign(u_row) = (c & 2 ? + : -), sign(v_col) = (c & 1 ? + : -),
// magnitudes uniform in [min_sine, max_sine] and a random global phase.
LabeledFields quadrant_beam_dataset(const std::vector<Vec3>& points, double lambda_m,
                                    std::size_t per_class, std::uint64_t seed,
                                    double min_sine = 0.15, double max_sine = 0.55);

// Splits a rows x cols port grid into its four quadrant blocks, ordered to
// match quadrant_beam_dataset's classes.
std::vector<std::vector<std::size_t>> quadrant_regions(std::size_t rows, std::size_t cols);

struct RoutingOptions {
  double temperature = 10.0;
};

// Trains the stack so each sample's energy concentrates on its class region.
// Metrics: train_accuracy.
TrainReport energy_routing_train(const StackGeometry& geom,
                                 const std::vector<std::vector<std::size_t>>& regions,
                                 const LabeledFields& dataset, const TrainConfig& cfg,
                                 const RoutingOptions& opts = {});

double routing_accuracy(const StackGeometry& geom, const PhaseProfile& prof,
                        const std::vector<std::vector<std::size_t>>& regions,
                        const LabeledFields& dataset);

}  // namespace simforge::tasks
