// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "simforge/optimizer.hpp"

namespace simforge::tasks {

struct SumRateOptions {
  double noise_power = 1.0;
  double power_budget = 1.0;
  std::size_t rounds = 3;               // power / phase alternations
  std::optional<int> codebook_bits;     // discrete phases via successive refinement
  std::size_t refinement_sweeps = 4;
};

struct SumRateResult {
  TrainReport report;  // loss is -sum rate, history concatenated over rounds
  std::vector<double> powers;
  double initial_sum_rate = 0.0;
  double sum_rate = 0.0;
  CMatrix effective_channel;  // users x streams
};

// Downlink wave-domain beamforming: the SIM maps its source antennas (one
// stream each) onto its last layer and `user_channel` (users x last-layer
// atoms) carries the field to the users. Alternates water-filling power
// allocation with phase updates (gradient descent, or successive refinement
// when codebook_bits is set).
SumRateResult optimize_sum_rate(const StackGeometry& geom, const CMatrix& user_channel,
                                const TrainConfig& cfg, const SumRateOptions& opts);

}  // namespace simforge::tasks
