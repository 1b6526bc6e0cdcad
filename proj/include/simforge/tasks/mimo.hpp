// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "simforge/optimizer.hpp"
#include "simforge/tasks/channels.hpp"

namespace simforge::tasks {

// Transmit SIM -> channel -> receive SIM. The transmit geometry contributes
// its source ports (antennas) and layers; the receive geometry its layers and
// observation ports. The channel maps the transmit SIM's last layer onto the
// receive SIM's first layer.
CMatrix link_channel(const StackGeometry& tx, const StackGeometry& rx, const ChannelModel& channel);
Cascade mimo_cascade(const StackGeometry& tx, const StackGeometry& rx, const CMatrix& channel);

// Per-stream |h_ss|^2 / sum_{s' != s} |h_ss'|^2 in dB (+inf without leakage).
std::vector<double> leakage_ratios_db(const CMatrix& h);

struct MimoResult {
  TrainReport report;  // profile layers: transmit layers, then receive layers
  PhaseProfile tx_profile;
  PhaseProfile rx_profile;
  CMatrix initial_channel;  // end-to-end S x S before training
  CMatrix trained_channel;
  std::vector<double> initial_ratio_db;
  std::vector<double> trained_ratio_db;
};

// Trains both SIMs from a random start (seeded by cfg.seed) to minimize the
// off-diagonal energy of the end-to-end stream matrix.
MimoResult diagonalize_mimo(const StackGeometry& tx, const StackGeometry& rx,
                            const ChannelModel& channel, const TrainConfig& cfg,
                            bool normalized_leakage = false);

}  // namespace simforge::tasks
