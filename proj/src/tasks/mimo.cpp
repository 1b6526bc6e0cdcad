// SPDX-License-Identifier: Apache-2.0
#include "simforge/tasks/mimo.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "simforge/error.hpp"

namespace simforge::tasks {

CMatrix link_channel(const StackGeometry& tx, const StackGeometry& rx, const ChannelModel& channel) {
  tx.validate();
  rx.validate();
  const std::size_t n_tx = tx.layers.back().atom_count();
  const std::size_t n_rx = rx.layers.front().atom_count();
  switch (channel.kind) {
    case ChannelKind::los_spherical: {
      if (!(channel.link_distance_m > 0.0)) {
        throw InvalidParameter("LoS channel needs a positive link distance");
      }
      const double z_tx = tx.layer_z(tx.layer_count() - 1);
      const auto from = tx.layers.back().atom_positions(z_tx);
      const auto to = rx.layers.front().atom_positions(z_tx + channel.link_distance_m);
      return los_channel(from, to, tx.layers.back().meta_atom_area_m2, tx.wavelength.lambda_m());
    }
    case ChannelKind::rayleigh:
      return rayleigh_channel(n_rx, n_tx, channel.variance, channel.seed);
    case ChannelKind::plane_wave:
      break;
  }
  throw InvalidParameter("plane-wave channel is not a link model");
}

Cascade mimo_cascade(const StackGeometry& tx, const StackGeometry& rx, const CMatrix& channel) {
  Cascade c = transmit_cascade(tx);
  c.push_dense(channel);
  c.append(receive_cascade(rx));
  return c;
}

std::vector<double> leakage_ratios_db(const CMatrix& h) {
  if (h.rows() != h.cols()) throw ShapeError("leakage_ratios_db: square matrix required");
  std::vector<double> out(h.rows());
  for (std::size_t s = 0; s < h.rows(); ++s) {
    double leak = 0.0;
    for (std::size_t j = 0; j < h.cols(); ++j) {
      if (j != s) leak += std::norm(h(s, j));
    }
    out[s] = leak > 0.0 ? 10.0 * std::log10(std::norm(h(s, s)) / leak)
                        : std::numeric_limits<double>::infinity();
  }
  return out;
}

namespace {

PhaseProfile slice_layers(const PhaseProfile& p, std::size_t first, std::size_t count) {
  PhaseProfile out;
  out.codebook_bits = p.codebook_bits;
  for (std::size_t l = first; l < first + count; ++l) {
    out.phases.push_back(p.phases[l]);
    out.amplitudes.push_back(p.amplitudes[l]);
    out.trainable.push_back(p.trainable[l]);
  }
  return out;
}

}  // namespace

MimoResult diagonalize_mimo(const StackGeometry& tx, const StackGeometry& rx,
                            const ChannelModel& channel, const TrainConfig& cfg,
                            bool normalized_leakage) {
  if (tx.source_points.size() != rx.observation_points.size()) {
    throw ShapeError("diagonalize_mimo: transmit antennas and receive probes must match");
  }
  const Cascade cascade = mimo_cascade(tx, rx, link_channel(tx, rx, channel));
  const PhaseProfile init = random_profile(cascade.slot_sizes(), cfg.seed);
  const LossSpec loss{LeakageTarget{normalized_leakage}};

  MimoResult out;
  out.initial_channel = cascade.evaluate(init);
  out.report = gradient_descent(cascade, init, loss, cfg);
  out.trained_channel = cascade.evaluate(out.report.final_profile);
  out.initial_ratio_db = leakage_ratios_db(out.initial_channel);
  out.trained_ratio_db = leakage_ratios_db(out.trained_channel);
  out.tx_profile = slice_layers(out.report.final_profile, 0, tx.layer_count());
  out.rx_profile = slice_layers(out.report.final_profile, tx.layer_count(), rx.layer_count());

  std::size_t improved = 0;
  for (std::size_t s = 0; s < out.trained_ratio_db.size(); ++s) {
    out.report.metrics["stream" + std::to_string(s) + "_ratio_db"] = out.trained_ratio_db[s];
    if (out.trained_ratio_db[s] > out.initial_ratio_db[s]) ++improved;
  }
  out.report.metrics["streams_improved"] = static_cast<double>(improved);
  double off = 0.0, diag = 0.0;
  for (std::size_t i = 0; i < out.trained_channel.rows(); ++i) {
    for (std::size_t j = 0; j < out.trained_channel.cols(); ++j) {
      (i == j ? diag : off) += std::norm(out.trained_channel(i, j));
    }
  }
  out.report.metrics["leakage"] = off;
  out.report.metrics["diagonal_energy"] = diag;
  return out;
}

}  // namespace simforge::tasks
