// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "simforge/sim_stack.hpp"

namespace simforge {

enum class LossKind { matrix_fit, interference_leakage, neg_sum_rate, energy_routing_ce };

std::string_view loss_kind_name(LossKind k);

// ||beta T - F||^2 / ||F||^2, beta the least-squares complex scale when
// `fit_scale` is set and 1 otherwise.
struct MatrixFitTarget {
  CMatrix target;
  bool fit_scale = true;
};

// sum_{i != j} |T_ij|^2 on a square operator; divided by sum_i |T_ii|^2 when
// `normalized` is set.
struct LeakageTarget {
  bool normalized = false;
};

// -sum_k log2(1 + p_k |T_kk|^2 / (noise + sum_{j != k} p_j |T_kj|^2)).
struct SumRateTarget {
  std::vector<double> powers;
  double noise_power = 1.0;
};

// Mean cross-entropy of softmax(temperature * E_c / sum E) against labels,
// where E_c is the output intensity summed over region c for each input column.
struct RoutingTarget {
  CMatrix inputs;  // source ports x batch
  std::vector<int> labels;
  std::vector<std::vector<std::size_t>> regions;
  double temperature = 10.0;
};

struct LossSpec {
  std::variant<MatrixFitTarget, LeakageTarget, SumRateTarget, RoutingTarget> target;

  LossKind kind() const { return static_cast<LossKind>(target.index()); }
  // Throws ShapeError / InvalidParameter when the payload does not fit an
  // operator of the given shape.
  void check(std::size_t out_dim, std::size_t in_dim) const;
};

struct LossEvaluation {
  double loss = 0.0;
  CMatrix grad;  // dL/d(conj T); empty when not requested
};

// Evaluates the loss on an operator. Throws NonFiniteLoss on NaN/Inf.
LossEvaluation evaluate_loss(const LossSpec& spec, const CMatrix& op, bool want_gradient);

// Least-squares scale <T, F> / ||T||^2 (0 for a zero operator).
cplx best_scale(const CMatrix& op, const CMatrix& target);

// Per-region intensity for every input column (regions x batch).
std::vector<std::vector<double>> region_energies(const CMatrix& op, const RoutingTarget& target);
// argmax over regions, ties to the lower index.
int predicted_class(std::span<const double> energies);
double routing_accuracy(const CMatrix& op, const RoutingTarget& target);

enum class GradientMode { analytic, finite_difference };

struct TrainConfig {
  std::size_t max_iters = 200;
  double step_size = 0.1;
  double step_decay = 1.0;
  double tolerance = 1e-9;
  std::uint64_t seed = 0;
  GradientMode gradient_mode = GradientMode::analytic;
  double fd_epsilon = 1e-6;

  void validate() const;
};

struct TrainReport {
  std::vector<double> loss_history;
  double final_loss = 0.0;
  std::size_t iterations_run = 0;
  PhaseProfile final_profile;
  std::map<std::string, double> metrics;
  TrainConfig config_echo;
  bool diverged = false;
};

struct LossGradient {
  double loss = 0.0;
  std::vector<std::vector<double>> gradient;  // per layer, zero for frozen atoms
};

LossGradient loss_and_gradient(const Cascade& cascade, const PhaseProfile& prof,
                               const LossSpec& loss, GradientMode mode = GradientMode::analytic,
                               double fd_epsilon = 1e-6);
LossGradient loss_and_gradient(const StackGeometry& geom, const PhaseProfile& prof,
                               const LossSpec& loss, GradientMode mode = GradientMode::analytic,
                               double fd_epsilon = 1e-6);

// Fixed-step descent with multiplicative decay. Phases are wrapped onto
// [0, 2pi) after every step and the best profile seen is returned; its loss
// is the last loss_history entry.
TrainReport gradient_descent(const Cascade& cascade, const PhaseProfile& init,
                             const LossSpec& loss, const TrainConfig& cfg);
TrainReport gradient_descent(const StackGeometry& geom, const PhaseProfile& init,
                             const LossSpec& loss, const TrainConfig& cfg);

// Coordinate descent over the b-bit codebook, one atom at a time in
// layer-major, row-major order. loss_history holds the loss after every
// single-atom visit and never increases.
TrainReport successive_refinement(const Cascade& cascade, const PhaseProfile& init,
                                  const LossSpec& loss, std::size_t sweeps);
TrainReport successive_refinement(const StackGeometry& geom, const PhaseProfile& init,
                                  const LossSpec& loss, std::size_t sweeps);

}  // namespace simforge
