// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "simforge/linalg.hpp"

namespace simforge::tasks {

// p_k = max(0, mu - noise_k / gain_k) with sum p_k = budget.
std::vector<double> waterfill(std::span<const double> gains, std::span<const double> noise,
                              double budget);

// Water level for the allocation above.
double water_level(std::span<const double> gains, std::span<const double> noise, double budget);

// sum_k log2(1 + p_k |h_kk|^2 / (noise + sum_{j != k} p_j |h_kj|^2)), rows are
// users and columns streams.
double sum_rate(const CMatrix& effective_channel, std::span<const double> powers,
                double noise_power);

// Water-filling with inter-stream interference treated as noise, repeated
// `rounds` times from an equal split; keeps the best allocation seen.
std::vector<double> iterative_waterfill(const CMatrix& effective_channel, double noise_power,
                                        double budget, std::size_t rounds = 10);

}  // namespace simforge::tasks
