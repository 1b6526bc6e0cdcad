// SPDX-License-Identifier: Apache-2.0
#include "simforge/tasks/power.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "simforge/error.hpp"

namespace simforge::tasks {

namespace {

double allocated(std::span<const double> floors, double mu) {
  double s = 0.0;
  for (double f : floors) s += std::max(0.0, mu - f);
  return s;
}

std::vector<double> floors_of(std::span<const double> gains, std::span<const double> noise,
                              double budget) {
  if (gains.empty()) throw InvalidParameter("waterfill: no channels");
  if (gains.size() != noise.size()) throw ShapeError("waterfill: gains/noise length mismatch");
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw InvalidParameter("waterfill: budget must be positive");
  }
  std::vector<double> floors(gains.size());
  for (std::size_t k = 0; k < gains.size(); ++k) {
    if (!(gains[k] > 0.0) || !(noise[k] > 0.0)) {
      throw InvalidParameter("waterfill: gains and noise powers must be positive");
    }
    floors[k] = noise[k] / gains[k];
  }
  return floors;
}

}  // namespace

double water_level(std::span<const double> gains, std::span<const double> noise, double budget) {
  const auto floors = floors_of(gains, noise, budget);
  // Bisection brackets the active set; the level is then solved exactly on it.
  double lo = *std::min_element(floors.begin(), floors.end());
  double hi = lo + budget;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (allocated(floors, mid) < budget ? lo : hi) = mid;
  }
  const double probe = 0.5 * (lo + hi);
  double sum_floor = 0.0;
  std::size_t active = 0;
  for (double f : floors) {
    if (f < probe) {
      sum_floor += f;
      ++active;
    }
  }
  if (active == 0) return hi;
  const double mu = (budget + sum_floor) / static_cast<double>(active);
  // Fall back to the bracket if rounding moved the level across a floor.
  return std::abs(allocated(floors, mu) - budget) <= std::abs(allocated(floors, probe) - budget)
             ? mu
             : probe;
}

std::vector<double> waterfill(std::span<const double> gains, std::span<const double> noise,
                              double budget) {
  const double mu = water_level(gains, noise, budget);
  const auto floors = floors_of(gains, noise, budget);
  std::vector<double> p(floors.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::max(0.0, mu - floors[k]);
  return p;
}

double sum_rate(const CMatrix& h, std::span<const double> powers, double noise_power) {
  if (h.rows() != h.cols()) throw ShapeError("sum_rate: effective channel must be square");
  if (powers.size() != h.cols()) throw ShapeError("sum_rate: power vector length mismatch");
  if (!(noise_power > 0.0)) throw InvalidParameter("sum_rate: noise power must be positive");
  double rate = 0.0;
  for (std::size_t k = 0; k < h.rows(); ++k) {
    double interference = noise_power;
    for (std::size_t j = 0; j < h.cols(); ++j) {
      if (j != k) interference += powers[j] * std::norm(h(k, j));
    }
    rate += std::log2(1.0 + powers[k] * std::norm(h(k, k)) / interference);
  }
  return rate;
}

std::vector<double> iterative_waterfill(const CMatrix& h, double noise_power, double budget,
                                        std::size_t rounds) {
  const std::size_t k_users = h.rows();
  std::vector<double> p(k_users, budget / static_cast<double>(k_users));
  std::vector<double> best = p;
  double best_rate = sum_rate(h, p, noise_power);
  std::vector<double> gains(k_users), noise(k_users);
  for (std::size_t round = 0; round < rounds; ++round) {
    for (std::size_t k = 0; k < k_users; ++k) {
      gains[k] = std::max(std::norm(h(k, k)), 1e-300);
      noise[k] = noise_power;
      for (std::size_t j = 0; j < k_users; ++j) {
        if (j != k) noise[k] += p[j] * std::norm(h(k, j));
      }
    }
    p = waterfill(gains, noise, budget);
    const double r = sum_rate(h, p, noise_power);
    if (r > best_rate) {
      best_rate = r;
      best = p;
    }
  }
  return best;
}

}  // namespace simforge::tasks
