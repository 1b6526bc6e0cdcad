// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace simforge::tasks {

// Number of injective user -> antenna maps, M! / (M - K)!.
// Throws InvalidParameter for K > M and TooLarge on 64-bit overflow.
std::uint64_t assignment_count(std::uint64_t m, std::uint64_t k);

// gain[a][u]: affinity of antenna a for user u, M x K with M >= K >= 1.
struct AssignmentProblem {
  std::vector<std::vector<double>> gain;

  std::size_t antennas() const { return gain.size(); }
  std::size_t users() const { return gain.empty() ? 0 : gain.front().size(); }
  void validate() const;
};

enum class AssignmentMethod { exhaustive, greedy };

inline constexpr std::uint64_t kExhaustiveLimit = 1'000'000;

struct Assignment {
  std::vector<std::size_t> antenna_of_user;
  double objective = 0.0;
};

// Exhaustive enumeration keeps the first optimum in lexicographic order of
// antenna_of_user and refuses problems with more than kExhaustiveLimit maps.
// Greedy repeatedly takes the largest remaining (antenna, user) gain, ties to
// the smallest (antenna, user).
Assignment assign_antennas(const AssignmentProblem& problem, AssignmentMethod method);

}  // namespace simforge::tasks
