// SPDX-License-Identifier: Apache-2.0
#include "simforge/tasks/assignment.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "simforge/error.hpp"

namespace simforge::tasks {

std::uint64_t assignment_count(std::uint64_t m, std::uint64_t k) {
  if (k > m) throw InvalidParameter("assignment_count: K exceeds M");
  std::uint64_t count = 1;
  for (std::uint64_t i = m - k + 1; i <= m; ++i) {
    if (count > std::numeric_limits<std::uint64_t>::max() / i) {
      throw TooLarge("assignment_count: P(" + std::to_string(m) + "," + std::to_string(k) +
                     ") overflows 64 bits");
    }
    count *= i;
  }
  return count;
}

void AssignmentProblem::validate() const {
  const std::size_t m = antennas();
  const std::size_t k = users();
  if (k == 0 || m < k) throw InvalidParameter("assignment: need M >= K >= 1");
  for (const auto& row : gain) {
    if (row.size() != k) throw InvalidParameter("assignment: ragged gain matrix");
    for (double g : row) {
      if (!(g >= 0.0) || !std::isfinite(g)) {
        throw InvalidParameter("assignment: gains must be finite and nonnegative");
      }
    }
  }
}

namespace {

struct Enumerator {
  const AssignmentProblem& problem;
  std::vector<std::size_t> current;
  std::vector<bool> used;
  Assignment best;
  bool have_best = false;

  void visit(std::size_t user, double value) {
    if (user == problem.users()) {
      if (!have_best || value > best.objective) {
        best = {current, value};
        have_best = true;
      }
      return;
    }
    for (std::size_t a = 0; a < problem.antennas(); ++a) {
      if (used[a]) continue;
      used[a] = true;
      current[user] = a;
      visit(user + 1, value + problem.gain[a][user]);
      used[a] = false;
    }
  }
};

Assignment greedy(const AssignmentProblem& p) {
  const std::size_t m = p.antennas();
  const std::size_t k = p.users();
  std::vector<bool> antenna_used(m, false);
  std::vector<bool> user_done(k, false);
  Assignment out{std::vector<std::size_t>(k, 0), 0.0};
  for (std::size_t step = 0; step < k; ++step) {
    double best = -1.0;
    std::size_t ba = 0, bu = 0;
    for (std::size_t a = 0; a < m; ++a) {
      if (antenna_used[a]) continue;
      for (std::size_t u = 0; u < k; ++u) {
        if (user_done[u]) continue;
        if (p.gain[a][u] > best) {
          best = p.gain[a][u];
          ba = a;
          bu = u;
        }
      }
    }
    antenna_used[ba] = true;
    user_done[bu] = true;
    out.antenna_of_user[bu] = ba;
  }
  // Summed in user order, as the enumeration does, so equal maps give equal bits.
  for (std::size_t u = 0; u < k; ++u) out.objective += p.gain[out.antenna_of_user[u]][u];
  return out;
}

}  // namespace

Assignment assign_antennas(const AssignmentProblem& problem, AssignmentMethod method) {
  problem.validate();
  if (method == AssignmentMethod::greedy) return greedy(problem);
  std::uint64_t count = 0;
  try {
    count = assignment_count(problem.antennas(), problem.users());
  } catch (const TooLarge&) {
    count = std::numeric_limits<std::uint64_t>::max();
  }
  if (count > kExhaustiveLimit) {
    throw TooLarge("assign_antennas: " + std::to_string(count) +
                   " candidate maps exceed the exhaustive limit");
  }
  Enumerator e{problem, std::vector<std::size_t>(problem.users(), 0),
               std::vector<bool>(problem.antennas(), false), {}, false};
  e.visit(0, 0.0);
  return e.best;
}

}  // namespace simforge::tasks
