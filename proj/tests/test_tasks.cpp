// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "doctest.h"
#include "simforge/error.hpp"
#include "simforge/tasks/assignment.hpp"
#include "simforge/tasks/channels.hpp"
#include "simforge/tasks/dft_doa.hpp"
#include "simforge/tasks/mimo.hpp"
#include "simforge/tasks/power.hpp"
#include "simforge/tasks/routing.hpp"
#include "simforge/tasks/sum_rate_task.hpp"

using namespace simforge;
using namespace simforge::tasks;

namespace {

// Scans the water level on a 1e-6 grid and keeps the level whose total power
// lands closest to the budget.
std::vector<double> kkt_grid(const std::vector<double>& g, const std::vector<double>& n, double p) {
  double top = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) top = std::max(top, n[k] / g[k]);
  top += p;
  double best_mu = 0.0, best_gap = 1e300;
  const auto steps = static_cast<long>(top / 1e-6) + 1;
  for (long i = 0; i <= steps; ++i) {
    const double mu = static_cast<double>(i) * 1e-6;
    double total = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) total += std::max(0.0, mu - n[k] / g[k]);
    const double gap = std::abs(total - p);
    if (gap < best_gap) {
      best_gap = gap;
      best_mu = mu;
    }
  }
  std::vector<double> out;
  for (std::size_t k = 0; k < g.size(); ++k) out.push_back(std::max(0.0, best_mu - n[k] / g[k]));
  return out;
}

double brute_force_assignment(const std::vector<std::vector<double>>& gain) {
  const std::size_t m = gain.size(), k = gain[0].size();
  std::vector<bool> used(m, false);
  double best = -1.0;
  std::function<void(std::size_t, double)> rec = [&](std::size_t u, double acc) {
    if (u == k) {
      best = std::max(best, acc);
      return;
    }
    for (std::size_t a = 0; a < m; ++a) {
      if (used[a]) continue;
      used[a] = true;
      rec(u + 1, acc + gain[a][u]);
      used[a] = false;
    }
  };
  rec(0, 0.0);
  return best;
}

StackGeometry dft_geometry(std::size_t layers, std::size_t n) {
  return StackGeometry::uniform(28e9, layers, n, n, 0.5, 1.0, grid_points(n, n, 0.5, 0.0),
                                grid_points(n, n, 0.5, 0.0));
}

}  // namespace

TEST_CASE("waterfill closed examples") {
  const std::vector<double> two{1.0, 1.0};
  const auto p = waterfill(two, two, 2.0);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 1.0);
  const std::vector<double> one{0.3}, noise1{2.0};
  CHECK(waterfill(one, noise1, 4.5)[0] == doctest::Approx(4.5).epsilon(1e-15));
  const std::vector<double> empty;
  CHECK_THROWS_AS(waterfill(empty, empty, 1.0), InvalidParameter);
  const std::vector<double> bad{1.0, -1.0};
  CHECK_THROWS_AS(waterfill(bad, two, 1.0), InvalidParameter);
  CHECK_THROWS_AS(waterfill(two, two, 0.0), InvalidParameter);
}

TEST_CASE("waterfill matches the KKT grid oracle") {
  const std::vector<double> g{1.0, 0.5, 0.1}, n{1.0, 1.0, 1.0};
  const auto p = waterfill(g, n, 1.0);
  const auto ref = kkt_grid(g, n, 1.0);
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(p[k] - ref[k]) < 1e-5);
  CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) < 1e-9);
  CHECK(p[2] == 0.0);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> gain(0.1, 2.0), noise(0.1, 1.0), budget(0.1, 3.0);
  for (int t = 0; t < 5; ++t) {
    std::vector<double> gg(4), nn(4);
    for (auto& v : gg) v = gain(rng);
    for (auto& v : nn) v = noise(rng);
    const double b = budget(rng);
    const auto pw = waterfill(gg, nn, b);
    const auto oracle = kkt_grid(gg, nn, b);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(pw[k] >= 0.0);
      CHECK(std::abs(pw[k] - oracle[k]) < 1e-5);
    }
    CHECK(std::abs(std::accumulate(pw.begin(), pw.end(), 0.0) - b) < 1e-9);
  }
}

TEST_CASE("sum rate examples and direct re-evaluation") {
  const CMatrix eye = CMatrix::identity(2);
  const std::vector<double> ones{1.0, 1.0}, zeros{0.0, 0.0};
  CHECK(sum_rate(eye, ones, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(sum_rate(eye, zeros, 1.0) == 0.0);
  CHECK_THROWS_AS(sum_rate(CMatrix(2, 3), ones, 1.0), ShapeError);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd(0.0, 1.0);
  CMatrix h(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) h(i, j) = {nd(rng), nd(rng)};
  const std::vector<double> pw{0.7, 1.3, 0.2};
  const double s2 = 0.4;
  long double ref = 0.0L;
  for (std::size_t k = 0; k < 3; ++k) {
    long double interf = s2;
    for (std::size_t j = 0; j < 3; ++j)
      if (j != k) interf += pw[j] * std::norm(h(k, j));
    ref += std::log2(1.0L + pw[k] * std::norm(h(k, k)) / interf);
  }
  CHECK(sum_rate(h, pw, s2) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-13));
  const LossSpec spec{SumRateTarget{pw, s2}};
  CHECK(evaluate_loss(spec, h, false).loss == doctest::Approx(-static_cast<double>(ref)).epsilon(1e-13));
}

TEST_CASE("iterative waterfill respects the budget and never loses to equal split") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 1.0);
  CMatrix h(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) h(i, j) = cplx{nd(rng), nd(rng)} * (i == j ? 1.0 : 0.2);
  const auto p = iterative_waterfill(h, 0.1, 3.0, 10);
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) <= 3.0 + 1e-9);
  const std::vector<double> equal(3, 1.0);
  CHECK(sum_rate(h, p, 0.1) >= sum_rate(h, equal, 0.1) - 1e-12);
}

TEST_CASE("assignment counts") {
  CHECK(assignment_count(4, 2) == 12);
  CHECK(assignment_count(7, 0) == 1);
  CHECK(assignment_count(10, 10) == 3628800);
  CHECK_THROWS_AS(assignment_count(2, 3), InvalidParameter);
  CHECK_THROWS_AS(assignment_count(100, 60), TooLarge);
}

TEST_CASE("assignment on the worked 3x2 instance") {
  const AssignmentProblem prob{{{2, 0}, {0, 1}, {1, 1}}};
  const auto ex = assign_antennas(prob, AssignmentMethod::exhaustive);
  CHECK(ex.objective == 3.0);
  CHECK(ex.antenna_of_user[0] == 0);
  CHECK((ex.antenna_of_user[1] == 1 || ex.antenna_of_user[1] == 2));
  const auto gr = assign_antennas(prob, AssignmentMethod::greedy);
  CHECK(gr.objective <= ex.objective);
  CHECK(gr.antenna_of_user[0] == 0);
}

TEST_CASE("assignment: single user, random instances, size guard") {
  const AssignmentProblem single{{{0.1}, {0.9}, {0.4}}};
  CHECK(assign_antennas(single, AssignmentMethod::exhaustive).antenna_of_user[0] == 1);
  CHECK(assign_antennas(single, AssignmentMethod::greedy).antenna_of_user[0] == 1);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = 3 + static_cast<std::size_t>(t % 4);
    const std::size_t k = 1 + static_cast<std::size_t>(t % 3);
    AssignmentProblem p{std::vector<std::vector<double>>(m, std::vector<double>(k))};
    for (auto& row : p.gain)
      for (auto& v : row) v = u(rng);
    const auto ex = assign_antennas(p, AssignmentMethod::exhaustive);
    const auto gr = assign_antennas(p, AssignmentMethod::greedy);
    CHECK(ex.objective == doctest::Approx(brute_force_assignment(p.gain)).epsilon(1e-15));
    CHECK(gr.objective <= ex.objective + 1e-15);
    std::vector<std::size_t> ants = ex.antenna_of_user;
    std::sort(ants.begin(), ants.end());
    CHECK(std::adjacent_find(ants.begin(), ants.end()) == ants.end());
  }
  AssignmentProblem big{std::vector<std::vector<double>>(12, std::vector<double>(8, 1.0))};
  CHECK_THROWS_AS(assign_antennas(big, AssignmentMethod::exhaustive), TooLarge);
  CHECK_NOTHROW(assign_antennas(big, AssignmentMethod::greedy));
  AssignmentProblem wide{std::vector<std::vector<double>>(2, std::vector<double>(3, 1.0))};
  CHECK_THROWS_AS(assign_antennas(wide, AssignmentMethod::greedy), InvalidParameter);
}

TEST_CASE("greedy ties go to the smallest antenna, then user") {
  const AssignmentProblem p{{{1, 1}, {1, 1}, {1, 1}}};
  const auto gr = assign_antennas(p, AssignmentMethod::greedy);
  CHECK(gr.antenna_of_user[0] == 0);
  CHECK(gr.antenna_of_user[1] == 1);
}

TEST_CASE("channel models") {
  const auto pts = grid_points(4, 4, 0.5 * 0.0107, 0.0);
  const auto f = plane_wave_field(pts, 0.3, -0.2, 0.0107);
  for (const auto& v : f) CHECK(std::abs(v) == doctest::Approx(1.0).epsilon(1e-15));

  const auto h = rayleigh_channel(200, 200, 2.5, 4);
  cplx mean{};
  double power = 0.0;
  cplx pseudo{};
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t j = 0; j < 200; ++j) {
      mean += h(i, j);
      power += std::norm(h(i, j));
      pseudo += h(i, j) * h(i, j);
    }
  const double n = 40000.0;
  CHECK(std::abs(mean / n) < 0.03);
  CHECK(power / n == doctest::Approx(2.5).epsilon(0.03));
  CHECK(std::abs(pseudo / n) < 0.1);
  CHECK(rayleigh_channel(3, 3, 1.0, 9) == rayleigh_channel(3, 3, 1.0, 9));

  for (double az : {-0.5, 0.0, 0.4})
    for (double el : {-0.3, 0.0, 0.6}) {
      double a2 = 0.0, e2 = 0.0;
      angles_from_sines(direction_sines(az, el), a2, e2);
      CHECK(a2 == doctest::Approx(az).epsilon(1e-12));
      CHECK(e2 == doctest::Approx(el).epsilon(1e-12));
    }
}

TEST_CASE("2D DFT matrix is unitary") {
  for (auto [r, c] : {std::pair<std::size_t, std::size_t>{4, 4}, {3, 5}, {10, 10}}) {
    const auto f = dft2_matrix(r, c);
    const auto gram = adjoint_multiply(f, f);
    CHECK(max_relative_difference(gram, CMatrix::identity(r * c), 1.0) < 1e-10);
  }
}

TEST_CASE("fit_dft: shapes, zero error at a reachable target, scale from the scan") {
  auto g = dft_geometry(2, 3);
  TrainConfig cfg;
  cfg.max_iters = 5;
  const auto rep = fit_dft(g, cfg);
  CHECK(rep.metrics.at("normalized_fit_error") == rep.final_loss);
  CHECK(rep.final_loss <= rep.loss_history.front());
  auto bad = g;
  bad.observation_points.pop_back();
  CHECK_THROWS_AS(fit_dft(bad, cfg), ShapeError);

  const auto op = forward_operator(g, random_profile(g, 3)).matrix;
  const auto f = dft2_matrix(3, 3);
  const cplx beta = best_scale(op, f);
  auto obj = [&](cplx b) { return (b * op - f).frobenius_norm2() / f.frobenius_norm2(); };
  double scan_best = 1e300;
  cplx scan_arg;
  const double span = 4.0 * std::abs(beta);
  for (int i = -400; i <= 400; ++i)
    for (int j = -400; j <= 400; ++j) {
      const cplx b{span * i / 400.0, span * j / 400.0};
      if (obj(b) < scan_best) {
        scan_best = obj(b);
        scan_arg = b;
      }
    }
  CHECK(obj(beta) <= scan_best);
  CHECK(std::abs(scan_arg - beta) <= 2.0 * span / 400.0);
  CHECK(evaluate_loss({MatrixFitTarget{f, true}}, op, false).loss == doctest::Approx(obj(beta)));
}

TEST_CASE("a short DFT fit on the 10x10 two-layer stack lowers the loss") {
  const auto g = dft_geometry(2, 10);
  TrainConfig cfg;
  cfg.max_iters = 15;
  cfg.step_size = 100.0;
  int improved = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    cfg.seed = seed;
    const auto rep = fit_dft(g, cfg);
    if (rep.final_loss < rep.loss_history.front()) ++improved;
  }
  CHECK(improved >= 19);
}

TEST_CASE("DOA with the ideal DFT operator") {
  const std::size_t n = 8;
  const auto g = dft_geometry(1, n);
  const BeamGrid grid = BeamGrid::from_geometry(g);
  const auto f = dft2_matrix(n, n);

  DoaOptions one;
  const auto dc = doa_estimate(f, grid, g.source_points, {{0.0, 0.0, 1.0}}, one);
  REQUIRE(dc.bin_indices.size() == 1);
  CHECK(dc.bin_indices[0] == 0);
  CHECK(dc.angles[0].first == 0.0);
  CHECK(dc.angles[0].second == 0.0);

  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> bin(0, n - 1);
  for (std::size_t k = 1; k <= 3; ++k) {
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<std::size_t> chosen;
      std::vector<PlaneWaveSource> src;
      while (chosen.size() < k) {
        const std::size_t p = bin(rng), q = bin(rng);
        const std::size_t idx = p * n + q;
        if (std::find(chosen.begin(), chosen.end(), idx) != chosen.end()) continue;
        const auto s = bin_center(grid, p, q);
        if (s.u_row * s.u_row + s.v_col * s.v_col >= 1.0) continue;
        double az = 0.0, el = 0.0;
        angles_from_sines(s, az, el);
        chosen.push_back(idx);
        src.push_back({az, el, 1.0 + 0.1 * static_cast<double>(chosen.size())});
      }
      DoaOptions opts;
      opts.num_sources = k;
      const auto est = doa_estimate(f, grid, g.source_points, src, opts);
      auto got = est.bin_indices;
      std::sort(got.begin(), got.end());
      std::sort(chosen.begin(), chosen.end());
      CHECK(got == chosen);
      CHECK(angular_mse(est.angles, src) < 1e-20);
      for (double v : est.spectrum) CHECK(v >= 0.0);
    }
  }
  DoaOptions too_many;
  too_many.num_sources = n * n + 1;
  CHECK_THROWS_AS(doa_estimate(f, grid, g.source_points, {{0.0, 0.0, 1.0}}, too_many),
                  InvalidParameter);
}

TEST_CASE("DOA snapshots refine the spectrum grid") {
  const std::size_t n = 6;
  const auto g = dft_geometry(1, n);
  const BeamGrid grid = BeamGrid::from_geometry(g);
  const auto f = dft2_matrix(n, n);
  // A source midway between coarse bins lands exactly on a refined bin at m = 2.
  const auto s = bin_center(grid, 3, 5, 2);
  double az = 0.0, el = 0.0;
  angles_from_sines(s, az, el);
  DoaOptions opts;
  opts.snapshots = 4;
  const auto est = doa_estimate(f, grid, g.source_points, {{az, el, 1.0}}, opts);
  CHECK(est.refinement == 2);
  CHECK(est.spectrum_rows == 12);
  CHECK(est.bin_indices[0] == 3 * 12 + 5);
  CHECK(angular_mse(est.angles, {{az, el, 1.0}}) < 1e-20);
  DoaOptions single;
  const auto coarse = doa_estimate(f, grid, g.source_points, {{az, el, 1.0}}, single);
  CHECK(angular_mse(coarse.angles, {{az, el, 1.0}}) > 0.0);
}

TEST_CASE("top-k peaks: plateaus and ties resolve to lower indices") {
  const std::vector<double> flat(9, 1.0);
  CHECK(top_k_peaks(flat, 3, 3, 2) == std::vector<std::size_t>{0, 1});
  const std::vector<double> two{0, 5, 0, 0, 0, 0, 0, 5, 0, 0, 0, 0};
  CHECK(top_k_peaks(two, 3, 4, 2) == std::vector<std::size_t>{1, 7});
  // A shoulder two cells from the main peak is a 3x3 maximum but not a 5x5 one.
  std::vector<double> lobe(36, 0.0);
  lobe[2 * 6 + 2] = 10.0;
  lobe[2 * 6 + 4] = 2.0;
  lobe[5 * 6 + 5] = 1.0;
  CHECK(top_k_peaks(lobe, 6, 6, 2, 1) == std::vector<std::size_t>{14, 16});
  CHECK(top_k_peaks(lobe, 6, 6, 2, 2) == std::vector<std::size_t>{14, 35});
  CHECK_THROWS_AS(top_k_peaks(lobe, 6, 6, 1, 0), InvalidParameter);
}

TEST_CASE("routing: argmax rule, quadrant dataset, trivial class") {
  const std::vector<double> e{0.1, 0.7, 0.2};
  CHECK(predicted_class(e) == 1);
  const auto regions = quadrant_regions(8, 8);
  REQUIRE(regions.size() == 4);
  for (const auto& r : regions) CHECK(r.size() == 16);
  const auto pts = grid_points(8, 8, 0.5 * 0.0107, 0.0);
  const auto ds = quadrant_beam_dataset(pts, 0.0107, 5, 1);
  CHECK(ds.inputs.cols() == 20);
  CHECK(ds.labels.size() == 20);
  CHECK(quadrant_beam_dataset(pts, 0.0107, 5, 1).inputs == ds.inputs);
  for (std::size_t c = 0; c < 4; ++c) CHECK(ds.labels[c] == static_cast<int>(c));
}

TEST_CASE("routing training on a small stack reaches high training accuracy") {
  const auto g = StackGeometry::uniform(28e9, 2, 8, 8, 0.5, 1.0, grid_points(8, 8, 0.5, 0.0),
                                        grid_points(8, 8, 0.5, 0.0));
  const auto regions = quadrant_regions(8, 8);
  const auto train = quadrant_beam_dataset(g.source_points, g.wavelength.lambda_m(), 10, 7);
  TrainConfig cfg;
  cfg.max_iters = 100;
  cfg.step_size = 2.0;
  cfg.seed = 3;
  const auto rep = energy_routing_train(g, regions, train, cfg);
  CHECK(rep.final_loss < rep.loss_history.front());
  CHECK(rep.metrics.at("train_accuracy") >= 0.75);
}

TEST_CASE("MIMO: one stream has nothing to leak and leakage is homogeneous") {
  const auto tx = StackGeometry::uniform(28e9, 1, 3, 3, 0.5, 1.0, line_points(1, 0.5, 0.0),
                                         line_points(1, 0.5, 0.0));
  ChannelModel ch;
  ch.link_distance_m = 10 * tx.wavelength.lambda_m();
  TrainConfig cfg;
  cfg.max_iters = 10;
  const auto res = diagonalize_mimo(tx, tx, ch, cfg);
  CHECK(res.report.final_loss == 0.0);
  CHECK(res.trained_channel.rows() == 1);

  const auto tx5 = StackGeometry::uniform(28e9, 1, 3, 3, 0.5, 1.0, line_points(3, 0.5, 0.0),
                                          line_points(3, 0.5, 0.0));
  const auto h = link_channel(tx5, tx5, ch);
  const CMatrix h2 = cplx{3.0, 0.0} * h;
  const auto c1 = mimo_cascade(tx5, tx5, h);
  const auto c2 = mimo_cascade(tx5, tx5, h2);
  for (int t = 0; t < 5; ++t) {
    const auto joint = random_profile(std::vector<std::size_t>{9, 9}, static_cast<std::uint64_t>(t));
    const double l1 = evaluate_loss({LeakageTarget{}}, c1.evaluate(joint), false).loss;
    const double l2 = evaluate_loss({LeakageTarget{}}, c2.evaluate(joint), false).loss;
    CHECK(l2 == doctest::Approx(9.0 * l1).epsilon(1e-12));
  }
}

TEST_CASE("sum-rate task improves over its start and stays within budget") {
  const auto g = StackGeometry::uniform(28e9, 2, 4, 4, 0.5, 1.0, line_points(3, 0.5, 0.0),
                                        line_points(3, 0.5, 0.0));
  const auto users = rayleigh_channel(3, 16, 1.0, 11);
  TrainConfig cfg;
  cfg.max_iters = 40;
  cfg.step_size = 0.5;
  SumRateOptions opts;
  opts.noise_power = 1e-3;
  opts.power_budget = 1.0;
  const auto res = optimize_sum_rate(g, users, cfg, opts);
  CHECK(res.sum_rate >= res.initial_sum_rate);
  CHECK(std::accumulate(res.powers.begin(), res.powers.end(), 0.0) <= 1.0 + 1e-9);
  opts.codebook_bits = 2;
  const auto disc = optimize_sum_rate(g, users, cfg, opts);
  CHECK(disc.sum_rate >= disc.initial_sum_rate);
  CHECK_NOTHROW(disc.report.final_profile.validate());
}
