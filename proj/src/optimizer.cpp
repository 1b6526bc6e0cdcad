// SPDX-License-Identifier: Apache-2.0
#include "simforge/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "simforge/error.hpp"
#include "simforge/kernels.hpp"

namespace simforge {

std::string_view loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::matrix_fit: return "MatrixFit";
    case LossKind::interference_leakage: return "InterferenceLeakage";
    case LossKind::neg_sum_rate: return "NegSumRate";
    case LossKind::energy_routing_ce: return "EnergyRoutingCE";
  }
  return "?";
}

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

struct PayloadChecker {
  std::size_t out_dim;
  std::size_t in_dim;

  void operator()(const MatrixFitTarget& t) const {
    if (t.target.rows() != out_dim || t.target.cols() != in_dim) {
      throw ShapeError("MatrixFit target is " + shape_str(t.target.rows(), t.target.cols()) +
                       ", operator is " + shape_str(out_dim, in_dim));
    }
  }
  void operator()(const LeakageTarget&) const {
    if (out_dim != in_dim) {
      throw ShapeError("InterferenceLeakage needs a square operator, got " +
                       shape_str(out_dim, in_dim));
    }
  }
  void operator()(const SumRateTarget& t) const {
    if (out_dim != in_dim) {
      throw ShapeError("NegSumRate needs a square operator, got " + shape_str(out_dim, in_dim));
    }
    if (t.powers.size() != in_dim) throw ShapeError("NegSumRate: power vector length mismatch");
    if (!(t.noise_power > 0.0)) throw InvalidParameter("NegSumRate: noise power must be positive");
    for (double p : t.powers) {
      if (!(p >= 0.0)) throw InvalidParameter("NegSumRate: powers must be nonnegative");
    }
  }
  void operator()(const RoutingTarget& t) const {
    if (t.inputs.rows() != in_dim) {
      throw ShapeError("EnergyRoutingCE: inputs have " + std::to_string(t.inputs.rows()) +
                       " rows, operator has " + std::to_string(in_dim) + " source ports");
    }
    if (t.labels.size() != t.inputs.cols()) {
      throw ShapeError("EnergyRoutingCE: one label per input column required");
    }
    if (t.regions.empty()) throw InvalidParameter("EnergyRoutingCE: no regions");
    if (!(t.temperature > 0.0)) throw InvalidParameter("EnergyRoutingCE: temperature must be > 0");
    std::vector<bool> used(out_dim, false);
    for (const auto& r : t.regions) {
      if (r.empty()) throw InvalidParameter("EnergyRoutingCE: empty region");
      for (std::size_t p : r) {
        if (p >= out_dim) throw InvalidParameter("EnergyRoutingCE: region port out of range");
        if (used[p]) throw InvalidParameter("EnergyRoutingCE: regions overlap");
        used[p] = true;
      }
    }
    for (int l : t.labels) {
      if (l < 0 || static_cast<std::size_t>(l) >= t.regions.size()) {
        throw InvalidParameter("EnergyRoutingCE: label out of range");
      }
    }
  }
};

LossEvaluation matrix_fit(const MatrixFitTarget& t, const CMatrix& op, bool want_grad) {
  const double f2 = t.target.frobenius_norm2();
  if (!(f2 > 0.0)) throw InvalidParameter("MatrixFit: target is zero");
  const cplx beta = t.fit_scale ? best_scale(op, t.target) : cplx{1.0, 0.0};
  CMatrix resid = beta * op;
  resid -= t.target;
  LossEvaluation out;
  out.loss = resid.frobenius_norm2() / f2;
  if (want_grad) {
    // beta is stationary, so only the explicit dependence on T contributes.
    resid *= std::conj(beta) / f2;
    out.grad = std::move(resid);
  }
  return out;
}

LossEvaluation leakage(const LeakageTarget& t, const CMatrix& op, bool want_grad) {
  double off = 0.0;
  double diag = 0.0;
  for (std::size_t i = 0; i < op.rows(); ++i) {
    for (std::size_t j = 0; j < op.cols(); ++j) {
      const double e = std::norm(op(i, j));
      (i == j ? diag : off) += e;
    }
  }
  LossEvaluation out;
  if (!t.normalized) {
    out.loss = off;
    if (want_grad) {
      out.grad = op;
      for (std::size_t i = 0; i < op.rows(); ++i) out.grad(i, i) = 0.0;
    }
    return out;
  }
  out.loss = off / diag;
  if (want_grad && std::isfinite(out.loss)) {
    out.grad = op;
    out.grad *= 1.0 / diag;
    for (std::size_t i = 0; i < op.rows(); ++i) out.grad(i, i) = -op(i, i) * (off / (diag * diag));
  }
  return out;
}

LossEvaluation neg_sum_rate(const SumRateTarget& t, const CMatrix& op, bool want_grad) {
  const std::size_t k_users = op.rows();
  LossEvaluation out;
  if (want_grad) out.grad = CMatrix(op.rows(), op.cols());
  const double inv_ln2 = 1.0 / std::log(2.0);
  double rate = 0.0;
  for (std::size_t k = 0; k < k_users; ++k) {
    double total = t.noise_power;
    for (std::size_t j = 0; j < op.cols(); ++j) total += t.powers[j] * std::norm(op(k, j));
    const double interference = total - t.powers[k] * std::norm(op(k, k));
    rate += std::log2(total) - std::log2(interference);
    if (!want_grad) continue;
    for (std::size_t j = 0; j < op.cols(); ++j) {
      double coeff = t.powers[j] / total;
      if (j != k) coeff -= t.powers[j] / interference;
      out.grad(k, j) = -inv_ln2 * coeff * op(k, j);
    }
  }
  out.loss = -rate;
  return out;
}

double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

LossEvaluation routing_ce(const RoutingTarget& t, const CMatrix& op, bool want_grad) {
  const CMatrix out_fields = multiply(op, t.inputs);
  const std::size_t classes = t.regions.size();
  const std::size_t batch = t.inputs.cols();
  const auto energies = region_energies(op, t);

  LossEvaluation out;
  CMatrix g;
  if (want_grad) g = CMatrix(op.rows(), batch);
  std::vector<double> z(classes);
  std::vector<double> dz(classes);
  double total_ce = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    double tot = 0.0;
    for (std::size_t c = 0; c < classes; ++c) tot += energies[c][b];
    for (std::size_t c = 0; c < classes; ++c) z[c] = t.temperature * energies[c][b] / tot;
    const double lse = log_sum_exp(z);
    const auto label = static_cast<std::size_t>(t.labels[b]);
    total_ce += lse - z[label];
    if (!want_grad) continue;
    // dCE/dz_c = softmax_c - [c == label]; z_c = tau E_c / tot.
    double weighted = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      dz[c] = std::exp(z[c] - lse) - (c == label ? 1.0 : 0.0);
      weighted += dz[c] * energies[c][b] / tot;
    }
    const double scale = t.temperature / (tot * static_cast<double>(batch));
    for (std::size_t c = 0; c < classes; ++c) {
      const double de = scale * (dz[c] - weighted);
      for (std::size_t p : t.regions[c]) g(p, b) = de * out_fields(p, b);
    }
  }
  out.loss = total_ce / static_cast<double>(batch);
  if (want_grad) out.grad = multiply(g, t.inputs.adjoint());
  return out;
}

}  // namespace

void LossSpec::check(std::size_t out_dim, std::size_t in_dim) const {
  std::visit(PayloadChecker{out_dim, in_dim}, target);
}

cplx best_scale(const CMatrix& op, const CMatrix& target) {
  const double g2 = op.frobenius_norm2();
  if (g2 == 0.0) return {0.0, 0.0};
  return frobenius_inner(op, target) / g2;
}

std::vector<std::vector<double>> region_energies(const CMatrix& op, const RoutingTarget& t) {
  const CMatrix y = multiply(op, t.inputs);
  std::vector<std::vector<double>> e(t.regions.size(), std::vector<double>(y.cols(), 0.0));
  for (std::size_t c = 0; c < t.regions.size(); ++c) {
    for (std::size_t p : t.regions[c]) {
      const auto row = y.row(p);
      for (std::size_t b = 0; b < row.size(); ++b) e[c][b] += std::norm(row[b]);
    }
  }
  return e;
}

int predicted_class(std::span<const double> energies) {
  if (energies.empty()) throw InvalidParameter("predicted_class: no regions");
  return static_cast<int>(std::max_element(energies.begin(), energies.end()) - energies.begin());
}

double routing_accuracy(const CMatrix& op, const RoutingTarget& t) {
  LossSpec{t}.check(op.rows(), op.cols());
  const auto e = region_energies(op, t);
  std::size_t correct = 0;
  std::vector<double> col(e.size());
  for (std::size_t b = 0; b < t.labels.size(); ++b) {
    for (std::size_t c = 0; c < e.size(); ++c) col[c] = e[c][b];
    if (predicted_class(col) == t.labels[b]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(t.labels.size());
}

LossEvaluation evaluate_loss(const LossSpec& spec, const CMatrix& op, bool want_gradient) {
  spec.check(op.rows(), op.cols());
  LossEvaluation out = std::visit(
      [&](const auto& t) -> LossEvaluation {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, MatrixFitTarget>) return matrix_fit(t, op, want_gradient);
        if constexpr (std::is_same_v<T, LeakageTarget>) return leakage(t, op, want_gradient);
        if constexpr (std::is_same_v<T, SumRateTarget>) return neg_sum_rate(t, op, want_gradient);
        if constexpr (std::is_same_v<T, RoutingTarget>) return routing_ce(t, op, want_gradient);
      },
      spec.target);
  if (!std::isfinite(out.loss) || (want_gradient && !out.grad.all_finite())) {
    throw NonFiniteLoss(std::string(loss_kind_name(spec.kind())) + " evaluated to a non-finite value");
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(step_size > 0.0)) throw InvalidParameter("train: step_size must be positive");
  if (!(step_decay > 0.0 && step_decay <= 1.0)) {
    throw InvalidParameter("train: step_decay must be in (0, 1]");
  }
  if (!(tolerance > 0.0)) throw InvalidParameter("train: tolerance must be positive");
  if (!(fd_epsilon > 0.0)) throw InvalidParameter("train: fd_epsilon must be positive");
}

LossGradient loss_and_gradient(const Cascade& cascade, const PhaseProfile& prof,
                               const LossSpec& loss, GradientMode mode, double fd_epsilon) {
  cascade.check_profile(prof);
  LossGradient out;
  if (mode == GradientMode::analytic) {
    const auto tape = cascade.forward(prof);
    auto ev = evaluate_loss(loss, tape.output, true);
    out.loss = ev.loss;
    out.gradient = cascade.backward(tape, prof, ev.grad);
  } else {
    if (!(fd_epsilon > 0.0)) throw InvalidParameter("fd_epsilon must be positive");
    out.loss = evaluate_loss(loss, cascade.evaluate(prof), false).loss;
    out.gradient.resize(prof.layer_count());
    PhaseProfile probe = prof;
    for (std::size_t l = 0; l < prof.layer_count(); ++l) {
      out.gradient[l].assign(prof.phases[l].size(), 0.0);
      for (std::size_t n = 0; n < prof.phases[l].size(); ++n) {
        if (!prof.trainable[l][n]) continue;
        const double base = prof.phases[l][n];
        probe.phases[l][n] = base + fd_epsilon;
        const double up = evaluate_loss(loss, cascade.evaluate(probe), false).loss;
        probe.phases[l][n] = base - fd_epsilon;
        const double down = evaluate_loss(loss, cascade.evaluate(probe), false).loss;
        probe.phases[l][n] = base;
        out.gradient[l][n] = (up - down) / (2.0 * fd_epsilon);
      }
    }
  }
  for (std::size_t l = 0; l < out.gradient.size(); ++l) {
    if (out.gradient[l].empty()) out.gradient[l].assign(prof.phases[l].size(), 0.0);
    for (std::size_t n = 0; n < out.gradient[l].size(); ++n) {
      if (!prof.trainable[l][n]) out.gradient[l][n] = 0.0;
    }
  }
  return out;
}

LossGradient loss_and_gradient(const StackGeometry& geom, const PhaseProfile& prof,
                               const LossSpec& loss, GradientMode mode, double fd_epsilon) {
  return loss_and_gradient(stack_cascade(geom), prof, loss, mode, fd_epsilon);
}

namespace {

constexpr std::size_t kStopWindow = 10;

bool window_converged(const std::vector<double>& h, double tol) {
  if (h.size() <= kStopWindow) return false;
  const double old = h[h.size() - 1 - kStopWindow];
  const double now = h.back();
  const double denom = std::max(std::abs(old), std::numeric_limits<double>::min());
  return (old - now) / denom < tol;
}

}  // namespace

TrainReport gradient_descent(const Cascade& cascade, const PhaseProfile& init,
                             const LossSpec& loss, const TrainConfig& cfg) {
  cfg.validate();
  init.validate();
  cascade.check_profile(init);

  TrainReport report;
  report.config_echo = cfg;
  PhaseProfile current = init;
  current.codebook_bits.reset();
  LossGradient lg = loss_and_gradient(cascade, current, loss, cfg.gradient_mode, cfg.fd_epsilon);
  report.loss_history.push_back(lg.loss);
  PhaseProfile best = current;
  double best_loss = lg.loss;
  bool best_is_last = true;
  double step = cfg.step_size;

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    for (std::size_t l = 0; l < current.layer_count(); ++l) {
      for (std::size_t n = 0; n < current.phases[l].size(); ++n) {
        if (!current.trainable[l][n]) continue;
        current.phases[l][n] = wrap_phase(current.phases[l][n] - step * lg.gradient[l][n]);
      }
    }
    step *= cfg.step_decay;
    try {
      lg = loss_and_gradient(cascade, current, loss, cfg.gradient_mode, cfg.fd_epsilon);
    } catch (const NonFiniteLoss&) {
      report.diverged = true;
      break;
    }
    report.loss_history.push_back(lg.loss);
    report.iterations_run = it + 1;
    best_is_last = false;
    if (lg.loss < best_loss) {
      best_loss = lg.loss;
      best = current;
      best_is_last = true;
    }
    if (window_converged(report.loss_history, cfg.tolerance)) break;
  }
  if (!best_is_last) report.loss_history.push_back(best_loss);
  report.final_loss = report.loss_history.back();
  if (init.codebook_bits) best.codebook_bits.reset();
  report.final_profile = std::move(best);
  report.metrics["initial_loss"] = report.loss_history.front();
  return report;
}

TrainReport gradient_descent(const StackGeometry& geom, const PhaseProfile& init,
                             const LossSpec& loss, const TrainConfig& cfg) {
  return gradient_descent(stack_cascade(geom), init, loss, cfg);
}

TrainReport successive_refinement(const Cascade& cascade, const PhaseProfile& init,
                                  const LossSpec& loss, std::size_t sweeps) {
  if (!init.codebook_bits) {
    throw InvalidParameter("successive_refinement: initial profile must be quantized");
  }
  if (sweeps == 0) throw InvalidParameter("successive_refinement: sweeps must be >= 1");
  init.validate();
  cascade.check_profile(init);

  const int bits = *init.codebook_bits;
  const std::uint64_t levels = std::uint64_t{1} << bits;
  std::vector<cplx> unit_codebook(levels);
  for (std::uint64_t k = 0; k < levels; ++k) unit_codebook[k] = std::polar(1.0, codebook_phase(k, bits));

  TrainReport report;
  report.config_echo.max_iters = sweeps;
  PhaseProfile prof = init;
  CMatrix op = cascade.evaluate(prof);
  double current_loss = evaluate_loss(loss, op, false).loss;
  report.loss_history.push_back(current_loss);

  CMatrix candidate(op.rows(), op.cols());
  CMatrix best_candidate(op.rows(), op.cols());
  std::size_t changes_total = 0;
  std::size_t sweeps_run = 0;
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    ++sweeps_run;
    std::size_t changes = 0;
    // Suffixes depend only on later slots, which this sweep has not touched yet
    // when each slot is visited.
    const auto suffix = cascade.suffix_products(prof);
    CMatrix act;
    for (const auto& st : cascade.stages()) {
      if (st.slot < 0) {
        act = act.empty() ? st.dense : multiply(st.dense, act);
        continue;
      }
      const auto s = static_cast<std::size_t>(st.slot);
      if (act.empty()) act = CMatrix::identity(cascade.slot_sizes()[s]);
      const CMatrix& after = suffix[s];
      for (std::size_t n = 0; n < prof.phases[s].size(); ++n) {
        if (!prof.trainable[s][n]) continue;
        const double amp = prof.amplitudes[s][n];
        const cplx t_old = std::polar(amp, prof.phases[s][n]);
        const auto k_old = static_cast<std::uint64_t>(
            std::llround(prof.phases[s][n] / codebook_phase(1, bits)));
        std::uint64_t k_best = k_old;
        double loss_best = current_loss;
        for (std::uint64_t k = 0; k < levels; ++k) {
          if (k == k_old) continue;
          const cplx delta = amp * unit_codebook[k] - t_old;
          kernels::rank1_update(op.data(), delta, after.data() + n, after.cols(),
                                act.data() + n * act.cols(), candidate.data(), op.rows(),
                                op.cols());
          const double l = evaluate_loss(loss, candidate, false).loss;
          if (l < loss_best || (l == loss_best && k < k_best)) {
            loss_best = l;
            k_best = k;
            std::swap(candidate, best_candidate);
          }
        }
        if (k_best != k_old) {
          prof.phases[s][n] = codebook_phase(k_best, bits);
          std::swap(op, best_candidate);
          current_loss = loss_best;
          ++changes;
        }
        report.loss_history.push_back(current_loss);
      }
      const auto t = prof.transmission(s);
      kernels::scale_rows(t.data(), act.data(), act.rows(), act.cols());
    }
    changes_total += changes;
    if (changes == 0) break;
  }
  report.iterations_run = sweeps_run;
  report.final_loss = report.loss_history.back();
  report.final_profile = std::move(prof);
  report.metrics["initial_loss"] = report.loss_history.front();
  report.metrics["atom_changes"] = static_cast<double>(changes_total);
  return report;
}

TrainReport successive_refinement(const StackGeometry& geom, const PhaseProfile& init,
                                  const LossSpec& loss, std::size_t sweeps) {
  return successive_refinement(stack_cascade(geom), init, loss, sweeps);
}

}  // namespace simforge
