// SPDX-License-Identifier: Apache-2.0
#include "simforge/tasks/sum_rate_task.hpp"

#include "simforge/error.hpp"
#include "simforge/tasks/power.hpp"

namespace simforge::tasks {

SumRateResult optimize_sum_rate(const StackGeometry& geom, const CMatrix& user_channel,
                                const TrainConfig& cfg, const SumRateOptions& opts) {
  if (opts.rounds == 0) throw InvalidParameter("optimize_sum_rate: rounds must be >= 1");
  Cascade cascade = transmit_cascade(geom);
  cascade.push_dense(user_channel);
  if (cascade.output_dim() != cascade.input_dim()) {
    throw ShapeError("optimize_sum_rate: user count must equal the number of streams");
  }

  PhaseProfile prof = random_profile(cascade.slot_sizes(), cfg.seed);
  if (opts.codebook_bits) prof = quantize_phases(prof, *opts.codebook_bits);

  SumRateResult out;
  CMatrix h = cascade.evaluate(prof);
  std::vector<double> powers(h.rows(), opts.power_budget / static_cast<double>(h.rows()));
  out.initial_sum_rate = sum_rate(h, powers, opts.noise_power);
  out.report.config_echo = cfg;

  for (std::size_t round = 0; round < opts.rounds; ++round) {
    powers = iterative_waterfill(h, opts.noise_power, opts.power_budget);
    const LossSpec loss{SumRateTarget{powers, opts.noise_power}};
    TrainReport step = opts.codebook_bits
                           ? successive_refinement(cascade, prof, loss, opts.refinement_sweeps)
                           : gradient_descent(cascade, prof, loss, cfg);
    out.report.loss_history.insert(out.report.loss_history.end(), step.loss_history.begin(),
                                   step.loss_history.end());
    out.report.iterations_run += step.iterations_run;
    if (step.diverged) {
      out.report.diverged = true;
      break;
    }
    prof = step.final_profile;
    h = cascade.evaluate(prof);
  }
  // The last phase update was made for the previous allocation; re-fill once
  // more and keep whichever allocation rates higher.
  const auto refill = iterative_waterfill(h, opts.noise_power, opts.power_budget);
  if (sum_rate(h, refill, opts.noise_power) > sum_rate(h, powers, opts.noise_power)) {
    powers = refill;
  }

  out.powers = powers;
  out.sum_rate = sum_rate(h, powers, opts.noise_power);
  out.effective_channel = h;
  out.report.loss_history.push_back(-out.sum_rate);
  out.report.final_loss = -out.sum_rate;
  out.report.final_profile = prof;
  out.report.metrics["sum_rate"] = out.sum_rate;
  out.report.metrics["initial_sum_rate"] = out.initial_sum_rate;
  return out;
}

}  // namespace simforge::tasks
