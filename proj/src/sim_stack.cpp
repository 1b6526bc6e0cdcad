// SPDX-License-Identifier: Apache-2.0
#include "simforge/sim_stack.hpp"

#include <cmath>
#include <random>
#include <string>

#include "simforge/error.hpp"
#include "simforge/kernels.hpp"

namespace simforge {

PhaseProfile PhaseProfile::uniform(const std::vector<std::size_t>& layer_sizes, double phase) {
  PhaseProfile p;
  for (std::size_t n : layer_sizes) {
    p.phases.emplace_back(n, wrap_phase(phase));
    p.amplitudes.emplace_back(n, 1.0);
    p.trainable.emplace_back(n, true);
  }
  return p;
}

std::vector<std::size_t> PhaseProfile::layer_sizes() const {
  std::vector<std::size_t> s;
  for (const auto& l : phases) s.push_back(l.size());
  return s;
}

std::size_t PhaseProfile::atom_count() const {
  std::size_t n = 0;
  for (const auto& l : phases) n += l.size();
  return n;
}

std::vector<cplx> PhaseProfile::transmission(std::size_t layer) const {
  const auto& ph = phases.at(layer);
  const auto& am = amplitudes.at(layer);
  std::vector<cplx> t(ph.size());
  for (std::size_t i = 0; i < ph.size(); ++i) t[i] = std::polar(am[i], ph[i]);
  return t;
}

void PhaseProfile::validate() const {
  if (amplitudes.size() != phases.size() || trainable.size() != phases.size()) {
    throw InvalidParameter("phase profile: per-layer lists disagree in layer count");
  }
  if (codebook_bits && (*codebook_bits < 1 || *codebook_bits > 30)) {
    throw InvalidParameter("phase profile: codebook bits must be in [1, 30]");
  }
  for (std::size_t l = 0; l < phases.size(); ++l) {
    if (amplitudes[l].size() != phases[l].size() || trainable[l].size() != phases[l].size()) {
      throw InvalidParameter("phase profile: layer " + std::to_string(l) + " size mismatch");
    }
    for (std::size_t i = 0; i < phases[l].size(); ++i) {
      const double p = phases[l][i];
      if (!(p >= 0.0 && p < kTwoPi)) {
        throw InvalidParameter("phase profile: phase outside [0, 2pi) at layer " +
                               std::to_string(l) + " atom " + std::to_string(i));
      }
      const double a = amplitudes[l][i];
      if (!(a > 0.0 && a <= 1.0)) {
        throw InvalidParameter("phase profile: amplitude outside (0, 1]");
      }
      if (codebook_bits) {
        const double step = codebook_phase(1, *codebook_bits);
        const auto k = static_cast<std::uint64_t>(std::llround(p / step));
        if (k >= (std::uint64_t{1} << *codebook_bits) || codebook_phase(k, *codebook_bits) != p) {
          throw InvalidParameter("phase profile: phase is not a codebook member");
        }
      }
    }
  }
}

void PhaseProfile::freeze_layer(std::size_t layer) {
  trainable.at(layer).assign(trainable.at(layer).size(), false);
}

double wrap_phase(double phase) {
  double r = std::fmod(phase, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double codebook_phase(std::uint64_t k, int bits) {
  return std::ldexp(static_cast<double>(k) * kTwoPi, -bits);
}

PhaseProfile quantize_phases(const PhaseProfile& prof, int bits) {
  if (bits < 1 || bits > 30) throw InvalidParameter("quantize_phases: bits must be in [1, 30]");
  const std::uint64_t levels = std::uint64_t{1} << bits;
  const double step = codebook_phase(1, bits);
  PhaseProfile out = prof;
  out.codebook_bits = bits;
  for (auto& layer : out.phases) {
    for (double& p : layer) {
      auto lo = static_cast<std::uint64_t>(std::floor(p / step));
      if (lo >= levels) lo = levels - 1;
      // Guard against p / step rounding across a codebook boundary.
      while (lo > 0 && codebook_phase(lo, bits) > p) --lo;
      while (lo + 1 < levels && codebook_phase(lo + 1, bits) <= p) ++lo;
      const double d_lo = p - codebook_phase(lo, bits);
      const double d_hi = codebook_phase(lo + 1, bits) - p;
      const std::uint64_t k = d_hi < d_lo ? (lo + 1) % levels : lo;
      p = codebook_phase(k, bits);
    }
  }
  return out;
}

PhaseProfile random_profile(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PhaseProfile p = PhaseProfile::uniform(layer_sizes);
  for (auto& layer : p.phases) {
    for (double& v : layer) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      v = wrap_phase(u * kTwoPi);
    }
  }
  return p;
}

PhaseProfile random_profile(const StackGeometry& geom, std::uint64_t seed) {
  return random_profile(geom.layer_sizes(), seed);
}

// ---------------------------------------------------------------------------
// Cascade

void Cascade::push_dense(CMatrix m) {
  if (!stages_.empty() && m.cols() != output_dim()) {
    throw ShapeError("cascade: dense stage has " + std::to_string(m.cols()) +
                     " inputs, previous stage emits " + std::to_string(output_dim()));
  }
  stages_.push_back({std::move(m), -1});
}

void Cascade::push_phase(std::size_t size) {
  if (!stages_.empty() && size != output_dim()) {
    throw ShapeError("cascade: phase layer of size " + std::to_string(size) +
                     " after a stage emitting " + std::to_string(output_dim()));
  }
  stages_.push_back({CMatrix(size, 1), static_cast<int>(slot_sizes_.size())});
  slot_sizes_.push_back(size);
}

void Cascade::append(const Cascade& other) {
  for (const auto& st : other.stages_) {
    if (st.slot >= 0) {
      push_phase(other.slot_sizes_[static_cast<std::size_t>(st.slot)]);
    } else {
      push_dense(st.dense);
    }
  }
}

std::size_t Cascade::input_dim() const {
  if (stages_.empty()) throw ShapeError("cascade is empty");
  return stages_.front().slot >= 0 ? slot_sizes_[static_cast<std::size_t>(stages_.front().slot)]
                                   : stages_.front().dense.cols();
}

std::size_t Cascade::output_dim() const {
  if (stages_.empty()) throw ShapeError("cascade is empty");
  return stages_.back().slot >= 0 ? slot_sizes_[static_cast<std::size_t>(stages_.back().slot)]
                                  : stages_.back().dense.rows();
}

void Cascade::check_profile(const PhaseProfile& prof) const {
  if (prof.layer_count() != slot_sizes_.size()) {
    throw ShapeError("profile has " + std::to_string(prof.layer_count()) +
                     " layers, cascade expects " + std::to_string(slot_sizes_.size()));
  }
  for (std::size_t s = 0; s < slot_sizes_.size(); ++s) {
    if (prof.phases[s].size() != slot_sizes_[s] || prof.amplitudes.at(s).size() != slot_sizes_[s]) {
      throw ShapeError("profile layer " + std::to_string(s) + " has " +
                       std::to_string(prof.phases[s].size()) + " atoms, cascade expects " +
                       std::to_string(slot_sizes_[s]));
    }
  }
}

Cascade::Tape Cascade::forward(const PhaseProfile& prof) const {
  check_profile(prof);
  Tape tape;
  tape.slot_inputs.resize(slot_sizes_.size());
  CMatrix act;
  for (const auto& st : stages_) {
    if (st.slot < 0) {
      act = act.empty() ? st.dense : multiply(st.dense, act);
      continue;
    }
    const auto s = static_cast<std::size_t>(st.slot);
    if (act.empty()) act = CMatrix::identity(slot_sizes_[s]);
    tape.slot_inputs[s] = act;
    const auto t = prof.transmission(s);
    kernels::scale_rows(t.data(), act.data(), act.rows(), act.cols());
  }
  tape.output = std::move(act);
  return tape;
}

CMatrix Cascade::evaluate(const PhaseProfile& prof) const {
  check_profile(prof);
  CMatrix act;
  for (const auto& st : stages_) {
    if (st.slot < 0) {
      act = act.empty() ? st.dense : multiply(st.dense, act);
      continue;
    }
    const auto s = static_cast<std::size_t>(st.slot);
    if (act.empty()) act = CMatrix::identity(slot_sizes_[s]);
    const auto t = prof.transmission(s);
    kernels::scale_rows(t.data(), act.data(), act.rows(), act.cols());
  }
  return act;
}

std::vector<std::vector<double>> Cascade::backward(const Tape& tape, const PhaseProfile& prof,
                                                   const CMatrix& grad_output) const {
  check_profile(prof);
  if (grad_output.rows() != tape.output.rows() || grad_output.cols() != tape.output.cols()) {
    throw ShapeError("cascade backward: gradient shape does not match the operator");
  }
  std::vector<std::vector<double>> grads(slot_sizes_.size());
  std::size_t first_phase = stages_.size();
  for (std::size_t k = 0; k < stages_.size(); ++k) {
    if (stages_[k].slot >= 0) {
      first_phase = k;
      break;
    }
  }
  if (first_phase == stages_.size()) return grads;

  CMatrix upstream = grad_output;
  for (std::size_t k = stages_.size(); k-- > first_phase;) {
    const auto& st = stages_[k];
    if (st.slot < 0) {
      upstream = adjoint_multiply(st.dense, upstream);
      continue;
    }
    const auto s = static_cast<std::size_t>(st.slot);
    auto t = prof.transmission(s);
    const CMatrix& input = tape.slot_inputs[s];
    std::vector<cplx> r(slot_sizes_[s]);
    kernels::row_dot_conj(input.data(), upstream.data(), r.data(), input.rows(), input.cols());
    auto& g = grads[s];
    g.resize(slot_sizes_[s]);
    for (std::size_t n = 0; n < g.size(); ++n) {
      // dT/dphase_n = j t_n e_n e_n^T (through the diagonal)
      g[n] = -2.0 * (t[n] * r[n]).imag();
    }
    if (k > first_phase) {
      for (auto& v : t) v = std::conj(v);
      kernels::scale_rows(t.data(), upstream.data(), upstream.rows(), upstream.cols());
    }
  }
  return grads;
}

std::vector<CMatrix> Cascade::suffix_products(const PhaseProfile& prof) const {
  check_profile(prof);
  std::vector<CMatrix> out(slot_sizes_.size());
  CMatrix acc;
  for (std::size_t k = stages_.size(); k-- > 0;) {
    const auto& st = stages_[k];
    if (st.slot < 0) {
      acc = acc.empty() ? st.dense : multiply(acc, st.dense);
      continue;
    }
    const auto s = static_cast<std::size_t>(st.slot);
    if (acc.empty()) acc = CMatrix::identity(slot_sizes_[s]);
    out[s] = acc;
    const auto t = prof.transmission(s);
    for (std::size_t r = 0; r < acc.rows(); ++r) {
      auto row = acc.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] *= t[c];
    }
  }
  return out;
}

namespace {

// Appends [W_1,] Phi_1, W_2, Phi_2, ..., Phi_L.
void push_layers(Cascade& c, const StackGeometry& geom, const std::vector<PropagationMatrix>& mats,
                 bool include_first_propagation) {
  for (std::size_t l = 0; l < geom.layer_count(); ++l) {
    if (l > 0 || include_first_propagation) c.push_dense(mats[l].entries);
    c.push_phase(geom.layers[l].atom_count());
  }
}

}  // namespace

Cascade stack_cascade(const StackGeometry& geom) {
  const auto mats = stack_propagation(geom);
  Cascade c;
  push_layers(c, geom, mats, true);
  c.push_dense(mats.back().entries);
  return c;
}

Cascade transmit_cascade(const StackGeometry& geom) {
  const auto mats = stack_propagation(geom);
  Cascade c;
  push_layers(c, geom, mats, true);
  return c;
}

Cascade receive_cascade(const StackGeometry& geom) {
  const auto mats = stack_propagation(geom);
  Cascade c;
  push_layers(c, geom, mats, false);
  c.push_dense(mats.back().entries);
  return c;
}

TransferOperator forward_operator(const StackGeometry& geom, const PhaseProfile& prof) {
  const Cascade c = stack_cascade(geom);
  return {c.evaluate(prof)};
}

FieldVector apply_field(const TransferOperator& op, const FieldVector& x) {
  if (x.values.size() != op.matrix.cols()) {
    throw ShapeError("apply_field: field has " + std::to_string(x.values.size()) +
                     " entries, operator expects " + std::to_string(op.matrix.cols()));
  }
  return {multiply(op.matrix, std::span<const cplx>(x.values))};
}

}  // namespace simforge
