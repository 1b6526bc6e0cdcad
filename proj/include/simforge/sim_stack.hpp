// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "simforge/em_core.hpp"
#include "simforge/linalg.hpp"

namespace simforge {

// Per-atom transmission coefficients amplitude * exp(j phase), one list per
// phase layer. Layers whose `trainable` flag is false for an atom are left
// untouched by the optimizers.
struct PhaseProfile {
  std::vector<std::vector<double>> phases;
  std::vector<std::vector<double>> amplitudes;
  std::vector<std::vector<bool>> trainable;
  std::optional<int> codebook_bits;

  // All phases `phase`, unit amplitudes, everything trainable.
  static PhaseProfile uniform(const std::vector<std::size_t>& layer_sizes, double phase = 0.0);

  std::size_t layer_count() const { return phases.size(); }
  std::vector<std::size_t> layer_sizes() const;
  std::size_t atom_count() const;
  std::vector<cplx> transmission(std::size_t layer) const;

  // Throws InvalidParameter when a phase, amplitude or codebook invariant fails.
  void validate() const;
  void freeze_layer(std::size_t layer);

  friend bool operator==(const PhaseProfile&, const PhaseProfile&) = default;
};

// Wraps any real phase onto [0, 2pi).
double wrap_phase(double phase);
// Member k of the b-bit codebook {2 pi k / 2^b}.
double codebook_phase(std::uint64_t k, int bits);

// Snaps every phase to the nearest b-bit codebook member, ties toward the
// smaller index. Amplitudes are kept.
PhaseProfile quantize_phases(const PhaseProfile& prof, int bits);

// I.i.d. uniform phases on [0, 2pi), unit amplitudes.
PhaseProfile random_profile(const StackGeometry& geom, std::uint64_t seed);
PhaseProfile random_profile(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);

struct TransferOperator {
  CMatrix matrix;  // observation ports x source ports
};

struct FieldVector {
  std::vector<cplx> values;
};

// A product M_K ... M_1 of dense propagation matrices and diagonal phase
// layers ("slots"). Slot s is driven by layer s of a PhaseProfile.
class Cascade {
 public:
  void push_dense(CMatrix m);
  void push_phase(std::size_t size);
  // Appends the stages of `other`, renumbering its slots after ours.
  void append(const Cascade& other);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t slot_count() const { return slot_sizes_.size(); }
  const std::vector<std::size_t>& slot_sizes() const { return slot_sizes_; }

  void check_profile(const PhaseProfile& prof) const;
  CMatrix evaluate(const PhaseProfile& prof) const;

  // Forward pass that keeps the input of every phase slot.
  struct Tape {
    std::vector<CMatrix> slot_inputs;  // indexed by slot
    CMatrix output;
  };
  Tape forward(const PhaseProfile& prof) const;

  // Given dL/d(conj T) for T = evaluate(prof), returns dL/dphase per slot
  // for the convention dL = 2 Re sum conj(G) .* dT.
  std::vector<std::vector<double>> backward(const Tape& tape, const PhaseProfile& prof,
                                            const CMatrix& grad_output) const;

  // For each slot s: product of all stages after slot s (output_dim x size_s).
  std::vector<CMatrix> suffix_products(const PhaseProfile& prof) const;

  struct Stage {
    CMatrix dense;
    int slot = -1;  // >= 0 for a diagonal phase layer
  };
  const std::vector<Stage>& stages() const { return stages_; }

 private:
  std::vector<Stage> stages_;
  std::vector<std::size_t> slot_sizes_;
};

// W_1, Phi_1, W_2, ..., Phi_L, W_out.
Cascade stack_cascade(const StackGeometry& geom);
// Source ports -> field leaving layer L (no W_out).
Cascade transmit_cascade(const StackGeometry& geom);
// Field arriving on layer 1 -> observation ports (no W_1).
Cascade receive_cascade(const StackGeometry& geom);

TransferOperator forward_operator(const StackGeometry& geom, const PhaseProfile& prof);
FieldVector apply_field(const TransferOperator& op, const FieldVector& x);

}  // namespace simforge
