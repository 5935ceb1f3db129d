#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "toric/decoder_uf.hpp"
#include "toric/lattice.hpp"
#include "toric/neural.hpp"

namespace toric {

// Edges incident to at least one defect, in ascending order. These are the
// examination qubits of the preprocessing stage.
std::vector<int> candidate_qubits(const Syndrome& syn, const ToricLattice& lat);

// Maps a batch of masks to argmax Pauli classes. Ties resolve to the lowest
// class index (I, X, Y, Z order).
using MaskClassifier = std::function<std::vector<std::uint8_t>(const std::vector<MaskInput>&)>;
MaskClassifier model_classifier(const MlpModel& model);

struct PreprocessResult {
  PauliFrame partial_correction;
  Syndrome residual;
  int corrections_applied = 0;
};

// Single-pass local preprocessing: every candidate qubit is classified from
// the original syndrome snapshot; non-identity predictions enter the partial
// correction and the residual syndrome is the XOR update.
PreprocessResult ml_preprocess(const Syndrome& syn, const ToricLattice& lat, int l_input,
                               const MaskClassifier& classify);
PreprocessResult ml_preprocess(const Syndrome& syn, const MlpModel& model,
                               const ToricLattice& lat);

struct DecodeOutcome {
  PauliFrame correction;
  bool succeeded = false;  // filled by drivers that know the true error
  int ml_corrections_applied = 0;
  int defects_before = 0;
  int defects_after = 0;   // residual defects handed to the UF stage
  double ml_us = 0.0;
  double uf_us = 0.0;
  double total_us = 0.0;
};

// Two-stage decode: local preprocessing, then union-find on the residual
// syndrome. Pass a scratch decoder to reuse buffers across instances.
DecodeOutcome decode_two_stage(const Syndrome& syn, const MlpModel& model,
                               const ToricLattice& lat, UfDecoder* scratch = nullptr);

struct EffectiveRatePoint {
  double p_err = 0.0;
  double p_eff = 0.0;                 // mean residual error weight per qubit
  std::optional<double> ratio;        // p_err / p_eff, defined only when p_eff > 0
};

EffectiveRatePoint measure_effective_rate(double p_err, const MlpModel& model,
                                          const ToricLattice& lat, long trials,
                                          std::uint64_t seed);

}  // namespace toric
