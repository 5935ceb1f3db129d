#include "toric/pipeline.hpp"

#include <chrono>

#include "toric/noise.hpp"

namespace toric {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_us(Clock::time_point t0, Clock::time_point t1) {
  return std::chrono::duration<double, std::micro>(t1 - t0).count();
}

}  // namespace

std::vector<int> candidate_qubits(const Syndrome& syn, const ToricLattice& lat) {
  if ((int)syn.vertex_defects.size() != lat.n_vertices() ||
      (int)syn.plaquette_defects.size() != lat.n_plaquettes())
    throw std::invalid_argument("syndrome size does not match lattice");

  std::vector<std::uint8_t> marked(lat.n_qubits(), 0);
  const int n = lat.n_vertices();
  for (int v = 0; v < n; ++v) {
    if (syn.vertex_defects.get(v))
      for (int e : lat.vertex_edges(v)) marked[e] = 1;
    if (syn.plaquette_defects.get(v))
      for (int e : lat.plaquette_edges(v)) marked[e] = 1;
  }
  std::vector<int> out;
  for (int e = 0; e < lat.n_qubits(); ++e)
    if (marked[e]) out.push_back(e);
  return out;
}

MaskClassifier model_classifier(const MlpModel& model) {
  return [&model](const std::vector<MaskInput>& masks) {
    const auto probs = forward_batch(model, masks);
    std::vector<std::uint8_t> classes(masks.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
      int best = 0;
      for (int c = 1; c < 4; ++c)
        if (probs[i][c] > probs[i][best]) best = c;
      classes[i] = static_cast<std::uint8_t>(best);
    }
    return classes;
  };
}

PreprocessResult ml_preprocess(const Syndrome& syn, const ToricLattice& lat, int l_input,
                               const MaskClassifier& classify) {
  const std::vector<int> candidates = candidate_qubits(syn, lat);

  std::vector<MaskInput> masks;
  masks.reserve(candidates.size());
  for (const int q : candidates) masks.push_back(extract_mask(syn, lat, q, l_input));

  const std::vector<std::uint8_t> classes = classify(masks);
  if (classes.size() != candidates.size())
    throw std::runtime_error("classifier returned wrong number of classes");

  PreprocessResult res;
  res.partial_correction = PauliFrame(lat);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (classes[i] == PauliI) continue;
    res.partial_correction.set_pauli(candidates[i], classes[i]);
    ++res.corrections_applied;
  }
  res.residual = syn ^ compute_syndrome(res.partial_correction, lat);
  return res;
}

PreprocessResult ml_preprocess(const Syndrome& syn, const MlpModel& model,
                               const ToricLattice& lat) {
  if (model.config.l_input > lat.L)
    throw std::invalid_argument("model mask does not fit the lattice");
  return ml_preprocess(syn, lat, model.config.l_input, model_classifier(model));
}

DecodeOutcome decode_two_stage(const Syndrome& syn, const MlpModel& model,
                               const ToricLattice& lat, UfDecoder* scratch) {
  DecodeOutcome out;
  out.defects_before = (int)syn.defect_count();

  const auto t0 = Clock::now();
  PreprocessResult pre = ml_preprocess(syn, model, lat);
  const auto t1 = Clock::now();

  out.defects_after = (int)pre.residual.defect_count();
  out.ml_corrections_applied = pre.corrections_applied;

  PauliFrame uf_part;
  if (scratch) {
    uf_part = scratch->decode(pre.residual);
  } else {
    UfDecoder dec(lat);
    uf_part = dec.decode(pre.residual);
  }
  const auto t2 = Clock::now();

  out.correction = pre.partial_correction ^ uf_part;
  out.ml_us = elapsed_us(t0, t1);
  out.uf_us = elapsed_us(t1, t2);
  out.total_us = elapsed_us(t0, t2);
  return out;
}

EffectiveRatePoint measure_effective_rate(double p_err, const MlpModel& model,
                                          const ToricLattice& lat, long trials,
                                          std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  const NoiseSpec noise{p_err, seed};
  noise.validate();

  double weight_sum = 0.0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : weight_sum)
  for (long t = 0; t < trials; ++t) {
    const PauliFrame frame = sample_depolarizing(noise, lat, (std::uint64_t)t);
    const Syndrome syn = compute_syndrome(frame, lat);
    const PreprocessResult pre = ml_preprocess(syn, model, lat);
    weight_sum += (double)(frame ^ pre.partial_correction).weight();
  }

  EffectiveRatePoint pt;
  pt.p_err = p_err;
  pt.p_eff = weight_sum / ((double)trials * lat.n_qubits());
  if (pt.p_eff > 0.0) pt.ratio = p_err / pt.p_eff;
  return pt;
}

}  // namespace toric
