#include "toric/noise.hpp"

namespace toric {

PauliFrame sample_depolarizing(const NoiseSpec& spec, const ToricLattice& lat,
                               std::uint64_t stream_index) {
  spec.validate();
  PauliFrame frame(lat);
  if (spec.p_err == 0.0) return frame;
  Philox rng(spec.seed, stream_index);
  const double p = spec.p_err;
  const double t1 = p / 3.0, t2 = 2.0 * p / 3.0;
  const int n = lat.n_qubits();
  for (int q = 0; q < n; ++q) {
    const double u = rng.next_double();
    if (u >= p) continue;
    if (u < t1)
      frame.set_pauli(q, PauliX);
    else if (u < t2)
      frame.set_pauli(q, PauliY);
    else
      frame.set_pauli(q, PauliZ);
  }
  return frame;
}

std::uint64_t enumeration_size(const ToricLattice& lat, int max_weight) {
  const std::uint64_t n = lat.n_qubits();
  std::uint64_t total = 0;
  // term for weight w: C(n,w) * 3^w, built incrementally
  long double term = 1.0L;
  for (int w = 0; w <= max_weight; ++w) {
    if (w > 0) term = term * 3.0L * (long double)(n - w + 1) / (long double)w;
    const long double next = (long double)total + term;
    if (next > (long double)UINT64_MAX) return UINT64_MAX;
    total = (std::uint64_t)next;
  }
  return total;
}

namespace {

void enumerate_rec(const ToricLattice& lat, PauliFrame& frame, int first_q, int remaining,
                   const std::function<void(const PauliFrame&)>& visit) {
  visit(frame);
  if (remaining == 0) return;
  const int n = lat.n_qubits();
  for (int q = first_q; q < n; ++q) {
    for (int cls = PauliX; cls <= PauliZ; ++cls) {
      frame.set_pauli(q, cls);
      enumerate_rec(lat, frame, q + 1, remaining - 1, visit);
    }
    frame.set_pauli(q, PauliI);
  }
}

}  // namespace

void enumerate_errors(const ToricLattice& lat, int max_weight, std::uint64_t cap,
                      const std::function<void(const PauliFrame&)>& visit) {
  if (max_weight < 0) throw std::invalid_argument("max_weight must be >= 0");
  const std::uint64_t count = enumeration_size(lat, max_weight);
  if (count > cap) throw std::invalid_argument("enumeration exceeds configured cap");
  PauliFrame frame(lat);
  enumerate_rec(lat, frame, 0, max_weight, visit);
}

std::vector<PauliFrame> collect_errors(const ToricLattice& lat, int max_weight,
                                       std::uint64_t cap) {
  std::vector<PauliFrame> out;
  out.reserve(enumeration_size(lat, max_weight));
  enumerate_errors(lat, max_weight, cap, [&](const PauliFrame& f) { out.push_back(f); });
  return out;
}

}  // namespace toric
