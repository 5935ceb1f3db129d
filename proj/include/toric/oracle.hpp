#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "toric/lattice.hpp"

namespace toric {

// Brute-force ground-truth decoders for tests. Deliberately unoptimized; they
// never sit on the production path.

struct MwpmResult {
  BitVec support;  // physical-edge correction support
  int total_weight = 0;
  std::vector<std::pair<int, int>> pairs;  // matched plane-node pairs
};

// Exact minimum-weight perfect matching by enumerating all pairings of the
// defects ((k-1)!! of them) under the torus Manhattan metric. Ties resolve to
// the lexicographically first pairing. Requires an even defect count <= 12.
MwpmResult exact_mwpm(const BitVec& defects, const ToricLattice& lat, Plane plane);

// Deterministic shortest path between two plane nodes (rows first, then
// columns, preferring the positive wrap direction on ties); returns physical
// edges flipped.
void flip_plane_path(BitVec& support, const ToricLattice& lat, Plane plane, int node_a,
                     int node_b);

// Exhaustive maximum-likelihood coset decoder for L <= 3: enumerates the full
// stabilizer group and returns a representative of the syndrome-consistent
// logical class with the greatest total probability under depolarizing noise
// of rate p_err.
class ExhaustiveMlDecoder {
 public:
  explicit ExhaustiveMlDecoder(const ToricLattice& lat);

  PauliFrame decode(const Syndrome& syn, double p_err) const;

  // Probability of each of the 16 logical classes (indexed by
  // LogicalClass::index()), conditioned on nothing: absolute probabilities
  // that sum to the total probability of the syndrome.
  std::array<double, 16> class_probabilities(const Syndrome& syn, double p_err) const;

  // Any frame consistent with the syndrome (defects paired in index order).
  PauliFrame consistent_frame(const Syndrome& syn) const;

 private:
  ToricLattice lat_;
  // stabilizer group elements as packed 64-bit x/z planes
  std::vector<std::uint64_t> stab_x_, stab_z_;
  std::array<PauliFrame, 4> logicals_;
};

PauliFrame exhaustive_ml_decode(const Syndrome& syn, const ToricLattice& lat, double p_err);

}  // namespace toric
