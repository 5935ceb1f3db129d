#pragma once

#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "toric/lattice.hpp"

namespace toric {

// Union-find decoder: grows defect clusters by half-edges until every cluster
// holds an even number of defects, merging clusters through a disjoint-set
// structure, then peels a spanning forest of the grown edges into a
// correction. One instance owns its scratch buffers; reuse it across decodes
// on the same lattice and keep one instance per worker thread.
class UfDecoder {
 public:
  explicit UfDecoder(const ToricLattice& lat);

  // Decodes one plane of defects and returns the correction support on
  // physical edges. Requires an even defect count.
  BitVec decode_plane(const BitVec& defects, Plane plane);

  // Full decode: Z correction from the vertex defects on the primal plane,
  // X correction from the plaquette defects on the dual plane.
  PauliFrame decode(const Syndrome& syn);

  // Grow/merge rounds used by the most recent decode_plane call.
  int last_rounds() const { return last_rounds_; }

 private:
  int find(int v);
  void unite(int a, int b);

  ToricLattice lat_;

  // cluster state
  std::vector<std::int32_t> parent_;
  std::vector<std::int32_t> csize_;
  std::vector<std::uint8_t> parity_;
  std::vector<std::uint8_t> growth_;  // per plane edge: 0, 1, or 2 half-edges
  std::unordered_map<std::int32_t, std::unordered_set<std::int32_t>> boundary_;

  // peeling scratch
  std::vector<std::uint8_t> defect_;
  std::vector<std::uint8_t> visited_;
  std::vector<std::int32_t> bfs_queue_;
  std::vector<std::int32_t> tree_deg_;
  std::vector<std::array<std::int32_t, 4>> tree_adj_;
  std::vector<std::int32_t> adj_count_;

  int last_rounds_ = 0;
};

// One-shot conveniences constructing a throwaway decoder.
BitVec uf_decode_plane(const BitVec& defects, const ToricLattice& lat, Plane plane);
PauliFrame uf_decode(const Syndrome& syn, const ToricLattice& lat);

}  // namespace toric
