#include "toric/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>

namespace toric {

namespace {

int torus_distance(int a, int b, int L) {
  const int ra = a / L, ca = a % L, rb = b / L, cb = b % L;
  const int dr = std::abs(ra - rb), dc = std::abs(ca - cb);
  return std::min(dr, L - dr) + std::min(dc, L - dc);
}

// Recursive pairing enumeration in lexicographic order; strict improvement
// keeps the first minimal pairing.
void enumerate_pairings(std::vector<int>& nodes, std::vector<std::pair<int, int>>& current,
                        int current_weight, const ToricLattice& lat,
                        std::vector<std::pair<int, int>>& best, int& best_weight) {
  if (nodes.empty()) {
    if (current_weight < best_weight) {
      best_weight = current_weight;
      best = current;
    }
    return;
  }
  const int a = nodes.front();
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const int b = nodes[i];
    std::vector<int> rest;
    rest.reserve(nodes.size() - 2);
    for (std::size_t k = 1; k < nodes.size(); ++k)
      if (k != i) rest.push_back(nodes[k]);
    current.emplace_back(a, b);
    enumerate_pairings(rest, current, current_weight + torus_distance(a, b, lat.L), lat, best,
                       best_weight);
    current.pop_back();
  }
}

}  // namespace

void flip_plane_path(BitVec& support, const ToricLattice& lat, Plane plane, int node_a,
                     int node_b) {
  const int L = lat.L;
  int r = node_a / L, c = node_a % L;
  const int rb = node_b / L, cb = node_b % L;

  // rows first: positive (south) direction wins ties
  int delta = (rb - r + L) % L;
  if (delta != 0) {
    const bool south = delta <= L - delta;
    const int steps = south ? delta : L - delta;
    for (int s = 0; s < steps; ++s) {
      const int e = south ? lat.edge(1, r, c) : lat.edge(1, r - 1, c);
      support.flip(lat.plane_edge_to_physical(plane, e));
      r = lat.wrap(south ? r + 1 : r - 1);
    }
  }
  delta = (cb - c + L) % L;
  if (delta != 0) {
    const bool east = delta <= L - delta;
    const int steps = east ? delta : L - delta;
    for (int s = 0; s < steps; ++s) {
      const int e = east ? lat.edge(0, r, c) : lat.edge(0, r, c - 1);
      support.flip(lat.plane_edge_to_physical(plane, e));
      c = lat.wrap(east ? c + 1 : c - 1);
    }
  }
}

MwpmResult exact_mwpm(const BitVec& defects, const ToricLattice& lat, Plane plane) {
  if ((int)defects.size() != lat.n_vertices())
    throw std::invalid_argument("defect plane size does not match lattice");
  std::vector<int> nodes;
  for (int v = 0; v < (int)defects.size(); ++v)
    if (defects.get(v)) nodes.push_back(v);
  if (nodes.size() % 2 != 0) throw std::invalid_argument("odd defect count");
  if (nodes.size() > 12)
    throw std::invalid_argument("exact_mwpm supports at most 12 defects");

  MwpmResult res;
  res.support = BitVec(lat.n_qubits());
  if (nodes.empty()) return res;

  std::vector<std::pair<int, int>> current;
  int best_weight = INT32_MAX;
  enumerate_pairings(nodes, current, 0, lat, res.pairs, best_weight);
  res.total_weight = best_weight;
  for (const auto& [a, b] : res.pairs) flip_plane_path(res.support, lat, plane, a, b);
  return res;
}

ExhaustiveMlDecoder::ExhaustiveMlDecoder(const ToricLattice& lat) : lat_(lat) {
  if (lat.L > 3)
    throw std::invalid_argument("exhaustive decoder is limited to L <= 3");

  // independent generators: every vertex/plaquette star except the last of
  // each type (their full products are the identity)
  std::vector<std::uint64_t> gen_x, gen_z;
  const auto pack = [](const BitVec& v) { return v.words()[0]; };
  for (int v = 0; v + 1 < lat.n_vertices(); ++v)
    gen_x.push_back(pack(vertex_stabilizer(lat, v).x));
  for (int p = 0; p + 1 < lat.n_plaquettes(); ++p)
    gen_z.push_back(pack(plaquette_stabilizer(lat, p).z));
  std::vector<std::uint64_t> gens_x, gens_z;
  for (std::uint64_t g : gen_x) {
    gens_x.push_back(g);
    gens_z.push_back(0);
  }
  for (std::uint64_t g : gen_z) {
    gens_x.push_back(0);
    gens_z.push_back(g);
  }

  const std::size_t count = std::size_t(1) << gens_x.size();
  stab_x_.resize(count);
  stab_z_.resize(count);
  std::uint64_t cx = 0, cz = 0;
  stab_x_[0] = stab_z_[0] = 0;
  for (std::size_t i = 1; i < count; ++i) {
    const int bit = std::countr_zero(i);  // Gray-code walk over all subsets
    cx ^= gens_x[bit];
    cz ^= gens_z[bit];
    stab_x_[i] = cx;
    stab_z_[i] = cz;
  }

  for (int w = 0; w < 4; ++w) logicals_[w] = logical_representative(lat, w);
}

PauliFrame ExhaustiveMlDecoder::consistent_frame(const Syndrome& syn) const {
  if ((int)syn.vertex_defects.size() != lat_.n_vertices())
    throw std::invalid_argument("syndrome size does not match lattice");
  if (syn.vertex_defects.popcount() % 2 != 0 || syn.plaquette_defects.popcount() % 2 != 0)
    throw std::invalid_argument("odd defect count");

  PauliFrame frame(lat_);
  std::vector<int> vd, pd;
  for (int v = 0; v < lat_.n_vertices(); ++v) {
    if (syn.vertex_defects.get(v)) vd.push_back(v);
    if (syn.plaquette_defects.get(v)) pd.push_back(v);
  }
  for (std::size_t i = 0; i + 1 < vd.size(); i += 2)
    flip_plane_path(frame.z, lat_, Plane::Primal, vd[i], vd[i + 1]);
  for (std::size_t i = 0; i + 1 < pd.size(); i += 2)
    flip_plane_path(frame.x, lat_, Plane::Dual, pd[i], pd[i + 1]);
  assert(compute_syndrome(frame, lat_) == syn);
  return frame;
}

std::array<double, 16> ExhaustiveMlDecoder::class_probabilities(const Syndrome& syn,
                                                                double p_err) const {
  if (!(p_err >= 0.0 && p_err < 1.0))
    throw std::invalid_argument("p_err must lie in [0,1)");
  const int n = lat_.n_qubits();
  const double r = (p_err / 3.0) / (1.0 - p_err);
  std::vector<double> rpow(n + 1);
  rpow[0] = 1.0;
  for (int w = 1; w <= n; ++w) rpow[w] = rpow[w - 1] * r;
  const double norm = std::pow(1.0 - p_err, n);

  const PauliFrame base = consistent_frame(syn);
  std::array<double, 16> probs{};
  for (int idx = 0; idx < 16; ++idx) {
    PauliFrame rep = base;
    for (int w = 0; w < 4; ++w)
      if (idx & (1 << w)) rep ^= logicals_[w];
    const std::uint64_t rx = rep.x.words()[0], rz = rep.z.words()[0];
    double score = 0.0;
    for (std::size_t s = 0; s < stab_x_.size(); ++s) {
      const int w = std::popcount((rx ^ stab_x_[s]) | (rz ^ stab_z_[s]));
      score += rpow[w];
    }
    probs[idx] = norm * score;
  }
  return probs;
}

PauliFrame ExhaustiveMlDecoder::decode(const Syndrome& syn, double p_err) const {
  const auto probs = class_probabilities(syn, p_err);
  int best = 0;
  for (int idx = 1; idx < 16; ++idx)
    if (probs[idx] > probs[best]) best = idx;
  PauliFrame rep = consistent_frame(syn);
  for (int w = 0; w < 4; ++w)
    if (best & (1 << w)) rep ^= logicals_[w];
  return rep;
}

PauliFrame exhaustive_ml_decode(const Syndrome& syn, const ToricLattice& lat, double p_err) {
  return ExhaustiveMlDecoder(lat).decode(syn, p_err);
}

}  // namespace toric
