#include "toric/decoder_uf.hpp"

#include <algorithm>
#include <queue>

namespace toric {

namespace {

struct GrownEdge {
  std::int32_t a, b, edge;
};

struct TreeEdge {
  std::int32_t a, b, edge;
  bool alive;
};

}  // namespace

UfDecoder::UfDecoder(const ToricLattice& lat) : lat_(lat) {
  const int n = lat_.n_vertices();
  parent_.resize(n);
  csize_.resize(n);
  parity_.resize(n);
  growth_.resize(lat_.n_qubits());
  defect_.resize(n);
  visited_.resize(n);
  tree_deg_.assign(n, 0);
  tree_adj_.resize(n);
  adj_count_.assign(n, 0);
}

int UfDecoder::find(int v) {
  int root = v;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[v] != root) {
    const int next = parent_[v];
    parent_[v] = root;
    v = next;
  }
  return root;
}

void UfDecoder::unite(int a, int b) {
  // weighted union; ties keep the lower root id for determinism
  if (csize_[a] < csize_[b] || (csize_[a] == csize_[b] && b < a)) std::swap(a, b);
  parent_[b] = a;
  csize_[a] += csize_[b];
  parity_[a] ^= parity_[b];
}

BitVec UfDecoder::decode_plane(const BitVec& defects, Plane plane) {
  const int n = lat_.n_vertices();
  const int L = lat_.L;
  if ((int)defects.size() != n)
    throw std::invalid_argument("defect plane size does not match lattice");
  if (defects.popcount() % 2 != 0)
    throw std::invalid_argument("odd defect count cannot be decoded on a torus");

  BitVec correction(lat_.n_qubits());
  last_rounds_ = 0;
  if (!defects.any()) return correction;

  std::fill(parity_.begin(), parity_.end(), 0);
  std::fill(growth_.begin(), growth_.end(), 0);
  std::fill(defect_.begin(), defect_.end(), 0);
  std::fill(visited_.begin(), visited_.end(), 0);
  for (int v = 0; v < n; ++v) {
    parent_[v] = v;
    csize_[v] = 1;
  }
  boundary_.clear();

  std::vector<std::int32_t> defect_list;
  for (int v = 0; v < n; ++v) {
    if (!defects.get(v)) continue;
    defect_list.push_back(v);
    defect_[v] = 1;
    parity_[v] = 1;
    boundary_[v].insert(v);
  }

  // incident plane edges of node (r,c) with their far endpoints, fixed order
  const auto incident = [&](int v, std::array<std::pair<int, int>, 4>& out) {
    const int r = v / L, c = v % L;
    out[0] = {lat_.edge(0, r, c), lat_.vertex(r, c + 1)};
    out[1] = {lat_.edge(0, r, c - 1), lat_.vertex(r, c - 1)};
    out[2] = {lat_.edge(1, r, c), lat_.vertex(r + 1, c)};
    out[3] = {lat_.edge(1, r - 1, c), lat_.vertex(r - 1, c)};
  };

  std::vector<std::int32_t> odd_roots;
  std::vector<GrownEdge> full_edges;
  std::vector<std::int32_t> purge;
  std::array<std::pair<int, int>, 4> inc;

  while (true) {
    odd_roots.clear();
    for (const auto& [root, verts] : boundary_) {
      (void)verts;
      if (parity_[root]) odd_roots.push_back(root);
    }
    if (odd_roots.empty()) break;
    if (++last_rounds_ > 2 * L)
      throw std::logic_error("UF growth failed to terminate within 2L rounds");

    // synchronous round: all odd clusters grow, smallest first
    std::sort(odd_roots.begin(), odd_roots.end(), [&](int a, int b) {
      return csize_[a] != csize_[b] ? csize_[a] < csize_[b] : a < b;
    });

    full_edges.clear();
    for (const int root : odd_roots) {
      auto& bset = boundary_[root];
      purge.clear();
      for (const int v : bset) {
        incident(v, inc);
        bool all_full = true;
        for (const auto& [e, u] : inc) {
          if (growth_[e] == 2) continue;
          if (++growth_[e] == 2)
            full_edges.push_back({v, (std::int32_t)u, (std::int32_t)e});
          else
            all_full = false;
        }
        if (all_full) purge.push_back(v);
      }
      for (const int v : purge) bset.erase(v);
    }

    // merge step: clusters meeting on a fully grown edge join at round end
    for (const auto& ge : full_edges) {
      const int ra = find(ge.a), rb = find(ge.b);
      if (ra != rb) {
        unite(ra, rb);
        const int survivor = find(ra);
        const int gone = survivor == ra ? rb : ra;
        auto& dst = boundary_[survivor];
        auto it = boundary_.find(gone);
        if (it != boundary_.end()) {
          if (dst.size() < it->second.size()) dst.swap(it->second);
          dst.insert(it->second.begin(), it->second.end());
          boundary_.erase(it);
        }
      }
      const int root = find(ge.a);
      auto& bset = boundary_[root];
      bset.insert(ge.a);
      bset.insert(ge.b);
    }
  }

  // Peel a spanning forest of the grown edges, lowest-index leaf first. A
  // defective leaf emits its tree edge and hands the defect to the far end.
  std::vector<std::int32_t> comp_verts;
  std::vector<TreeEdge> tree_edges;

  for (const int seed : defect_list) {
    if (visited_[seed]) continue;
    comp_verts.clear();
    tree_edges.clear();
    bfs_queue_.clear();
    bfs_queue_.push_back(seed);
    visited_[seed] = 1;
    comp_verts.push_back(seed);
    for (std::size_t qi = 0; qi < bfs_queue_.size(); ++qi) {
      const int v = bfs_queue_[qi];
      incident(v, inc);
      for (const auto& [e, u] : inc) {
        if (growth_[e] != 2 || visited_[u]) continue;
        visited_[u] = 1;
        const int ei = (int)tree_edges.size();
        tree_edges.push_back({(std::int32_t)v, (std::int32_t)u, (std::int32_t)e, true});
        tree_adj_[v][adj_count_[v]++] = ei;
        tree_adj_[u][adj_count_[u]++] = ei;
        ++tree_deg_[v];
        ++tree_deg_[u];
        comp_verts.push_back(u);
        bfs_queue_.push_back(u);
      }
    }

    std::priority_queue<int, std::vector<int>, std::greater<int>> leaves;
    for (const int v : comp_verts)
      if (tree_deg_[v] == 1) leaves.push(v);
    while (!leaves.empty()) {
      const int v = leaves.top();
      leaves.pop();
      if (tree_deg_[v] != 1) continue;
      TreeEdge* te = nullptr;
      for (int k = 0; k < adj_count_[v]; ++k) {
        TreeEdge& cand = tree_edges[tree_adj_[v][k]];
        if (cand.alive) {
          te = &cand;
          break;
        }
      }
      const int u = te->a == v ? te->b : te->a;
      te->alive = false;
      --tree_deg_[v];
      --tree_deg_[u];
      if (defect_[v]) {
        correction.flip(lat_.plane_edge_to_physical(plane, te->edge));
        defect_[v] = 0;
        defect_[u] ^= 1;
      }
      if (tree_deg_[u] == 1) leaves.push(u);
    }

    for (const int v : comp_verts) {
      if (defect_[v])
        throw std::logic_error("UF peeling left an unresolved defect");
      tree_deg_[v] = 0;
      adj_count_[v] = 0;
    }
  }

  return correction;
}

PauliFrame UfDecoder::decode(const Syndrome& syn) {
  PauliFrame out(lat_);
  out.z = decode_plane(syn.vertex_defects, Plane::Primal);
  out.x = decode_plane(syn.plaquette_defects, Plane::Dual);
  return out;
}

BitVec uf_decode_plane(const BitVec& defects, const ToricLattice& lat, Plane plane) {
  UfDecoder dec(lat);
  return dec.decode_plane(defects, plane);
}

PauliFrame uf_decode(const Syndrome& syn, const ToricLattice& lat) {
  UfDecoder dec(lat);
  return dec.decode(syn);
}

}  // namespace toric
