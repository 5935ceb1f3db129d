#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "toric/bitvec.hpp"

namespace toric {

// Decoding planes: the primal plane carries the vertex checks (flipped by Z
// errors), the dual plane carries the plaquette checks (flipped by X errors).
enum class Plane { Primal, Dual };

enum Pauli : std::uint8_t { PauliI = 0, PauliX = 1, PauliY = 2, PauliZ = 3 };

inline const char* pauli_name(int p) {
  static const char* names[4] = {"I", "X", "Y", "Z"};
  return names[p & 3];
}

// L x L square lattice with periodic boundaries, one qubit per edge.
//
// Edge index = orientation * L^2 + row * L + col with orientation 0 =
// horizontal, 1 = vertical. Horizontal edge (r,c) joins vertices (r,c) and
// (r,c+1); vertical edge (r,c) joins (r,c) and (r+1,c). Plaquette (r,c) is
// bounded by h(r,c), h(r+1,c), v(r,c), v(r,c+1).
struct ToricLattice {
  int L;

  explicit ToricLattice(int size) : L(size) {
    if (L < 2) throw std::invalid_argument("lattice size must be >= 2");
  }

  int n_qubits() const { return 2 * L * L; }
  int n_vertices() const { return L * L; }
  int n_plaquettes() const { return L * L; }

  int wrap(int a) const {
    int m = a % L;
    return m < 0 ? m + L : m;
  }

  int vertex(int r, int c) const { return wrap(r) * L + wrap(c); }
  int plaquette(int r, int c) const { return wrap(r) * L + wrap(c); }
  int edge(int orient, int r, int c) const { return orient * L * L + wrap(r) * L + wrap(c); }

  int edge_orientation(int e) const { return e / (L * L); }
  int edge_row(int e) const { return (e % (L * L)) / L; }
  int edge_col(int e) const { return e % L; }

  // The 4 edges incident to a vertex: east, west, south, north.
  std::array<int, 4> vertex_edges(int v) const {
    const int r = v / L, c = v % L;
    return {edge(0, r, c), edge(0, r, c - 1), edge(1, r, c), edge(1, r - 1, c)};
  }

  // The 4 edges bounding a plaquette: top, bottom, left, right.
  std::array<int, 4> plaquette_edges(int p) const {
    const int r = p / L, c = p % L;
    return {edge(0, r, c), edge(0, r + 1, c), edge(1, r, c), edge(1, r, c + 1)};
  }

  // Decoding-plane edges reuse the primal edge indexing: plane-h(r,c) joins
  // plane nodes (r,c)-(r,c+1) and plane-v(r,c) joins (r,c)-(r+1,c). On the
  // dual plane the nodes are plaquettes and the physical qubit sitting on a
  // plane edge is the shared boundary edge of the two plaquettes.
  int plane_edge_to_physical(Plane plane, int plane_edge) const {
    if (plane == Plane::Primal) return plane_edge;
    const int orient = plane_edge / (L * L);
    const int rc = plane_edge % (L * L);
    const int r = rc / L, c = rc % L;
    if (orient == 0) return edge(1, r, c + 1);  // plaquettes (r,c)-(r,c+1) share v(r,c+1)
    return edge(0, r + 1, c);                   // plaquettes (r,c)-(r+1,c) share h(r+1,c)
  }

  bool operator==(const ToricLattice&) const = default;
};

// Pauli assignment on all 2L^2 qubits, phases discarded. Bit q of x (z) is
// set when the Pauli on qubit q has an X (Z) component.
struct PauliFrame {
  BitVec x, z;

  PauliFrame() = default;
  explicit PauliFrame(const ToricLattice& lat)
      : x(lat.n_qubits()), z(lat.n_qubits()) {}

  std::size_t n_qubits() const { return x.size(); }

  int pauli(int q) const {
    const bool bx = x.get(q), bz = z.get(q);
    if (bx) return bz ? PauliY : PauliX;
    return bz ? PauliZ : PauliI;
  }

  void set_pauli(int q, int cls) {
    x.set(q, cls == PauliX || cls == PauliY);
    z.set(q, cls == PauliZ || cls == PauliY);
  }

  // Pauli-group composition up to phase.
  PauliFrame& operator^=(const PauliFrame& o) {
    x ^= o.x;
    z ^= o.z;
    return *this;
  }
  friend PauliFrame operator^(PauliFrame a, const PauliFrame& b) {
    a ^= b;
    return a;
  }

  std::size_t weight() const { return support_weight(x, z); }
  bool identity() const { return !x.any() && !z.any(); }

  bool operator==(const PauliFrame&) const = default;
};

// Outcome of all stabilizer measurements; a set bit marks a defect (-1 outcome).
struct Syndrome {
  BitVec vertex_defects, plaquette_defects;

  Syndrome() = default;
  explicit Syndrome(const ToricLattice& lat)
      : vertex_defects(lat.n_vertices()), plaquette_defects(lat.n_plaquettes()) {}

  bool trivial() const { return !vertex_defects.any() && !plaquette_defects.any(); }
  std::size_t defect_count() const {
    return vertex_defects.popcount() + plaquette_defects.popcount();
  }

  Syndrome& operator^=(const Syndrome& o) {
    vertex_defects ^= o.vertex_defects;
    plaquette_defects ^= o.plaquette_defects;
    return *this;
  }
  friend Syndrome operator^(Syndrome a, const Syndrome& b) {
    a ^= b;
    return a;
  }

  bool operator==(const Syndrome&) const = default;
};

// Homology class of a syndrome-free frame: winding parities of the Z part
// around the two lattice cycles and of the X part around the two dual cycles.
struct LogicalClass {
  bool z_horizontal = false;
  bool z_vertical = false;
  bool x_horizontal = false;
  bool x_vertical = false;

  bool trivial() const { return !z_horizontal && !z_vertical && !x_horizontal && !x_vertical; }
  int index() const {
    return int(z_horizontal) | int(z_vertical) << 1 | int(x_horizontal) << 2 |
           int(x_vertical) << 3;
  }
  bool operator==(const LogicalClass&) const = default;
};

Syndrome compute_syndrome(const PauliFrame& frame, const ToricLattice& lat);

// Requires a trivial syndrome; throws otherwise. The cut variant evaluates the
// winding parities at a translated cut (used to test cut independence).
LogicalClass logical_class(const PauliFrame& frame, const ToricLattice& lat);
LogicalClass logical_class_at_cut(const PauliFrame& frame, const ToricLattice& lat, int cut_r,
                                  int cut_c);

// True iff error * correction lies in the stabilizer group. Requires the
// residual syndrome to be trivial; throws otherwise.
bool decode_succeeded(const PauliFrame& error, const PauliFrame& correction,
                      const ToricLattice& lat);

// Generator frames, for tests: X on the star of v / Z on the boundary of p.
PauliFrame vertex_stabilizer(const ToricLattice& lat, int v);
PauliFrame plaquette_stabilizer(const ToricLattice& lat, int p);

// Canonical logical string flipping exactly one class bit: 0 -> z_horizontal,
// 1 -> z_vertical, 2 -> x_horizontal, 3 -> x_vertical.
PauliFrame logical_representative(const ToricLattice& lat, int which);

}  // namespace toric
