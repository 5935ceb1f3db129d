#include "toric/lattice.hpp"

namespace toric {

Syndrome compute_syndrome(const PauliFrame& frame, const ToricLattice& lat) {
  if ((int)frame.n_qubits() != lat.n_qubits())
    throw std::invalid_argument("frame size does not match lattice");
  Syndrome syn(lat);
  const int L = lat.L;
  for (int r = 0; r < L; ++r) {
    for (int c = 0; c < L; ++c) {
      const int v = r * L + c;
      bool vd = false;
      for (int e : lat.vertex_edges(v)) vd ^= frame.z.get(e);
      if (vd) syn.vertex_defects.set(v, true);
      bool pd = false;
      for (int e : lat.plaquette_edges(v)) pd ^= frame.x.get(e);
      if (pd) syn.plaquette_defects.set(v, true);
    }
  }
  return syn;
}

LogicalClass logical_class_at_cut(const PauliFrame& frame, const ToricLattice& lat, int cut_r,
                                  int cut_c) {
  if (!compute_syndrome(frame, lat).trivial())
    throw std::invalid_argument("logical class undefined for nontrivial syndrome");
  const int L = lat.L;
  LogicalClass cls;
  for (int r = 0; r < L; ++r) {
    cls.z_horizontal ^= frame.z.get(lat.edge(0, r, cut_c));
    cls.x_horizontal ^= frame.x.get(lat.edge(1, r, cut_c));
  }
  for (int c = 0; c < L; ++c) {
    cls.z_vertical ^= frame.z.get(lat.edge(1, cut_r, c));
    cls.x_vertical ^= frame.x.get(lat.edge(0, cut_r, c));
  }
  return cls;
}

LogicalClass logical_class(const PauliFrame& frame, const ToricLattice& lat) {
  return logical_class_at_cut(frame, lat, 0, 0);
}

bool decode_succeeded(const PauliFrame& error, const PauliFrame& correction,
                      const ToricLattice& lat) {
  const PauliFrame residual = error ^ correction;
  return logical_class(residual, lat).trivial();
}

PauliFrame vertex_stabilizer(const ToricLattice& lat, int v) {
  PauliFrame f(lat);
  for (int e : lat.vertex_edges(v)) f.x.flip(e);
  return f;
}

PauliFrame plaquette_stabilizer(const ToricLattice& lat, int p) {
  PauliFrame f(lat);
  for (int e : lat.plaquette_edges(p)) f.z.flip(e);
  return f;
}

PauliFrame logical_representative(const ToricLattice& lat, int which) {
  PauliFrame f(lat);
  const int L = lat.L;
  switch (which) {
    case 0:  // Z loop along row 0 (horizontal edges)
      for (int c = 0; c < L; ++c) f.z.flip(lat.edge(0, 0, c));
      break;
    case 1:  // Z loop along column 0 (vertical edges)
      for (int r = 0; r < L; ++r) f.z.flip(lat.edge(1, r, 0));
      break;
    case 2:  // X loop along dual row 0 (vertical edges of lattice row 0)
      for (int c = 0; c < L; ++c) f.x.flip(lat.edge(1, 0, c));
      break;
    case 3:  // X loop along dual column 0 (horizontal edges of lattice column 0)
      for (int r = 0; r < L; ++r) f.x.flip(lat.edge(0, r, 0));
      break;
    default:
      throw std::invalid_argument("logical_representative: which must be 0..3");
  }
  return f;
}

}  // namespace toric
