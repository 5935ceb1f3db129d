#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "toric/decoder_uf.hpp"
#include "toric/noise.hpp"
#include "toric/oracle.hpp"

using namespace toric;

TEST_CASE("exact_mwpm on tiny configurations") {
  const ToricLattice lat(5);

  SUBCASE("no defects give the empty matching") {
    const MwpmResult r = exact_mwpm(BitVec(lat.n_vertices()), lat, Plane::Primal);
    CHECK(r.total_weight == 0);
    CHECK(r.support.popcount() == 0);
  }

  SUBCASE("two adjacent defects match across the single edge") {
    BitVec d(lat.n_vertices());
    d.set(lat.vertex(1, 1), true);
    d.set(lat.vertex(2, 1), true);
    const MwpmResult r = exact_mwpm(d, lat, Plane::Primal);
    CHECK(r.total_weight == 1);
    REQUIRE(r.support.popcount() == 1);
    CHECK(r.support.get(lat.edge(1, 1, 1)));
  }

  SUBCASE("four defects on a unit square match with total weight 2") {
    // three pairings: (ab)(cd)=2, (ac)(bd)=2, (ad)(bc)=4 -> minimum 2
    BitVec d(lat.n_vertices());
    d.set(lat.vertex(1, 1), true);
    d.set(lat.vertex(1, 2), true);
    d.set(lat.vertex(2, 1), true);
    d.set(lat.vertex(2, 2), true);
    const MwpmResult r = exact_mwpm(d, lat, Plane::Primal);
    CHECK(r.total_weight == 2);
  }

  SUBCASE("distances wrap around the torus") {
    BitVec d(lat.n_vertices());
    d.set(lat.vertex(0, 0), true);
    d.set(lat.vertex(0, 4), true);  // one step west across the boundary
    const MwpmResult r = exact_mwpm(d, lat, Plane::Primal);
    CHECK(r.total_weight == 1);
    CHECK(r.support.get(lat.edge(0, 0, 4)));
  }

  SUBCASE("odd or oversized inputs are rejected") {
    BitVec odd(lat.n_vertices());
    odd.set(0, true);
    CHECK_THROWS_AS(exact_mwpm(odd, lat, Plane::Primal), std::invalid_argument);
    BitVec many(lat.n_vertices());
    for (int v = 0; v < 14; ++v) many.set(v, true);
    CHECK_THROWS_AS(exact_mwpm(many, lat, Plane::Primal), std::invalid_argument);
  }
}

TEST_CASE("mwpm support reproduces its defects on both planes") {
  const ToricLattice lat(5);
  Philox rng(31, 0);
  for (int t = 0; t < 300; ++t) {
    BitVec d(lat.n_vertices());
    int count = 2 + 2 * (int)(rng.next_double() * 3);  // 2, 4, or 6 defects
    while (count > 0) {
      const int v = (int)(rng.next_double() * lat.n_vertices());
      if (!d.get(v)) {
        d.set(v, true);
        --count;
      }
    }
    for (Plane plane : {Plane::Primal, Plane::Dual}) {
      const MwpmResult r = exact_mwpm(d, lat, plane);
      PauliFrame f(lat);
      if (plane == Plane::Primal)
        f.z = r.support;
      else
        f.x = r.support;
      const Syndrome syn = compute_syndrome(f, lat);
      REQUIRE((plane == Plane::Primal ? syn.vertex_defects : syn.plaquette_defects) == d);
    }
  }
}

TEST_CASE("mwpm total weight never exceeds the UF correction weight") {
  const ToricLattice lat(5);
  UfDecoder dec(lat);
  Philox rng(47, 0);
  for (int t = 0; t < 1000; ++t) {
    BitVec d(lat.n_vertices());
    int count = 2 + 2 * (int)(rng.next_double() * 3);
    while (count > 0) {
      const int v = (int)(rng.next_double() * lat.n_vertices());
      if (!d.get(v)) {
        d.set(v, true);
        --count;
      }
    }
    const MwpmResult oracle = exact_mwpm(d, lat, Plane::Primal);
    const BitVec uf = dec.decode_plane(d, Plane::Primal);
    REQUIRE(oracle.total_weight <= (int)uf.popcount());
  }
}

TEST_CASE("exhaustive decoder basics at L=3") {
  const ToricLattice lat(3);
  const ExhaustiveMlDecoder oracle(lat);

  SUBCASE("trivial syndrome at small p decodes to the identity class") {
    const PauliFrame corr = oracle.decode(Syndrome(lat), 0.05);
    REQUIRE(compute_syndrome(corr, lat).trivial());
    CHECK(logical_class(corr, lat).trivial());
  }

  SUBCASE("the syndrome of a single Z decodes to the class of that Z") {
    PauliFrame error(lat);
    error.set_pauli(lat.edge(0, 1, 1), PauliZ);
    const Syndrome syn = compute_syndrome(error, lat);
    const PauliFrame corr = oracle.decode(syn, 0.05);
    REQUIRE(compute_syndrome(corr, lat) == syn);
    CHECK(decode_succeeded(error, corr, lat));
  }

  SUBCASE("L > 3 is rejected") {
    CHECK_THROWS_AS(ExhaustiveMlDecoder(ToricLattice(5)), std::invalid_argument);
  }
}

TEST_CASE("class probabilities partition the syndrome probability") {
  // independent oracle: full enumeration over all 4^8 frames at L=2
  const ToricLattice lat(2);
  const ExhaustiveMlDecoder oracle(lat);
  const double p = 0.08;

  PauliFrame error(lat);
  error.set_pauli(lat.edge(0, 0, 0), PauliY);
  error.set_pauli(lat.edge(1, 1, 1), PauliZ);
  const Syndrome target = compute_syndrome(error, lat);

  double direct = 0.0;
  const int n = lat.n_qubits();
  for (long code = 0; code < (1L << (2 * n)); ++code) {
    PauliFrame f(lat);
    double prob = 1.0;
    for (int q = 0; q < n; ++q) {
      const int cls = (code >> (2 * q)) & 3;
      f.set_pauli(q, cls);
      prob *= (cls == PauliI) ? (1.0 - p) : (p / 3.0);
    }
    if (compute_syndrome(f, lat) == target) direct += prob;
  }

  const auto probs = oracle.class_probabilities(target, p);
  double total = 0.0;
  for (double q : probs) total += q;
  CHECK(total == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("decode returns a representative of the most probable class") {
  const ToricLattice lat(3);
  const ExhaustiveMlDecoder oracle(lat);
  for (int t = 0; t < 20; ++t) {
    const PauliFrame error = sample_depolarizing({0.12, 9}, lat, t);
    const Syndrome syn = compute_syndrome(error, lat);
    const auto probs = oracle.class_probabilities(syn, 0.12);
    const PauliFrame rep = oracle.decode(syn, 0.12);
    REQUIRE(compute_syndrome(rep, lat) == syn);
    const PauliFrame base = oracle.consistent_frame(syn);
    const int idx = logical_class(rep ^ base, lat).index();
    for (int k = 0; k < 16; ++k) REQUIRE(probs[idx] >= probs[k] - 1e-18);
  }
}
