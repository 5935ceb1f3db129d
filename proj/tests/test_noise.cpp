#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "toric/noise.hpp"

using namespace toric;

TEST_CASE("degenerate error rates") {
  const ToricLattice lat(5);
  SUBCASE("p = 0 always yields the identity") {
    for (int t = 0; t < 20; ++t) CHECK(sample_depolarizing({0.0, 7}, lat, t).identity());
  }
  SUBCASE("p = 1 leaves no qubit untouched") {
    for (int t = 0; t < 20; ++t) {
      const PauliFrame f = sample_depolarizing({1.0, 7}, lat, t);
      CHECK((int)f.weight() == lat.n_qubits());
    }
  }
  SUBCASE("rates outside [0,1] are rejected") {
    CHECK_THROWS_AS(sample_depolarizing({-0.1, 0}, lat, 0), std::invalid_argument);
    CHECK_THROWS_AS(sample_depolarizing({1.5, 0}, lat, 0), std::invalid_argument);
  }
}

TEST_CASE("error counts follow the binomial law and split evenly over X/Y/Z") {
  const ToricLattice lat(31);
  const double p = 0.15;
  const long trials = 2000;  // 2000 * 1922 qubits ~ 3.8e6 Bernoulli draws
  const NoiseSpec spec{p, 12345};

  long errors = 0;
  long per_class[4] = {0, 0, 0, 0};
  for (long t = 0; t < trials; ++t) {
    const PauliFrame f = sample_depolarizing(spec, lat, t);
    for (int q = 0; q < lat.n_qubits(); ++q) ++per_class[f.pauli(q)];
    errors += f.weight();
  }
  const double n_draws = (double)trials * lat.n_qubits();
  const double sigma_rate = std::sqrt(p * (1 - p) / n_draws);
  CHECK(std::abs(errors / n_draws - p) < 3 * sigma_rate);

  // conditional on an error, each Pauli appears with probability 1/3
  const double sigma_cls = std::sqrt((1.0 / 3) * (2.0 / 3) * errors);
  for (int cls = PauliX; cls <= PauliZ; ++cls)
    CHECK(std::abs(per_class[cls] - errors / 3.0) < 4 * sigma_cls);
}

TEST_CASE("sampling is deterministic in (seed, stream) and streams differ") {
  const ToricLattice lat(7);
  const NoiseSpec spec{0.1, 42};
  for (int t = 0; t < 10; ++t)
    CHECK(sample_depolarizing(spec, lat, t) == sample_depolarizing(spec, lat, t));

  std::set<std::uint64_t> fingerprints;
  for (int t = 0; t < 64; ++t) {
    const PauliFrame f = sample_depolarizing(spec, lat, t);
    std::uint64_t fp = 0;
    for (std::uint64_t w : f.x.words()) fp = fp * 1099511628211ull + w;
    for (std::uint64_t w : f.z.words()) fp = fp * 1099511628211ull + w;
    fingerprints.insert(fp);
  }
  CHECK(fingerprints.size() == 64);  // no repeated frames across streams

  CHECK_FALSE(sample_depolarizing({0.1, 43}, lat, 0) == sample_depolarizing(spec, lat, 0));
}

TEST_CASE("philox produces uniform doubles in [0,1)") {
  Philox rng(9, 1);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_double();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("enumeration counts match the closed form") {
  SUBCASE("L=3, weight <= 1 gives 55 frames") {
    const ToricLattice lat(3);
    CHECK(enumeration_size(lat, 1) == 55);
    CHECK(collect_errors(lat, 1).size() == 55);
  }
  SUBCASE("L=5, weight 0 gives the identity only") {
    const ToricLattice lat(5);
    const auto frames = collect_errors(lat, 0);
    REQUIRE(frames.size() == 1);
    CHECK(frames[0].identity());
  }
  SUBCASE("L=5, weight <= 2 gives 11176 frames") {
    const ToricLattice lat(5);
    CHECK(enumeration_size(lat, 2) == 11176);
    const auto frames = collect_errors(lat, 2);
    CHECK(frames.size() == 11176);
    // spot-check distinctness via weights
    std::size_t w0 = 0, w1 = 0, w2 = 0;
    for (const auto& f : frames) {
      const std::size_t w = f.weight();
      w0 += (w == 0);
      w1 += (w == 1);
      w2 += (w == 2);
    }
    CHECK(w0 == 1);
    CHECK(w1 == 150);
    CHECK(w2 == 11025);
  }
  SUBCASE("cap violations are rejected") {
    const ToricLattice lat(5);
    CHECK_THROWS_AS(collect_errors(lat, 3, 1000), std::invalid_argument);
  }
}
