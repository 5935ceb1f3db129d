#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "toric/lattice.hpp"

namespace toric {

struct NoiseSpec {
  double p_err = 0.0;   // total per-qubit error rate; X, Y, Z each occur with p_err/3
  std::uint64_t seed = 0;

  void validate() const {
    if (!(p_err >= 0.0 && p_err <= 1.0))
      throw std::invalid_argument("p_err must lie in [0,1]");
  }
};

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011). The key
// holds the seed and the upper counter words hold the stream index, so any
// (seed, stream) pair addresses an independent sequence without shared state.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {
    ctr_[2] = static_cast<std::uint32_t>(stream);
    ctr_[3] = static_cast<std::uint32_t>(stream >> 32);
  }

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform in [0,1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  static void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(prod);
    hi = static_cast<std::uint32_t>(prod >> 32);
  }

  void refill() {
    std::array<std::uint32_t, 4> s = ctr_;
    std::array<std::uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
      std::uint32_t lo0, hi0, lo1, hi1;
      mul_hi_lo(0xD2511F53u, s[0], lo0, hi0);
      mul_hi_lo(0xCD9E8D57u, s[2], lo1, hi1);
      s = {hi1 ^ s[1] ^ k[0], lo1, hi0 ^ s[3] ^ k[1], lo0};
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    buf_ = s;
    pos_ = 0;
    if (++ctr_[0] == 0) ++ctr_[1];  // 64-bit block counter; stream words untouched
  }

  std::array<std::uint32_t, 4> ctr_{};
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

// Depolarizing channel: each qubit independently suffers X, Y, or Z with
// probability p_err/3 each. Identical (spec, lat, stream_index) arguments
// reproduce the identical frame regardless of caller threading.
PauliFrame sample_depolarizing(const NoiseSpec& spec, const ToricLattice& lat,
                               std::uint64_t stream_index);

// Number of frames with support weight <= max_weight: sum_w C(n,w) * 3^w.
// Saturates at UINT64_MAX on overflow.
std::uint64_t enumeration_size(const ToricLattice& lat, int max_weight);

// Visits every frame of support weight <= max_weight exactly once, in
// deterministic order. Throws if the enumeration would exceed `cap` frames.
void enumerate_errors(const ToricLattice& lat, int max_weight, std::uint64_t cap,
                      const std::function<void(const PauliFrame&)>& visit);

std::vector<PauliFrame> collect_errors(const ToricLattice& lat, int max_weight,
                                       std::uint64_t cap = (std::uint64_t(1) << 24));

}  // namespace toric
