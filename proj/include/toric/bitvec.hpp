#pragma once

#include <bit>
#include <cassert>
#include <cstdint>
#include <vector>

namespace toric {

// Fixed-size packed bit vector used for Pauli bit-planes and defect maps.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t nbits) : nbits_(nbits), words_((nbits + 63) / 64, 0) {}

  std::size_t size() const { return nbits_; }

  bool get(std::size_t i) const {
    assert(i < nbits_);
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }

  void set(std::size_t i, bool v) {
    assert(i < nbits_);
    const std::uint64_t mask = std::uint64_t(1) << (i & 63);
    if (v)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }

  void flip(std::size_t i) {
    assert(i < nbits_);
    words_[i >> 6] ^= std::uint64_t(1) << (i & 63);
  }

  void clear() { std::fill(words_.begin(), words_.end(), 0); }

  std::size_t popcount() const {
    std::size_t n = 0;
    for (std::uint64_t w : words_) n += std::popcount(w);
    return n;
  }

  bool any() const {
    for (std::uint64_t w : words_)
      if (w) return true;
    return false;
  }

  BitVec& operator^=(const BitVec& o) {
    assert(nbits_ == o.nbits_);
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] ^= o.words_[k];
    return *this;
  }

  friend BitVec operator^(BitVec a, const BitVec& b) {
    a ^= b;
    return a;
  }

  bool operator==(const BitVec&) const = default;

  const std::vector<std::uint64_t>& words() const { return words_; }

 private:
  std::size_t nbits_ = 0;
  std::vector<std::uint64_t> words_;
};

// Number of positions where either plane has a bit set (joint support weight).
inline std::size_t support_weight(const BitVec& x, const BitVec& z) {
  assert(x.size() == z.size());
  std::size_t n = 0;
  for (std::size_t k = 0; k < x.words().size(); ++k)
    n += std::popcount(x.words()[k] | z.words()[k]);
  return n;
}

}  // namespace toric
