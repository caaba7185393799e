#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "kgrag/common.hpp"

namespace kgrag::phy {

// Sequence of bits, one per byte (values 0 or 1).
struct BitStream {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  bool empty() const { return bits.empty(); }
  void push(unsigned b) { bits.push_back(static_cast<std::uint8_t>(b & 1u)); }

  // Appends the low `width` bits of `value`, most significant first.
  void append_uint(std::uint64_t value, unsigned width) {
    for (unsigned i = width; i-- > 0;) push(static_cast<unsigned>(value >> i));
  }

  void append(const BitStream& other) {
    bits.insert(bits.end(), other.bits.begin(), other.bits.end());
  }

  // Big-endian read of `width` bits starting at `pos`. Caller checks bounds.
  std::uint64_t read_uint(std::size_t pos, unsigned width) const {
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) v = (v << 1) | bits[pos + i];
    return v;
  }

  friend bool operator==(const BitStream&, const BitStream&) = default;
};

inline BitStream operator^(const BitStream& a, const BitStream& b) {
  if (a.size() != b.size()) throw Error("xor of bit streams with different lengths");
  BitStream out;
  out.bits.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.bits[i] = a.bits[i] ^ b.bits[i];
  return out;
}

inline std::size_t hamming_distance(const BitStream& a, const BitStream& b) {
  std::size_t n = std::min(a.size(), b.size());
  std::size_t d = (a.size() > b.size() ? a.size() - b.size() : b.size() - a.size());
  for (std::size_t i = 0; i < n; ++i) d += a.bits[i] != b.bits[i];
  return d;
}

inline BitStream random_bits(std::size_t n, Rng& rng) {
  BitStream b;
  b.bits.resize(n);
  for (auto& x : b.bits) x = rng.bit() ? 1 : 0;
  return b;
}

inline BitStream bits_of_string(const std::string& bits01) {
  BitStream b;
  for (char c : bits01) {
    if (c == '0' || c == '1') b.push(c == '1');
  }
  return b;
}

}  // namespace kgrag::phy
