#pragma once

// Rate-1/2, constraint length 7 convolutional code (generators 171, 133
// octal), zero-tail terminated, with hard-decision Viterbi decoding.

#include <array>
#include <bit>
#include <cstdint>
#include <limits>
#include <vector>

#include "kgrag/phy/bits.hpp"

namespace kgrag::phy {

inline constexpr unsigned kConstraintLength = 7;
inline constexpr unsigned kTailBits = kConstraintLength - 1;
inline constexpr unsigned kNumStates = 1u << kTailBits;
inline constexpr unsigned kGenerator0 = 0171;
inline constexpr unsigned kGenerator1 = 0133;

namespace detail {

// The 7-bit register holds the current input in bit 6 and the six previous
// inputs below it, newest first. Output pair for register contents `reg`.
constexpr std::array<std::uint8_t, 128> make_output_table() {
  std::array<std::uint8_t, 128> t{};
  for (unsigned reg = 0; reg < 128; ++reg) {
    unsigned a = std::popcount(reg & kGenerator0) & 1u;
    unsigned b = std::popcount(reg & kGenerator1) & 1u;
    t[reg] = static_cast<std::uint8_t>((a << 1) | b);
  }
  return t;
}

inline constexpr auto kOutputTable = make_output_table();

}  // namespace detail

inline constexpr std::size_t encoded_length(std::size_t info_bits) {
  return 2 * (info_bits + kTailBits);
}

inline BitStream conv_encode(const BitStream& info) {
  BitStream out;
  out.bits.reserve(encoded_length(info.size()));
  unsigned state = 0;  // previous six inputs, newest in bit 5
  auto step = [&](unsigned b) {
    unsigned reg = (b << kTailBits) | state;
    std::uint8_t o = detail::kOutputTable[reg];
    out.push(o >> 1);
    out.push(o & 1u);
    state = reg >> 1;
  };
  for (std::uint8_t b : info.bits) step(b);
  for (unsigned i = 0; i < kTailBits; ++i) step(0);
  return out;
}

// Maximum-likelihood (Hamming metric) decoding over the 64-state trellis,
// starting and ending in state 0. Returns the info bits with the tail
// removed.
inline BitStream viterbi_decode(const BitStream& received) {
  if (received.size() % 2 != 0 || received.size() < 2 * kTailBits) {
    throw Error("viterbi: received length " + std::to_string(received.size()) +
                " is not an even number >= 12");
  }
  const std::size_t steps = received.size() / 2;
  constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max() / 2;
  std::array<std::uint32_t, kNumStates> metric;
  std::array<std::uint32_t, kNumStates> next;
  metric.fill(kInf);
  metric[0] = 0;
  // Bit ns of decisions[t] tells which predecessor won for state ns.
  std::vector<std::uint64_t> decisions(steps, 0);

  for (std::size_t t = 0; t < steps; ++t) {
    unsigned rx = (static_cast<unsigned>(received.bits[2 * t]) << 1) |
                  received.bits[2 * t + 1];
    for (unsigned ns = 0; ns < kNumStates; ++ns) {
      unsigned b = ns >> (kTailBits - 1);
      unsigned base = (ns << 1) & (kNumStates - 1);
      std::uint32_t best = kInf;
      unsigned choice = 0;
      for (unsigned x = 0; x < 2; ++x) {
        unsigned prev = base | x;
        if (metric[prev] >= kInf) continue;
        unsigned reg = (b << kTailBits) | prev;
        std::uint32_t m = metric[prev] +
                          static_cast<std::uint32_t>(std::popcount(detail::kOutputTable[reg] ^ rx));
        if (m < best) {
          best = m;
          choice = x;
        }
      }
      next[ns] = best;
      if (choice) decisions[t] |= (std::uint64_t{1} << ns);
    }
    metric = next;
  }

  BitStream decoded;
  decoded.bits.resize(steps);
  unsigned state = 0;
  for (std::size_t t = steps; t-- > 0;) {
    decoded.bits[t] = static_cast<std::uint8_t>(state >> (kTailBits - 1));
    unsigned x = (decisions[t] >> state) & 1u;
    state = ((state << 1) & (kNumStates - 1)) | x;
  }
  decoded.bits.resize(steps - kTailBits);
  return decoded;
}

}  // namespace kgrag::phy
