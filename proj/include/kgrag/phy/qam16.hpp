#pragma once

// Gray-mapped 16QAM with unit average symbol energy.
//
// Each 4-bit group b3 b2 b1 b0 maps (b3 b2) to the in-phase level and
// (b1 b0) to the quadrature level, per axis 00 -> -3, 01 -> -1, 11 -> +1,
// 10 -> +3, then scales by 1/sqrt(10).

#include <cmath>
#include <complex>
#include <vector>

#include "kgrag/phy/bits.hpp"

namespace kgrag::phy {

using Symbol = std::complex<double>;

struct SymbolStream {
  std::vector<Symbol> symbols;
  std::size_t pad_bits = 0;  // zero bits appended by the modulator

  std::size_t size() const { return symbols.size(); }
};

inline const double kQamScale = 1.0 / std::sqrt(10.0);

namespace detail {

constexpr int gray_level(unsigned hi, unsigned lo) {
  constexpr int kLevels[4] = {-3, -1, +3, +1};  // index = hi*2 + lo
  return kLevels[(hi << 1) | lo];
}

// Minimum-distance slicing of one (scaled) axis value. A value exactly on a
// decision boundary goes to the neighbour with the smaller 2-bit Gray label:
// -2 -> 00, 0 -> 01, +2 -> 10 in unscaled units.
inline unsigned slice_axis(double x) {
  const double edge = 2.0 * kQamScale;
  if (x <= -edge) return 0b00;
  if (x <= 0.0) return 0b01;
  if (x < edge) return 0b11;
  return 0b10;
}

}  // namespace detail

inline SymbolStream qam16_modulate(const BitStream& bits) {
  SymbolStream out;
  out.pad_bits = (4 - bits.size() % 4) % 4;
  std::size_t n = (bits.size() + out.pad_bits) / 4;
  out.symbols.reserve(n);
  auto at = [&](std::size_t i) -> unsigned { return i < bits.size() ? bits.bits[i] : 0u; };
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t i = 4 * s;
    double re = detail::gray_level(at(i), at(i + 1));
    double im = detail::gray_level(at(i + 2), at(i + 3));
    out.symbols.emplace_back(re * kQamScale, im * kQamScale);
  }
  return out;
}

inline BitStream qam16_demodulate(const SymbolStream& in) {
  BitStream out;
  out.bits.reserve(in.size() * 4);
  for (const Symbol& s : in.symbols) {
    unsigned i = detail::slice_axis(s.real());
    unsigned q = detail::slice_axis(s.imag());
    out.push(i >> 1);
    out.push(i);
    out.push(q >> 1);
    out.push(q);
  }
  out.bits.resize(out.size() - std::min(in.pad_bits, out.size()));
  return out;
}

inline double mean_energy(const SymbolStream& s) {
  if (s.symbols.empty()) return 0.0;
  double e = 0.0;
  for (const Symbol& x : s.symbols) e += std::norm(x);
  return e / static_cast<double>(s.symbols.size());
}

}  // namespace kgrag::phy
