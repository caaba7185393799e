#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "kgrag/common.hpp"
#include "kgrag/phy/qam16.hpp"

namespace kgrag::phy {

// Sentinel SNR for the noise-free channel.
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

// snr_db is Es/N0 per symbol in dB.
struct ChannelConfig {
  double snr_db = kNoNoise;
  std::uint64_t seed = 0;
};

// Per-dimension noise variance N0/2 for unit symbol energy.
inline double noise_variance_per_dim(double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  if (!std::isfinite(snr_db)) throw ConfigError("SNR must be finite or +inf");
  return 0.5 * std::pow(10.0, -snr_db / 10.0);
}

// Circularly symmetric complex Gaussian noise drawn from `rng`.
inline SymbolStream awgn(const SymbolStream& in, double snr_db, Rng& rng) {
  SymbolStream out = in;
  double var = noise_variance_per_dim(snr_db);
  if (var == 0.0) return out;
  double sigma = std::sqrt(var);
  for (Symbol& s : out.symbols) {
    double nr = rng.gaussian();
    double ni = rng.gaussian();
    s += Symbol(sigma * nr, sigma * ni);
  }
  return out;
}

inline SymbolStream awgn(const SymbolStream& in, const ChannelConfig& cfg) {
  Rng rng(cfg.seed);
  return awgn(in, cfg.snr_db, rng);
}

// Es/N0 for 16QAM (4 bits per symbol) given Eb/N0, both in dB.
inline double esn0_from_ebn0_db(double ebn0_db) { return ebn0_db + 10.0 * std::log10(4.0); }

}  // namespace kgrag::phy
