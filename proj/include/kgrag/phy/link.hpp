#pragma once

// UEP link: the coded stream goes through the convolutional code, both
// streams are 16QAM modulated over the same AWGN channel.

#include <vector>

#include "kgrag/phy/channel.hpp"
#include "kgrag/phy/convolutional.hpp"
#include "kgrag/phy/frame.hpp"
#include "kgrag/phy/qam16.hpp"

namespace kgrag::phy {

struct LinkDiagnostics {
  std::size_t n_protected = 0;
  std::size_t n_unprotected = 0;
  std::size_t payload_bits = 0;        // header + ids, before coding
  std::size_t coded_info_bits = 0;     // header + protected ids
  std::size_t coded_channel_bits = 0;  // 2 * (coded_info_bits + 6)
  std::size_t uncoded_channel_bits = 0;
  std::size_t channel_bits = 0;
  std::size_t coded_bit_errors = 0;    // after Viterbi, info bits only
  std::size_t uncoded_bit_errors = 0;
  bool header_consistent = false;
};

struct LinkResult {
  std::vector<NodeId> received_ids;  // protected first, then unprotected
  LinkDiagnostics diagnostics;
};

inline std::size_t uep_channel_bits(std::size_t n_protected, std::size_t n_unprotected) {
  return encoded_length(kHeaderBits + kIdBits * n_protected) + kIdBits * n_unprotected;
}

// Passes `bits` through modulate -> AWGN -> demodulate.
inline BitStream over_channel(const BitStream& bits, double snr_db, Rng& rng) {
  return qam16_demodulate(awgn(qam16_modulate(bits), snr_db, rng));
}

inline LinkResult transmit(const TransmissionFrame& frame, const ChannelConfig& cfg) {
  FrameBits tx = serialize_frame(frame);
  Rng rng(cfg.seed);

  BitStream coded_rx = viterbi_decode(over_channel(conv_encode(tx.coded), cfg.snr_db, rng));
  BitStream uncoded_rx = over_channel(tx.uncoded, cfg.snr_db, rng);
  ParsedFrame parsed = parse_frame(coded_rx, uncoded_rx);

  LinkResult r;
  r.received_ids = parsed.protected_ids;
  r.received_ids.insert(r.received_ids.end(), parsed.unprotected_ids.begin(),
                        parsed.unprotected_ids.end());
  LinkDiagnostics& d = r.diagnostics;
  d.n_protected = frame.protected_ids.size();
  d.n_unprotected = frame.unprotected_ids.size();
  d.payload_bits = frame_payload_bits(d.n_protected, d.n_unprotected);
  d.coded_info_bits = tx.coded.size();
  d.coded_channel_bits = encoded_length(tx.coded.size());
  d.uncoded_channel_bits = tx.uncoded.size();
  d.channel_bits = d.coded_channel_bits + d.uncoded_channel_bits;
  d.coded_bit_errors = hamming_distance(tx.coded, coded_rx);
  d.uncoded_bit_errors = hamming_distance(tx.uncoded, uncoded_rx);
  d.header_consistent = parsed.header_consistent;
  return r;
}

}  // namespace kgrag::phy
