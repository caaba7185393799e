#pragma once

// UEP frame wire format (big-endian throughout):
//
//   coded stream:   n_protected:16  n_unprotected:16  protected ids (32 each)
//   uncoded stream: unprotected ids (32 each)
//
// The header always travels in the coded stream.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "kgrag/phy/bits.hpp"
#include "kgrag/semgraph.hpp"

namespace kgrag::phy {

inline constexpr unsigned kIdBits = 32;
inline constexpr unsigned kCountBits = 16;
inline constexpr unsigned kHeaderBits = 2 * kCountBits;
inline constexpr std::size_t kMaxIdsPerClass = 0xFFFF;

struct TransmissionFrame {
  NodeIdPayload protected_ids;
  NodeIdPayload unprotected_ids;

  std::size_t total_ids() const { return protected_ids.size() + unprotected_ids.size(); }
  friend bool operator==(const TransmissionFrame&, const TransmissionFrame&) = default;
};

struct FrameBits {
  BitStream coded;    // header + protected ids, destined for the encoder
  BitStream uncoded;  // unprotected ids
};

inline void validate_frame(const TransmissionFrame& f) {
  for (const NodeIdPayload* p : {&f.protected_ids, &f.unprotected_ids}) {
    if (p->size() > kMaxIdsPerClass) {
      throw Error("frame class holds " + std::to_string(p->size()) +
                  " ids; at most 65535 fit the header");
    }
    if (!std::is_sorted(p->ids.begin(), p->ids.end()) ||
        std::adjacent_find(p->ids.begin(), p->ids.end()) != p->ids.end()) {
      throw Error("frame id lists must be ascending and distinct");
    }
  }
  for (NodeId id : f.protected_ids.ids) {
    if (std::binary_search(f.unprotected_ids.ids.begin(), f.unprotected_ids.ids.end(), id)) {
      throw Error("id " + std::to_string(id) + " appears in both protection classes");
    }
  }
}

inline FrameBits serialize_frame(const TransmissionFrame& f) {
  validate_frame(f);
  FrameBits out;
  out.coded.append_uint(f.protected_ids.size(), kCountBits);
  out.coded.append_uint(f.unprotected_ids.size(), kCountBits);
  for (NodeId id : f.protected_ids.ids) out.coded.append_uint(id, kIdBits);
  for (NodeId id : f.unprotected_ids.ids) out.uncoded.append_uint(id, kIdBits);
  return out;
}

struct ParsedFrame {
  std::vector<NodeId> protected_ids;  // in received order, may be corrupted
  std::vector<NodeId> unprotected_ids;
  bool header_consistent = false;
};

// Parses received streams. The receiver knows each stream's length from the
// physical framing; when the header counts disagree with those lengths, every
// whole 32-bit id that is present is parsed.
inline ParsedFrame parse_frame(const BitStream& coded, const BitStream& uncoded) {
  ParsedFrame p;
  std::size_t avail_p = coded.size() >= kHeaderBits ? (coded.size() - kHeaderBits) / kIdBits : 0;
  std::size_t avail_u = uncoded.size() / kIdBits;
  if (coded.size() >= kHeaderBits) {
    std::size_t np = coded.read_uint(0, kCountBits);
    std::size_t nu = coded.read_uint(kCountBits, kCountBits);
    p.header_consistent = np == avail_p && nu == avail_u &&
                          coded.size() == kHeaderBits + np * kIdBits &&
                          uncoded.size() == nu * kIdBits;
  }
  for (std::size_t i = 0; i < avail_p; ++i) {
    p.protected_ids.push_back(static_cast<NodeId>(coded.read_uint(kHeaderBits + i * kIdBits, kIdBits)));
  }
  for (std::size_t i = 0; i < avail_u; ++i) {
    p.unprotected_ids.push_back(static_cast<NodeId>(uncoded.read_uint(i * kIdBits, kIdBits)));
  }
  return p;
}

// Bits carried by the frame before channel coding.
inline std::size_t frame_payload_bits(std::size_t n_protected, std::size_t n_unprotected) {
  return kHeaderBits + kIdBits * (n_protected + n_unprotected);
}

}  // namespace kgrag::phy
