#pragma once

// Canonical byte-level Huffman code built from corpus frequencies.
//
// Symbols are bytes. An optional escape symbol lets the encoder carry bytes
// absent from the corpus as escape code + 8-bit literal. A one-symbol
// alphabet gets a 1-bit code.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "kgrag/phy/bits.hpp"

namespace kgrag::phy {

struct HuffmanOptions {
  bool escape = false;
};

class HuffmanTable {
 public:
  static constexpr unsigned kEscape = 256;
  static constexpr unsigned kNumSymbols = 257;
  static constexpr unsigned kMaxCodeLength = 64;

  struct Code {
    std::uint64_t bits = 0;
    unsigned length = 0;  // 0 = symbol not in table
  };

  static HuffmanTable build(std::string_view corpus, const HuffmanOptions& opts = {}) {
    std::array<std::uint64_t, kNumSymbols> freq{};
    for (char c : corpus) ++freq[static_cast<unsigned char>(c)];
    if (opts.escape) freq[kEscape] = 1;
    return from_frequencies(freq);
  }

  static HuffmanTable from_frequencies(const std::array<std::uint64_t, kNumSymbols>& freq) {
    HuffmanTable t;
    std::array<unsigned, kNumSymbols> lengths{};
    compute_lengths(freq, lengths);
    t.assign_canonical(lengths);
    return t;
  }

  const Code& code(unsigned symbol) const { return codes_[symbol]; }
  bool has_symbol(unsigned symbol) const { return codes_[symbol].length != 0; }
  bool has_escape() const { return has_symbol(kEscape); }
  std::size_t alphabet_size() const { return sorted_.size(); }

  // Encoded size of `text` in bits. Throws when a byte is not encodable.
  std::size_t encoded_bits(std::string_view text) const {
    std::size_t n = 0;
    for (char c : text) {
      unsigned s = static_cast<unsigned char>(c);
      if (has_symbol(s)) {
        n += codes_[s].length;
      } else if (has_escape()) {
        n += codes_[kEscape].length + 8;
      } else {
        throw Error("byte " + std::to_string(s) + " has no Huffman code");
      }
    }
    return n;
  }

 private:
  friend struct HuffmanDecoder;

  static void compute_lengths(const std::array<std::uint64_t, kNumSymbols>& freq,
                              std::array<unsigned, kNumSymbols>& lengths) {
    struct Node {
      std::uint64_t weight;
      unsigned order;  // deterministic tie-break
      int left = -1, right = -1;
      int symbol = -1;
    };
    std::vector<Node> nodes;
    using Item = std::tuple<std::uint64_t, unsigned, int>;  // weight, order, node
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (unsigned s = 0; s < kNumSymbols; ++s) {
      if (freq[s] == 0) continue;
      nodes.push_back({freq[s], s, -1, -1, static_cast<int>(s)});
      heap.emplace(freq[s], s, static_cast<int>(nodes.size() - 1));
    }
    if (nodes.empty()) return;
    if (nodes.size() == 1) {
      lengths[static_cast<unsigned>(nodes[0].symbol)] = 1;
      return;
    }
    unsigned order = kNumSymbols;
    while (heap.size() > 1) {
      auto [wa, oa, a] = heap.top();
      heap.pop();
      auto [wb, ob, b] = heap.top();
      heap.pop();
      nodes.push_back({wa + wb, order, a, b, -1});
      heap.emplace(wa + wb, order++, static_cast<int>(nodes.size() - 1));
    }
    // Depth of every leaf.
    std::vector<std::pair<int, unsigned>> stack{{std::get<2>(heap.top()), 0u}};
    while (!stack.empty()) {
      auto [n, depth] = stack.back();
      stack.pop_back();
      const Node& node = nodes[static_cast<std::size_t>(n)];
      if (node.symbol >= 0) {
        if (depth > kMaxCodeLength) throw Error("Huffman code longer than 64 bits");
        lengths[static_cast<unsigned>(node.symbol)] = depth;
      } else {
        stack.push_back({node.left, depth + 1});
        stack.push_back({node.right, depth + 1});
      }
    }
  }

  // Codes ordered by (length, symbol), consecutive within a length.
  void assign_canonical(const std::array<unsigned, kNumSymbols>& lengths) {
    for (unsigned s = 0; s < kNumSymbols; ++s) {
      if (lengths[s]) sorted_.push_back(s);
    }
    std::stable_sort(sorted_.begin(), sorted_.end(),
                     [&](unsigned a, unsigned b) { return lengths[a] < lengths[b]; });
    std::uint64_t code = 0;
    unsigned prev_len = 0;
    for (std::size_t i = 0; i < sorted_.size(); ++i) {
      unsigned s = sorted_[i];
      unsigned len = lengths[s];
      if (i) code = (code + 1) << (len - prev_len);
      prev_len = len;
      codes_[s] = {code, len};
      if (count_.size() <= len) count_.resize(len + 1, 0);
      ++count_[len];
    }
    max_length_ = prev_len;
    first_code_.assign(max_length_ + 1, 0);
    first_index_.assign(max_length_ + 1, 0);
    std::uint64_t c = 0;
    std::size_t idx = 0;
    for (unsigned len = 1; len <= max_length_; ++len) {
      c <<= 1;
      first_code_[len] = c;
      first_index_[len] = idx;
      std::size_t n = len < count_.size() ? count_[len] : 0;
      c += n;
      idx += n;
    }
  }

  std::array<Code, kNumSymbols> codes_{};
  std::vector<unsigned> sorted_;  // symbols by (length, symbol)
  std::vector<std::size_t> count_;
  std::vector<std::uint64_t> first_code_;
  std::vector<std::size_t> first_index_;
  unsigned max_length_ = 0;
};

inline BitStream huffman_encode(std::string_view text, const HuffmanTable& table) {
  BitStream out;
  for (char c : text) {
    unsigned s = static_cast<unsigned char>(c);
    if (table.has_symbol(s)) {
      const auto& code = table.code(s);
      out.append_uint(code.bits, code.length);
    } else if (table.has_escape()) {
      const auto& esc = table.code(HuffmanTable::kEscape);
      out.append_uint(esc.bits, esc.length);
      out.append_uint(s, 8);
    } else {
      throw Error("byte " + std::to_string(s) + " has no Huffman code");
    }
  }
  return out;
}

struct HuffmanDecodeResult {
  std::string text;
  bool complete = true;  // false: stream ended mid-symbol or hit an unused code
  std::size_t bits_consumed = 0;
};

struct HuffmanDecoder {
  // Decodes until the stream ends. An invalid or truncated code stops
  // decoding; the text decoded so far is kept.
  static HuffmanDecodeResult decode(const BitStream& bits, const HuffmanTable& t) {
    HuffmanDecodeResult r;
    std::size_t pos = 0;
    while (pos < bits.size()) {
      std::uint64_t code = 0;
      std::optional<unsigned> symbol;
      std::size_t p = pos;
      for (unsigned len = 1; len <= t.max_length_ && p < bits.size(); ++len) {
        code = (code << 1) | bits.bits[p++];
        std::size_t n = len < t.count_.size() ? t.count_[len] : 0;
        if (n && code >= t.first_code_[len] && code - t.first_code_[len] < n) {
          symbol = t.sorted_[t.first_index_[len] + (code - t.first_code_[len])];
          break;
        }
      }
      if (!symbol) {
        r.complete = false;
        break;
      }
      if (*symbol == HuffmanTable::kEscape) {
        if (p + 8 > bits.size()) {
          r.complete = false;
          break;
        }
        r.text.push_back(static_cast<char>(bits.read_uint(p, 8)));
        p += 8;
      } else {
        r.text.push_back(static_cast<char>(*symbol));
      }
      pos = p;
    }
    r.bits_consumed = pos;
    return r;
  }
};

inline HuffmanDecodeResult huffman_decode(const BitStream& bits, const HuffmanTable& table) {
  return HuffmanDecoder::decode(bits, table);
}

}  // namespace kgrag::phy
