#pragma once

// Per-run records, bit accounting and the similarity metric.

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgrag/common.hpp"
#include "kgrag/embedding.hpp"
#include "kgrag/phy/frame.hpp"
#include "kgrag/phy/huffman.hpp"
#include "kgrag/phy/link.hpp"

namespace kgrag {

enum class Scheme { kKgrag, kHuffmanBaseline, kAscii };

inline constexpr Scheme kAllSchemes[] = {Scheme::kKgrag, Scheme::kHuffmanBaseline,
                                         Scheme::kAscii};

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kKgrag: return "kgrag";
    case Scheme::kHuffmanBaseline: return "huffman_baseline";
    case Scheme::kAscii: return "ascii";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view name) {
  for (Scheme s : kAllSchemes) {
    if (name == scheme_name(s)) return s;
  }
  throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

struct Similarity {
  double value = 0.0;
  bool empty_reconstruction = false;
};

// Cosine of the two sentence embeddings. An empty reconstruction scores 0.0
// and is flagged; embedder errors propagate.
inline Similarity semantic_similarity(const std::string& reference,
                                      const std::string& reconstructed, Embedder& embedder) {
  if (trim(reconstructed).empty()) return {0.0, true};
  if (trim(reference).empty()) throw Error("reference text is empty");
  std::string both[] = {reference, reconstructed};
  auto v = embedder.embed(both);
  return {cosine(v[0], v[1]), false};
}

struct BitCounts {
  std::size_t payload_bits = 0;
  std::size_t channel_bits = 0;
  friend bool operator==(const BitCounts&, const BitCounts&) = default;
};

inline BitCounts ascii_bits(std::string_view sentence) {
  return {8 * sentence.size(), 8 * sentence.size()};
}

// The baseline is sent uncoded, so both counts equal the code length.
inline BitCounts huffman_bits(std::string_view sentence, const phy::HuffmanTable& table) {
  std::size_t n = table.encoded_bits(sentence);
  return {n, n};
}

inline BitCounts kgrag_bits(std::size_t n_protected, std::size_t n_unprotected) {
  return {phy::frame_payload_bits(n_protected, n_unprotected),
          phy::uep_channel_bits(n_protected, n_unprotected)};
}

struct ExperimentRecord {
  std::size_t sentence_id = 0;
  double snr_db = 0.0;
  std::size_t trial = 0;
  Scheme scheme = Scheme::kKgrag;
  std::uint64_t seed = 0;
  std::size_t payload_bits = 0;
  std::size_t channel_bits = 0;
  double similarity = 0.0;
  std::size_t n_selected = 0;
  std::size_t n_mcsg_nodes = 0;
  std::size_t n_received_valid = 0;  // distinct received ids that are KG nodes
  std::size_t n_reconstructed = 0;   // nodes kept after component filtering
  std::size_t n_protected = 0;
  std::size_t n_unprotected = 0;
  std::size_t bit_errors = 0;
  bool exact = false;  // kgrag: subgraph recovered; baselines: text recovered
  std::vector<std::string> flags;
  std::string failure;  // "stage: message" when a stage threw

  bool failed() const { return !failure.empty(); }

  void flag(std::string f) {
    for (const auto& x : flags) {
      if (x == f) return;
    }
    flags.push_back(std::move(f));
  }
};

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view kRecordCsvHeader =
    "sentence_id,snr_db,trial,scheme,seed,payload_bits,channel_bits,similarity,"
    "n_selected,n_mcsg_nodes,n_received_valid,n_reconstructed,n_protected,"
    "n_unprotected,bit_errors,exact,flags,failure";

inline std::string format_snr(double snr_db) {
  if (std::isinf(snr_db)) return snr_db > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", snr_db);
  return buf;
}

inline std::string format_fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

// Quotes a field when it holds a comma, quote or newline.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string to_csv_row(const ExperimentRecord& r) {
  std::vector<std::string> f = {
      std::to_string(r.sentence_id),
      format_snr(r.snr_db),
      std::to_string(r.trial),
      scheme_name(r.scheme),
      std::to_string(r.seed),
      std::to_string(r.payload_bits),
      std::to_string(r.channel_bits),
      format_fixed(r.similarity),
      std::to_string(r.n_selected),
      std::to_string(r.n_mcsg_nodes),
      std::to_string(r.n_received_valid),
      std::to_string(r.n_reconstructed),
      std::to_string(r.n_protected),
      std::to_string(r.n_unprotected),
      std::to_string(r.bit_errors),
      r.exact ? "1" : "0",
      csv_field(join(r.flags, ";")),
      csv_field(r.failure),
  };
  return join(f, ",");
}

}  // namespace kgrag
