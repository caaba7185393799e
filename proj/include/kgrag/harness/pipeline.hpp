#pragma once

// One end-to-end transmission of a sentence under a given scheme.
//
// kgrag: extract -> MCSG -> importance / UEP split -> link -> reconstruct ->
// prompt -> generate -> similarity. The transmitter half up to the
// importance table does not depend on the channel and can be prepared once
// per sentence.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kgrag/embedding.hpp"
#include "kgrag/extraction.hpp"
#include "kgrag/generation.hpp"
#include "kgrag/harness/metrics.hpp"
#include "kgrag/importance.hpp"
#include "kgrag/kg_store.hpp"
#include "kgrag/phy/huffman.hpp"
#include "kgrag/phy/link.hpp"
#include "kgrag/semgraph.hpp"

namespace kgrag {

// Everything a run needs. The referenced objects must outlive the context
// and be safe for concurrent use when runs are parallel.
struct PipelineContext {
  const KnowledgeGraph& kg;
  const EmbeddingIndex& index;
  Embedder& embedder;  // search and similarity
  const Recognizer& recognizer;
  Selector& selector;
  Generator& generator;
  const phy::HuffmanTable& huffman;
  ImportanceConfig importance;
  ExtractionConfig extraction;
  ReconstructOptions reconstruct;
};

struct TransmitterState {
  ExtractionResult extraction;
  Mcsg mcsg;
  ImportanceTable importance;  // empty when the MCSG is empty
  std::string failure;         // set when extraction or scoring threw
};

inline TransmitterState prepare_transmitter(const std::string& sentence,
                                            const PipelineContext& ctx) {
  TransmitterState t;
  std::string stage = "extract";
  try {
    t.extraction = extract(sentence, ctx.kg, ctx.index, ctx.embedder, ctx.recognizer,
                           ctx.selector, ctx.extraction);
    stage = "mcsg";
    t.mcsg = build_mcsg(t.extraction.selected.ids, ctx.kg);
    stage = "importance";
    if (!t.mcsg.empty()) t.importance = importance_scores(t.mcsg, ctx.importance);
  } catch (const std::exception& e) {
    t.failure = stage + ": " + e.what();
  }
  return t;
}

// Stage-by-stage intermediate state of a kgrag run, for tracing.
struct PipelineTrace {
  const TransmitterState* transmitter = nullptr;
  UepPartition partition;
  phy::LinkResult link;
  Mcsg received;
  Prompt prompt;
  ReconstructedText text;
};

inline std::size_t count_valid(const std::vector<NodeId>& ids, const KnowledgeGraph& kg) {
  std::vector<NodeId> v;
  for (NodeId id : ids) {
    if (kg.contains(id)) v.push_back(id);
  }
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

struct RunSpec {
  std::size_t sentence_id = 0;
  double snr_db = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
};

inline ExperimentRecord run_pipeline(const std::string& sentence, const RunSpec& spec,
                                     const PipelineContext& ctx, const TransmitterState& tx,
                                     PipelineTrace* trace = nullptr) {
  ExperimentRecord r;
  r.sentence_id = spec.sentence_id;
  r.snr_db = spec.snr_db;
  r.trial = spec.trial;
  r.seed = spec.seed;
  r.scheme = Scheme::kKgrag;
  if (trace) trace->transmitter = &tx;
  if (!tx.failure.empty()) {
    r.failure = tx.failure;
    return r;
  }
  r.n_selected = tx.extraction.selected.ids.size();
  r.n_mcsg_nodes = tx.mcsg.nodes.size();
  if (tx.mcsg.empty()) r.flag("no_entities");

  std::string stage = "partition";
  try {
    UepPartition part;
    if (!tx.mcsg.empty()) part = partition_uep(tx.importance, spec.snr_db, ctx.importance);
    r.n_protected = part.protected_ids.size();
    r.n_unprotected = part.unprotected_ids.size();

    stage = "transmit";
    phy::TransmissionFrame frame{part.protected_ids, part.unprotected_ids};
    phy::LinkResult link = phy::transmit(frame, {spec.snr_db, spec.seed});
    r.payload_bits = link.diagnostics.payload_bits;
    r.channel_bits = link.diagnostics.channel_bits;
    r.bit_errors = link.diagnostics.coded_bit_errors + link.diagnostics.uncoded_bit_errors;
    if (!link.diagnostics.header_consistent) r.flag("header_mismatch");
    r.n_received_valid = count_valid(link.received_ids, ctx.kg);

    stage = "reconstruct";
    Mcsg received = reconstruct(link.received_ids, ctx.kg, ctx.reconstruct);
    r.n_reconstructed = received.nodes.size();
    r.exact = received.nodes == tx.mcsg.nodes;

    stage = "generate";
    ReconstructedText text = reconstruct_text(received, ctx.kg, ctx.generator);
    if (text.fallback) r.flag("generation_fallback");

    stage = "similarity";
    Similarity sim = semantic_similarity(sentence, text.text, ctx.embedder);
    r.similarity = sim.value;
    if (sim.empty_reconstruction) r.flag("empty_reconstruction");

    if (trace) {
      trace->partition = std::move(part);
      trace->link = std::move(link);
      if (!received.empty()) trace->prompt = build_prompt(received, ctx.kg);
      trace->received = std::move(received);
      trace->text = std::move(text);
    }
  } catch (const std::exception& e) {
    r.failure = stage + ": " + e.what();
  }
  return r;
}

// Huffman baseline: corpus-trained code, sent uncoded over the same link. A
// corrupted stream decodes up to the last valid symbol.
inline ExperimentRecord run_huffman_baseline(const std::string& sentence, const RunSpec& spec,
                                             const PipelineContext& ctx) {
  ExperimentRecord r;
  r.sentence_id = spec.sentence_id;
  r.snr_db = spec.snr_db;
  r.trial = spec.trial;
  r.seed = spec.seed;
  r.scheme = Scheme::kHuffmanBaseline;
  std::string stage = "encode";
  try {
    phy::BitStream tx = phy::huffman_encode(sentence, ctx.huffman);
    r.payload_bits = r.channel_bits = tx.size();
    stage = "transmit";
    Rng rng(spec.seed);
    phy::BitStream rx = phy::over_channel(tx, spec.snr_db, rng);
    r.bit_errors = phy::hamming_distance(tx, rx);
    stage = "decode";
    phy::HuffmanDecodeResult dec = phy::huffman_decode(rx, ctx.huffman);
    if (!dec.complete) r.flag("truncated");
    r.exact = dec.text == sentence;
    stage = "similarity";
    Similarity sim = semantic_similarity(sentence, dec.text, ctx.embedder);
    r.similarity = sim.value;
    if (sim.empty_reconstruction) r.flag("empty_reconstruction");
  } catch (const std::exception& e) {
    r.failure = stage + ": " + e.what();
  }
  return r;
}

// Raw 8-bit text, uncoded.
inline ExperimentRecord run_ascii(const std::string& sentence, const RunSpec& spec,
                                  const PipelineContext& ctx) {
  ExperimentRecord r;
  r.sentence_id = spec.sentence_id;
  r.snr_db = spec.snr_db;
  r.trial = spec.trial;
  r.seed = spec.seed;
  r.scheme = Scheme::kAscii;
  std::string stage = "transmit";
  try {
    phy::BitStream tx;
    for (char c : sentence) tx.append_uint(static_cast<unsigned char>(c), 8);
    r.payload_bits = r.channel_bits = tx.size();
    Rng rng(spec.seed);
    phy::BitStream rx = phy::over_channel(tx, spec.snr_db, rng);
    r.bit_errors = phy::hamming_distance(tx, rx);
    std::string text;
    for (std::size_t i = 0; i + 8 <= rx.size(); i += 8) {
      text.push_back(static_cast<char>(rx.read_uint(i, 8)));
    }
    r.exact = text == sentence;
    stage = "similarity";
    Similarity sim = semantic_similarity(sentence, text, ctx.embedder);
    r.similarity = sim.value;
    if (sim.empty_reconstruction) r.flag("empty_reconstruction");
  } catch (const std::exception& e) {
    r.failure = stage + ": " + e.what();
  }
  return r;
}

inline ExperimentRecord run_scheme(Scheme scheme, const std::string& sentence,
                                   const RunSpec& spec, const PipelineContext& ctx,
                                   const TransmitterState& tx) {
  switch (scheme) {
    case Scheme::kKgrag: return run_pipeline(sentence, spec, ctx, tx);
    case Scheme::kHuffmanBaseline: return run_huffman_baseline(sentence, spec, ctx);
    case Scheme::kAscii: return run_ascii(sentence, spec, ctx);
  }
  throw Error("unknown scheme");
}

}  // namespace kgrag
