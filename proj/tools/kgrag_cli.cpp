// kgrag command line: KG preparation, single-shot runs, sweeps and the
// baseline bit accounting. Errors end with exit code 1 and one JSON line on
// stderr: {"error": "<kind>", "message": "..."}.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgrag/kgrag.hpp"

using namespace kgrag;

namespace {

double parse_snr(const std::string& s) {
  std::string c = canonicalize(s);
  if (c == "inf" || c == "none" || c == "noiseless") return phy::kNoNoise;
  try {
    std::size_t used = 0;
    double v = std::stod(c, &used);
    if (used == c.size() && !std::isnan(v)) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("invalid SNR '" + s + "' (expected dB value or inf)");
}

std::string names_of(const std::vector<NodeId>& ids, const KnowledgeGraph& kg) {
  std::string out;
  for (NodeId id : ids) {
    const Entity* e = kg.entity_by_id(id);
    if (!out.empty()) out += ", ";
    out += std::to_string(id) + ":" + (e ? e->name : "?");
  }
  return out.empty() ? "(none)" : out;
}

int fail(const std::string& kind, const std::string& message) {
  nlohmann::json j = {{"error", kind}, {"message", message}};
  std::cerr << j.dump() << '\n';
  return 1;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  return f;
}

int cmd_build_kg(const std::string& input, const std::string& out, const std::string& enrich) {
  auto lines = read_lines_from_file(input);
  KgRecords rec = parse_kg_records(lines);
  std::size_t filled = 0;
  if (enrich == "http") {
    HttpChatModel model(RemoteConfig::from_env("KGRAG_CHAT"));
    filled = enrich_records(rec, model);
  } else if (!enrich.empty() && enrich != "none") {
    throw ConfigError("unknown enrichment backend '" + enrich + "'");
  }
  KnowledgeGraph kg = KnowledgeGraph::build(rec);
  kg.save_file(out);
  std::cout << "entities=" << kg.num_entities() << " triples=" << kg.num_triples()
            << " communities=" << kg.communities().size() << " enriched=" << filled << '\n';
  return 0;
}

int cmd_extract(const std::string& kg_path, const std::string& sentence,
                const BackendSelection& backends, std::size_t top_k) {
  Session session(KnowledgeGraph::load_file(kg_path), backends,
                  phy::HuffmanTable::build("", {.escape = true}), {}, {top_k});
  PipelineContext ctx = session.context();
  TransmitterState tx = prepare_transmitter(sentence, ctx);
  if (!tx.failure.empty()) throw Error(tx.failure);
  const KnowledgeGraph& kg = session.kg();
  const ExtractionResult& ex = tx.extraction;
  for (const Mention& m : ex.mentions) {
    std::cout << "mention\t" << m.surface << "\t[" << m.start << "," << m.end << ")\n";
  }
  for (NodeId id : ex.candidates.candidates) {
    const Provenance& p = ex.candidates.provenance.at(id);
    std::cout << "candidate\t" << id << '\t' << kg.entity_by_id(id)->name << "\tfrom="
              << ex.mentions.at(p.mention).surface << "\tsimilarity=" << format_fixed(p.similarity) << '\n';
  }
  for (NodeId id : ex.selected.ids) {
    std::cout << "selected\t" << id << '\t' << kg.entity_by_id(id)->name << '\n';
  }
  for (const std::string& w : ex.selected.warnings) std::cout << "warning\t" << w << '\n';
  if (ex.empty()) std::cout << "note\textraction produced no entities\n";
  return 0;
}

int cmd_send(const std::string& kg_path, const std::string& sentence, double snr,
             std::uint64_t seed, const BackendSelection& backends) {
  Session session(KnowledgeGraph::load_file(kg_path), backends,
                  phy::HuffmanTable::build("", {.escape = true}));
  PipelineContext ctx = session.context();
  const KnowledgeGraph& kg = session.kg();
  TransmitterState tx = prepare_transmitter(sentence, ctx);
  PipelineTrace trace;
  ExperimentRecord r = run_pipeline(sentence, {0, snr, 0, seed}, ctx, tx, &trace);

  std::cout << "[1 extract]     mentions=" << tx.extraction.mentions.size()
            << " candidates=" << tx.extraction.candidates.candidates.size() << '\n'
            << "                selected: " << names_of(tx.extraction.selected.ids, kg) << '\n';
  std::cout << "[2 mcsg]        nodes=" << tx.mcsg.nodes.size() << " edges=" << tx.mcsg.edges.size()
            << '\n';
  if (!tx.importance.empty()) {
    std::cout << "[3 importance]  threshold=" << format_fixed(trace.partition.threshold, 3) << '\n';
    for (const auto& [id, row] : tx.importance) {
      std::cout << "                " << id << ':' << kg.entity_by_id(id)->name
                << " degree=" << row.degree_raw
                << " betweenness=" << format_fixed(row.betweenness_raw, 3)
                << " score=" << format_fixed(row.score, 3) << '\n';
    }
    std::cout << "                protected: " << names_of(trace.partition.protected_ids.ids, kg)
              << '\n';
  }
  const phy::LinkDiagnostics& d = trace.link.diagnostics;
  std::cout << "[4 link]        snr_db=" << format_snr(snr) << " seed=" << seed
            << " payload_bits=" << d.payload_bits << " channel_bits=" << d.channel_bits
            << " coded_errors=" << d.coded_bit_errors << " uncoded_errors=" << d.uncoded_bit_errors
            << " header_ok=" << (d.header_consistent ? 1 : 0) << '\n';
  std::cout << "[5 reconstruct] valid=" << r.n_received_valid << " kept=" << r.n_reconstructed
            << " exact=" << (r.exact ? 1 : 0) << '\n';
  std::cout << "[6 generate]    backend=" << backend_name(trace.text.backend_used)
            << (trace.text.fallback ? " (fallback: " + trace.text.diagnostic + ")" : "") << '\n'
            << "                text: " << trace.text.text << '\n';
  std::cout << "[7 similarity]  " << format_fixed(r.similarity) << '\n';
  if (!r.flags.empty()) std::cout << "flags: " << join(r.flags, ";") << '\n';
  if (r.failed()) throw Error(r.failure);
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out) {
  SweepConfig config = load_sweep_config(config_path);
  SweepReport report = run_sweep(config);
  ReportPaths paths = write_report(report, out);
  std::size_t failures = 0;
  for (const auto& r : report.records) failures += r.failed() ? 1 : 0;
  std::cout << "records=" << report.records.size() << " failures=" << failures << '\n'
            << "wrote " << paths.records << ", " << paths.summary << ", " << paths.cumulative
            << '\n';
  return 0;
}

int cmd_baseline(const std::string& corpus_path, const std::string& out) {
  auto corpus = load_corpus(corpus_path);
  phy::HuffmanTable table = baseline_table(corpus);
  auto f = open_out(out);
  f << "sentence_id,chars,ascii_bits,huffman_bits,cumulative_ascii_bits,"
       "cumulative_huffman_bits,roundtrip\n";
  std::size_t ca = 0, ch = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    BitCounts a = ascii_bits(corpus[i]);
    BitCounts h = huffman_bits(corpus[i], table);
    ca += a.payload_bits;
    ch += h.payload_bits;
    bool ok = phy::huffman_decode(phy::huffman_encode(corpus[i], table), table).text == corpus[i];
    f << i << ',' << corpus[i].size() << ',' << a.payload_bits << ',' << h.payload_bits << ','
      << ca << ',' << ch << ',' << (ok ? 1 : 0) << '\n';
  }
  std::cout << "sentences=" << corpus.size() << " ascii_bits=" << ca << " huffman_bits=" << ch
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph RAG semantic communication simulator"};
  app.require_subcommand(1);

  std::string input, out, enrich, kg_path, sentence, snr_text = "inf", config_path, corpus;
  std::uint64_t seed = 0;
  std::size_t top_k = kDefaultTopK;
  BackendSelection backends;

  auto* build = app.add_subcommand("build-kg", "Validate and normalise a KG file");
  build->add_option("--input", input, "KG TSV file")->required();
  build->add_option("--out", out, "Output KG TSV file")->required();
  build->add_option("--enrich", enrich, "Fill missing descriptions: none|http");

  auto* ext = app.add_subcommand("extract", "Run entity extraction on one sentence");
  ext->add_option("--kg", kg_path, "KG TSV file")->required();
  ext->add_option("--sentence", sentence, "Source sentence")->required();
  ext->add_option("--extract-backend", backends.extraction, "stub|http")
      ->check(CLI::IsMember({"stub", "http"}));
  ext->add_option("--embed-backend", backends.embedding, "stub|http")
      ->check(CLI::IsMember({"stub", "http"}));
  ext->add_option("--top-k", top_k, "Entities per mention")->check(CLI::PositiveNumber);

  auto* send = app.add_subcommand("send", "Transmit one sentence and trace every stage");
  send->add_option("--kg", kg_path, "KG TSV file")->required();
  send->add_option("--sentence", sentence, "Source sentence")->required();
  send->add_option("--snr", snr_text, "Es/N0 in dB, or inf")->required();
  send->add_option("--seed", seed, "Channel seed")->required();
  send->add_option("--extract-backend", backends.extraction, "stub|http")
      ->check(CLI::IsMember({"stub", "http"}));
  send->add_option("--embed-backend", backends.embedding, "stub|http")
      ->check(CLI::IsMember({"stub", "http"}));
  send->add_option("--gen-backend,--generate-backend", backends.generation, "stub|http")
      ->check(CLI::IsMember({"stub", "http"}));

  auto* sweep = app.add_subcommand("sweep", "Run a seeded SNR sweep");
  sweep->add_option("--config", config_path, "Sweep config (JSON)")->required();
  sweep->add_option("--out", out, "Record CSV; summary and cumulative CSVs go alongside")
      ->required();

  auto* base = app.add_subcommand("baseline", "Per-sentence ASCII and Huffman bit counts");
  base->add_option("--corpus", corpus, "Corpus, one sentence per line")->required();
  base->add_option("--out", out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", e.what());
  }

  try {
    if (*build) return cmd_build_kg(input, out, enrich);
    if (*ext) return cmd_extract(kg_path, sentence, backends, top_k);
    if (*send) return cmd_send(kg_path, sentence, parse_snr(snr_text), seed, backends);
    if (*sweep) return cmd_sweep(config_path, out);
    if (*base) return cmd_baseline(corpus, out);
  } catch (const FormatError& e) {
    return fail("format", e.what());
  } catch (const ConfigError& e) {
    return fail("config", e.what());
  } catch (const LookupError& e) {
    return fail("lookup", e.what());
  } catch (const TransportError& e) {
    return fail("transport", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
  return fail("usage", "no subcommand");
}
