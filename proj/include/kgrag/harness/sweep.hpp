#pragma once

// Seeded SNR sweeps over a corpus, the backend session that wires the stages
// together, and the CSV reports.
//
// Sweep config (JSON; relative paths resolve against the config's directory):
//
//   {
//     "corpus": "fixture_corpus.txt",
//     "kg": "sample_kg.tsv",
//     "snr_grid": [0, 2, 4, "inf"],       // dB; "inf" = noiseless
//     "trials": 10,
//     "seed": 1,
//     "schemes": ["kgrag", "huffman_baseline", "ascii"],
//     "backends": {"embedding": "stub", "extraction": "stub", "generation": "stub"},
//     "importance": {"alpha": 0.5, "threshold_breakpoints": [[0, 0.0], [12, 0.8]]},
//     "top_k": 3,
//     "threads": 0,                        // 0 = hardware concurrency
//     "max_sentences": 0                   // 0 = whole corpus
//   }
//
// "http" backends read their endpoints from KGRAG_EMBED_URL / KGRAG_EMBED_MODEL
// and KGRAG_CHAT_URL / KGRAG_CHAT_MODEL, and the bearer token from
// KGRAG_API_KEY.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kgrag/harness/metrics.hpp"
#include "kgrag/harness/pipeline.hpp"
#include "kgrag/remote.hpp"

namespace kgrag {

struct BackendSelection {
  std::string embedding = "stub";   // stub | http
  std::string extraction = "stub";  // stub | http
  std::string generation = "stub";  // stub | http
};

struct SweepConfig {
  std::vector<double> snr_grid;
  std::size_t trials = 1;
  std::string corpus_path;
  std::string kg_path;
  BackendSelection backends;
  ImportanceConfig importance;
  std::uint64_t seed = 0;
  std::vector<Scheme> schemes{std::begin(kAllSchemes), std::end(kAllSchemes)};
  std::size_t top_k = kDefaultTopK;
  std::size_t threads = 0;
  std::size_t max_sentences = 0;
  std::size_t embedding_dim = kDefaultEmbeddingDim;

  void validate() const {
    if (snr_grid.empty()) throw ConfigError("snr_grid is empty");
    for (double s : snr_grid) {
      if (std::isnan(s)) throw ConfigError("snr_grid holds NaN");
    }
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (schemes.empty()) throw ConfigError("no schemes selected");
    if (top_k < 1) throw ConfigError("top_k must be at least 1");
    importance.validate();
    for (const std::string* b :
         {&backends.embedding, &backends.extraction, &backends.generation}) {
      if (*b != "stub" && *b != "http") throw ConfigError("unknown backend '" + *b + "'");
    }
  }
};

namespace detail {

inline double json_snr(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    std::string s = canonicalize(v.get<std::string>());
    if (s == "inf" || s == "none" || s == "noiseless") return phy::kNoNoise;
  }
  throw ConfigError("snr_grid entries must be numbers or \"inf\"");
}

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? p : (base / path).string();
}

}  // namespace detail

inline SweepConfig parse_sweep_config(const nlohmann::json& j,
                                      const std::filesystem::path& base_dir = {}) {
  SweepConfig c;
  try {
    if (!j.is_object()) throw ConfigError("sweep config must be a JSON object");
    if (!j.contains("corpus") || !j.contains("kg") || !j.contains("snr_grid")) {
      throw ConfigError("sweep config needs corpus, kg and snr_grid");
    }
    c.corpus_path = detail::resolve(base_dir, j.at("corpus").get<std::string>());
    c.kg_path = detail::resolve(base_dir, j.at("kg").get<std::string>());
    for (const auto& v : j.at("snr_grid")) c.snr_grid.push_back(detail::json_snr(v));
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    c.top_k = j.value("top_k", c.top_k);
    c.threads = j.value("threads", c.threads);
    c.max_sentences = j.value("max_sentences", c.max_sentences);
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    if (j.contains("schemes")) {
      c.schemes.clear();
      for (const auto& s : j.at("schemes")) c.schemes.push_back(parse_scheme(s.get<std::string>()));
    }
    if (j.contains("backends")) {
      const auto& b = j.at("backends");
      c.backends.embedding = b.value("embedding", c.backends.embedding);
      c.backends.extraction = b.value("extraction", c.backends.extraction);
      c.backends.generation = b.value("generation", c.backends.generation);
    }
    if (j.contains("importance")) {
      const auto& im = j.at("importance");
      c.importance.alpha = im.value("alpha", c.importance.alpha);
      if (im.contains("threshold_breakpoints")) {
        std::vector<ThresholdPolicy::Breakpoint> pts;
        for (const auto& p : im.at("threshold_breakpoints")) {
          if (!p.is_array() || p.size() != 2) {
            throw ConfigError("threshold breakpoints are [snr_db, threshold] pairs");
          }
          pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        }
        c.importance.threshold_policy = ThresholdPolicy(std::move(pts));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sweep config: ") + e.what());
  }
  c.validate();
  return c;
}

inline SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_sweep_config(j, std::filesystem::path(path).parent_path());
}

// One sentence per line; blank lines are skipped.
inline std::vector<std::string> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus '" + path + "'");
  std::vector<std::string> out;
  for (std::string& line : read_lines(in)) {
    std::string s(trim(line));
    if (!s.empty()) out.push_back(std::move(s));
  }
  if (out.empty()) throw Error("corpus '" + path + "' is empty");
  return out;
}

inline std::string corpus_text(const std::vector<std::string>& corpus) {
  std::string all;
  for (const auto& s : corpus) all += s + "\n";
  return all;
}

// Owns the KG, the backends and the index built from them. Not movable: the
// context holds references into it.
class Session {
 public:
  Session(KnowledgeGraph kg, const BackendSelection& backends, const phy::HuffmanTable& huffman,
          ImportanceConfig importance = {}, ExtractionConfig extraction = {},
          std::size_t embedding_dim = kDefaultEmbeddingDim)
      : kg_(std::move(kg)), huffman_(huffman), recognizer_(kg_) {
    if (backends.embedding == "http") {
      embedder_ = std::make_unique<HttpEmbedder>(RemoteConfig::from_env("KGRAG_EMBED"),
                                                 embedding_dim);
    } else {
      embedder_ = std::make_unique<StubEmbedder>(embedding_dim);
    }
    if (backends.extraction == "http" || backends.generation == "http") {
      chat_ = std::make_unique<HttpChatModel>(RemoteConfig::from_env("KGRAG_CHAT"));
    }
    if (backends.extraction == "http") {
      selector_ = std::make_unique<ModelSelector>(*chat_);
    } else {
      selector_ = std::make_unique<StubSelector>();
    }
    if (backends.generation == "http") {
      generator_ = std::make_unique<ModelGenerator>(*chat_);
    } else {
      generator_ = std::make_unique<StubGenerator>();
    }
    index_ = EmbeddingIndex::build(kg_, *embedder_);
    importance_ = importance;
    extraction_ = extraction;
  }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  PipelineContext context() {
    return PipelineContext{kg_,         index_,     *embedder_,  recognizer_, *selector_,
                           *generator_, huffman_,   importance_, extraction_, {}};
  }

  const KnowledgeGraph& kg() const { return kg_; }
  Embedder& embedder() { return *embedder_; }

 private:
  KnowledgeGraph kg_;
  phy::HuffmanTable huffman_;
  GazetteerRecognizer recognizer_;
  std::unique_ptr<Embedder> embedder_;
  std::unique_ptr<ChatModel> chat_;
  std::unique_ptr<Selector> selector_;
  std::unique_ptr<Generator> generator_;
  EmbeddingIndex index_;
  ImportanceConfig importance_;
  ExtractionConfig extraction_;
};

struct SummaryRow {
  Scheme scheme = Scheme::kKgrag;
  double snr_db = 0.0;
  std::size_t count = 0;  // records with a similarity, failures excluded
  std::size_t failures = 0;
  double mean_similarity = 0.0;
  double std_similarity = 0.0;  // population standard deviation
  double mean_payload_bits = 0.0;
  double mean_channel_bits = 0.0;
  double exact_rate = 0.0;
};

struct CumulativeRow {
  Scheme scheme = Scheme::kKgrag;
  double snr_db = 0.0;
  std::size_t sentence_id = 0;
  std::size_t payload_bits = 0;
  std::size_t channel_bits = 0;
  std::size_t cumulative_payload_bits = 0;
  std::size_t cumulative_channel_bits = 0;
};

struct SweepReport {
  std::vector<ExperimentRecord> records;  // (sentence, snr, trial, scheme) order
  std::vector<SummaryRow> summary;        // (scheme, snr) order
  std::vector<CumulativeRow> cumulative;  // (scheme, snr, sentence) order, trial 0
};

inline std::uint64_t record_seed(std::uint64_t base, std::size_t sentence_id,
                                 std::size_t snr_index, std::size_t trial) {
  return mix_seed(mix_seed(mix_seed(base, sentence_id), snr_index), trial);
}

inline std::size_t worker_count(std::size_t requested, std::size_t jobs) {
  std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, jobs));
}

// Runs fn(i) for i in [0, n) on `threads` workers. The first exception is
// rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::size_t k = worker_count(threads, n);
  if (k == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < k; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

inline std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records,
                                         const std::vector<Scheme>& schemes,
                                         const std::vector<double>& snr_grid) {
  std::vector<SummaryRow> out;
  for (Scheme scheme : schemes) {
    for (double snr : snr_grid) {
      SummaryRow row;
      row.scheme = scheme;
      row.snr_db = snr;
      double sum = 0.0, sum_sq = 0.0, payload = 0.0, channel = 0.0, exact = 0.0;
      for (const ExperimentRecord& r : records) {
        if (r.scheme != scheme || !(r.snr_db == snr)) continue;
        if (r.failed()) {
          ++row.failures;
          continue;
        }
        ++row.count;
        sum += r.similarity;
        sum_sq += r.similarity * r.similarity;
        payload += static_cast<double>(r.payload_bits);
        channel += static_cast<double>(r.channel_bits);
        exact += r.exact ? 1.0 : 0.0;
      }
      if (row.count) {
        double n = static_cast<double>(row.count);
        row.mean_similarity = sum / n;
        row.std_similarity = std::sqrt(std::max(0.0, sum_sq / n - row.mean_similarity * row.mean_similarity));
        row.mean_payload_bits = payload / n;
        row.mean_channel_bits = channel / n;
        row.exact_rate = exact / n;
      }
      out.push_back(row);
    }
  }
  return out;
}

inline std::vector<CumulativeRow> cumulative_series(const std::vector<ExperimentRecord>& records,
                                                    const std::vector<Scheme>& schemes,
                                                    const std::vector<double>& snr_grid) {
  std::vector<CumulativeRow> out;
  for (Scheme scheme : schemes) {
    for (double snr : snr_grid) {
      std::vector<const ExperimentRecord*> rows;
      for (const ExperimentRecord& r : records) {
        if (r.scheme == scheme && r.snr_db == snr && r.trial == 0) rows.push_back(&r);
      }
      std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
        return a->sentence_id < b->sentence_id;
      });
      std::size_t cp = 0, cc = 0;
      for (const ExperimentRecord* r : rows) {
        cp += r->payload_bits;
        cc += r->channel_bits;
        out.push_back({scheme, snr, r->sentence_id, r->payload_bits, r->channel_bits, cp, cc});
      }
    }
  }
  return out;
}

// Runs every (sentence, snr, trial, scheme) point. Points run concurrently;
// record order and seeds depend only on the config.
inline SweepReport run_sweep(const SweepConfig& config, const std::vector<std::string>& corpus_in,
                             Session& session) {
  config.validate();
  std::vector<std::string> corpus = corpus_in;
  if (config.max_sentences && corpus.size() > config.max_sentences) {
    corpus.resize(config.max_sentences);
  }
  if (corpus.empty()) throw Error("corpus is empty");
  PipelineContext ctx = session.context();

  bool need_tx = std::find(config.schemes.begin(), config.schemes.end(), Scheme::kKgrag) !=
                 config.schemes.end();
  std::vector<TransmitterState> tx(corpus.size());
  if (need_tx) {
    parallel_for(corpus.size(), config.threads,
                 [&](std::size_t i) { tx[i] = prepare_transmitter(corpus[i], ctx); });
  }

  const std::size_t n_snr = config.snr_grid.size();
  const std::size_t n_scheme = config.schemes.size();
  const std::size_t per_sentence = n_snr * config.trials * n_scheme;
  SweepReport report;
  report.records.resize(corpus.size() * per_sentence);
  parallel_for(report.records.size(), config.threads, [&](std::size_t job) {
    std::size_t s = job / per_sentence;
    std::size_t rest = job % per_sentence;
    std::size_t snr_i = rest / (config.trials * n_scheme);
    rest %= config.trials * n_scheme;
    std::size_t trial = rest / n_scheme;
    Scheme scheme = config.schemes[rest % n_scheme];
    RunSpec spec{s, config.snr_grid[snr_i], trial, record_seed(config.seed, s, snr_i, trial)};
    report.records[job] = run_scheme(scheme, corpus[s], spec, ctx, tx[s]);
  });
  report.summary = summarize(report.records, config.schemes, config.snr_grid);
  report.cumulative = cumulative_series(report.records, config.schemes, config.snr_grid);
  return report;
}

inline phy::HuffmanTable baseline_table(const std::vector<std::string>& corpus) {
  return phy::HuffmanTable::build(corpus_text(corpus), {.escape = true});
}

// Loads the corpus and KG named by the config and runs the sweep.
inline SweepReport run_sweep(const SweepConfig& config) {
  config.validate();
  std::vector<std::string> corpus = load_corpus(config.corpus_path);
  KnowledgeGraph kg = KnowledgeGraph::load_file(config.kg_path);
  Session session(std::move(kg), config.backends, baseline_table(corpus), config.importance,
                  {config.top_k}, config.embedding_dim);
  return run_sweep(config, corpus, session);
}

// ---------------------------------------------------------------------------
// Report output
// ---------------------------------------------------------------------------

inline constexpr std::string_view kSummaryCsvHeader =
    "scheme,snr_db,count,failures,mean_similarity,std_similarity,mean_payload_bits,"
    "mean_channel_bits,exact_rate";

inline constexpr std::string_view kCumulativeCsvHeader =
    "scheme,snr_db,sentence_id,payload_bits,channel_bits,cumulative_payload_bits,"
    "cumulative_channel_bits";

inline void write_records_csv(std::ostream& out, const std::vector<ExperimentRecord>& records) {
  out << kRecordCsvHeader << '\n';
  for (const auto& r : records) out << to_csv_row(r) << '\n';
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryCsvHeader << '\n';
  for (const auto& r : rows) {
    out << scheme_name(r.scheme) << ',' << format_snr(r.snr_db) << ',' << r.count << ','
        << r.failures << ',' << format_fixed(r.mean_similarity) << ','
        << format_fixed(r.std_similarity) << ',' << format_fixed(r.mean_payload_bits, 2) << ','
        << format_fixed(r.mean_channel_bits, 2) << ',' << format_fixed(r.exact_rate, 4) << '\n';
  }
}

inline void write_cumulative_csv(std::ostream& out, const std::vector<CumulativeRow>& rows) {
  out << kCumulativeCsvHeader << '\n';
  for (const auto& r : rows) {
    out << scheme_name(r.scheme) << ',' << format_snr(r.snr_db) << ',' << r.sentence_id << ','
        << r.payload_bits << ',' << r.channel_bits << ',' << r.cumulative_payload_bits << ','
        << r.cumulative_channel_bits << '\n';
  }
}

struct ReportPaths {
  std::string records, summary, cumulative;
};

// "out/run.csv" -> run.csv, run.summary.csv, run.cumulative.csv
inline ReportPaths report_paths(const std::string& out) {
  std::string stem = out;
  if (stem.size() > 4 && stem.ends_with(".csv")) stem.resize(stem.size() - 4);
  return {out, stem + ".summary.csv", stem + ".cumulative.csv"};
}

inline ReportPaths write_report(const SweepReport& report, const std::string& out) {
  ReportPaths paths = report_paths(out);
  auto open = [](const std::string& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write '" + p + "'");
    return f;
  };
  {
    auto f = open(paths.records);
    write_records_csv(f, report.records);
  }
  {
    auto f = open(paths.summary);
    write_summary_csv(f, report.summary);
  }
  {
    auto f = open(paths.cumulative);
    write_cumulative_csv(f, report.cumulative);
  }
  return paths;
}

}  // namespace kgrag
