#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

using namespace kgrag;
using kgrag::testing::data_path;
using kgrag::testing::fixture_corpus;
using kgrag::testing::sample_kg;

namespace {

Session& session() {
  static Session s(sample_kg(), BackendSelection{}, baseline_table(fixture_corpus()));
  return s;
}

SweepConfig small_config() {
  SweepConfig c;
  c.snr_grid = {0.0};
  c.trials = 1;
  c.seed = 5;
  c.schemes = {Scheme::kKgrag, Scheme::kAscii};
  c.threads = 1;
  return c;
}

std::string csv(const SweepReport& r) {
  std::ostringstream out;
  write_records_csv(out, r.records);
  write_summary_csv(out, r.summary);
  write_cumulative_csv(out, r.cumulative);
  return out.str();
}

}  // namespace

TEST(Similarity, IdenticalAndEmpty) {
  StubEmbedder emb;
  Similarity same = semantic_similarity("Alan Bean was born in Wheeler.",
                                        "Alan Bean was born in Wheeler.", emb);
  EXPECT_NEAR(same.value, 1.0, 1e-12);
  EXPECT_FALSE(same.empty_reconstruction);
  Similarity empty = semantic_similarity("Alan Bean.", "  ", emb);
  EXPECT_EQ(empty.value, 0.0);
  EXPECT_TRUE(empty.empty_reconstruction);
  EXPECT_THROW(semantic_similarity("", "x", emb), Error);
}

TEST(BitCounting, AsciiAndKgrag) {
  EXPECT_EQ(ascii_bits("abc"), (BitCounts{24, 24}));
  EXPECT_EQ(kgrag_bits(0, 5), (BitCounts{192, 236}));
  EXPECT_EQ(kgrag_bits(5, 0).payload_bits, 192u);
  EXPECT_EQ(kgrag_bits(5, 0).channel_bits, 2u * (32 + 160 + 6));
}

TEST(BitCounting, HuffmanMatchesCodeLengthSum) {
  phy::HuffmanTable t = baseline_table(fixture_corpus());
  for (const std::string& s : fixture_corpus()) {
    std::size_t want = 0;
    for (char c : s) want += t.code(static_cast<unsigned char>(c)).length;
    EXPECT_EQ(huffman_bits(s, t), (BitCounts{want, want}));
  }
}

TEST(Pipeline, NoiselessRecoversEveryFixtureSubgraph) {
  PipelineContext ctx = session().context();
  for (std::size_t i = 0; i < fixture_corpus().size(); ++i) {
    const std::string& s = fixture_corpus()[i];
    TransmitterState tx = prepare_transmitter(s, ctx);
    ASSERT_TRUE(tx.failure.empty()) << tx.failure;
    ExperimentRecord r = run_pipeline(s, {i, phy::kNoNoise, 0, 1}, ctx, tx);
    EXPECT_FALSE(r.failed()) << r.failure;
    EXPECT_EQ(r.n_received_valid, r.n_mcsg_nodes) << s;
    EXPECT_EQ(r.bit_errors, 0u);
    EXPECT_GT(r.similarity, 0.0);
    EXPECT_EQ(r.channel_bits, phy::uep_channel_bits(r.n_protected, r.n_unprotected));
    EXPECT_EQ(r.payload_bits, phy::frame_payload_bits(r.n_protected, r.n_unprotected));
    EXPECT_EQ(r.n_protected + r.n_unprotected, r.n_mcsg_nodes);
  }
}

TEST(Pipeline, BaselinesNoiselessAreExact) {
  PipelineContext ctx = session().context();
  const std::string& s = fixture_corpus().front();
  ExperimentRecord h = run_huffman_baseline(s, {0, phy::kNoNoise, 0, 3}, ctx);
  EXPECT_TRUE(h.exact);
  EXPECT_NEAR(h.similarity, 1.0, 1e-12);
  ExperimentRecord a = run_ascii(s, {0, phy::kNoNoise, 0, 3}, ctx);
  EXPECT_TRUE(a.exact);
  EXPECT_EQ(a.payload_bits, 8 * s.size());
}

TEST(Pipeline, NoEntitiesGivesEmptyFrame) {
  PipelineContext ctx = session().context();
  std::string s = "it rained all week.";
  TransmitterState tx = prepare_transmitter(s, ctx);
  ExperimentRecord r = run_pipeline(s, {0, 6.0, 0, 1}, ctx, tx);
  EXPECT_FALSE(r.failed());
  EXPECT_EQ(r.n_mcsg_nodes, 0u);
  EXPECT_EQ(r.payload_bits, 32u);
  EXPECT_EQ(r.similarity, 0.0);
  EXPECT_NE(std::find(r.flags.begin(), r.flags.end(), "no_entities"), r.flags.end());
}

TEST(Pipeline, DeterministicGivenSeed) {
  PipelineContext ctx = session().context();
  const std::string& s = fixture_corpus().at(3);
  TransmitterState tx = prepare_transmitter(s, ctx);
  for (Scheme scheme : kAllSchemes) {
    RunSpec spec{3, 2.0, 0, 1234};
    EXPECT_EQ(to_csv_row(run_scheme(scheme, s, spec, ctx, tx)),
              to_csv_row(run_scheme(scheme, s, spec, ctx, tx)));
  }
}

TEST(Pipeline, HighSnrNoWorseThanLowSnrOnAverage) {
  PipelineContext ctx = session().context();
  double lo = 0.0, hi = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    const std::string& s = fixture_corpus()[i];
    TransmitterState tx = prepare_transmitter(s, ctx);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      lo += run_pipeline(s, {i, 0.0, 0, seed}, ctx, tx).similarity;
      hi += run_pipeline(s, {i, 12.0, 0, seed}, ctx, tx).similarity;
      ++n;
    }
  }
  EXPECT_GE(hi / n, lo / n);
}

TEST(Sweep, RecordOrderSeedsAndCumulativeSums) {
  SweepConfig c = small_config();
  std::vector<std::string> corpus(fixture_corpus().begin(), fixture_corpus().begin() + 2);
  SweepReport r = run_sweep(c, corpus, session());
  ASSERT_EQ(r.records.size(), 4u);
  EXPECT_EQ(r.records[0].scheme, Scheme::kKgrag);
  EXPECT_EQ(r.records[1].scheme, Scheme::kAscii);
  EXPECT_EQ(r.records[0].sentence_id, 0u);
  EXPECT_EQ(r.records[2].sentence_id, 1u);
  EXPECT_EQ(r.records[0].seed, r.records[1].seed);
  EXPECT_NE(r.records[0].seed, r.records[2].seed);
  EXPECT_EQ(r.records[0].seed, record_seed(5, 0, 0, 0));

  ASSERT_EQ(r.summary.size(), 2u);
  EXPECT_EQ(r.summary[0].count, 2u);
  EXPECT_DOUBLE_EQ(r.summary[0].mean_payload_bits,
                   (r.records[0].payload_bits + r.records[2].payload_bits) / 2.0);

  ASSERT_EQ(r.cumulative.size(), 4u);
  for (Scheme scheme : c.schemes) {
    std::size_t sum = 0;
    for (const auto& row : r.cumulative) {
      if (row.scheme != scheme) continue;
      const auto& rec = *std::find_if(r.records.begin(), r.records.end(), [&](const auto& x) {
        return x.scheme == scheme && x.sentence_id == row.sentence_id;
      });
      sum += rec.payload_bits;
      EXPECT_EQ(row.cumulative_payload_bits, sum);
    }
  }
}

TEST(Sweep, ChannelBitsDependOnlyOnSplit) {
  SweepConfig c = small_config();
  c.snr_grid = {0.0, 6.0, 12.0, phy::kNoNoise};
  c.trials = 2;
  c.max_sentences = 10;
  c.schemes = {Scheme::kKgrag};
  SweepReport r = run_sweep(c, fixture_corpus(), session());
  for (const ExperimentRecord& rec : r.records) {
    ASSERT_FALSE(rec.failed()) << rec.failure;
    EXPECT_EQ(rec.channel_bits, phy::uep_channel_bits(rec.n_protected, rec.n_unprotected));
    EXPECT_LE(rec.payload_bits, rec.channel_bits);
  }
}

TEST(Sweep, ThreadCountDoesNotChangeOutput) {
  SweepConfig c = small_config();
  c.snr_grid = {0.0, 8.0};
  c.trials = 3;
  c.max_sentences = 6;
  c.schemes = {kAllSchemes[0], kAllSchemes[1], kAllSchemes[2]};
  std::string serial = csv(run_sweep(c, fixture_corpus(), session()));
  c.threads = 4;
  EXPECT_EQ(csv(run_sweep(c, fixture_corpus(), session())), serial);
}

TEST(Sweep, SummaryOracle) {
  std::vector<ExperimentRecord> recs(4);
  recs[0].similarity = 0.2;
  recs[1].similarity = 0.6;
  recs[1].exact = true;
  recs[2].failure = "transmit: boom";
  recs[3].snr_db = 4.0;
  recs[3].similarity = 1.0;
  auto rows = summarize(recs, {Scheme::kKgrag}, {0.0, 4.0});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].count, 2u);
  EXPECT_EQ(rows[0].failures, 1u);
  EXPECT_NEAR(rows[0].mean_similarity, 0.4, 1e-12);
  EXPECT_NEAR(rows[0].std_similarity, 0.2, 1e-12);
  EXPECT_NEAR(rows[0].exact_rate, 0.5, 1e-12);
  EXPECT_EQ(rows[1].count, 1u);
}

TEST(Config, ParsesFixtureConfig) {
  SweepConfig c = load_sweep_config(data_path("configs/fixture_sweep.json"));
  EXPECT_EQ(c.snr_grid.size(), 8u);
  EXPECT_TRUE(std::isinf(c.snr_grid.back()));
  EXPECT_EQ(c.trials, 10u);
  EXPECT_EQ(c.seed, 20240601u);
  EXPECT_EQ(c.schemes.size(), 3u);
  EXPECT_TRUE(std::filesystem::exists(c.corpus_path)) << c.corpus_path;
  EXPECT_TRUE(std::filesystem::exists(c.kg_path)) << c.kg_path;
  EXPECT_DOUBLE_EQ(c.importance.alpha, 0.5);
}

TEST(Config, Errors) {
  using nlohmann::json;
  json ok = {{"corpus", "c.txt"}, {"kg", "k.tsv"}, {"snr_grid", {0, "inf"}}};
  EXPECT_NO_THROW(parse_sweep_config(ok));
  EXPECT_EQ(parse_sweep_config(ok, "/base").corpus_path, "/base/c.txt");
  auto with = [&](const std::string& key, json v) {
    json j = ok;
    j[key] = v;
    return j;
  };
  EXPECT_THROW(parse_sweep_config(json{{"corpus", "c"}}), ConfigError);
  EXPECT_THROW(parse_sweep_config(with("snr_grid", json::array())), ConfigError);
  EXPECT_THROW(parse_sweep_config(with("snr_grid", {"loud"})), ConfigError);
  EXPECT_THROW(parse_sweep_config(with("trials", 0)), ConfigError);
  EXPECT_THROW(parse_sweep_config(with("schemes", {"morse"})), ConfigError);
  EXPECT_THROW(parse_sweep_config(with("backends", {{"embedding", "magic"}})), ConfigError);
  EXPECT_THROW(parse_sweep_config(with("importance", {{"alpha", 2.0}})), ConfigError);
  EXPECT_THROW(parse_sweep_config(with("importance", {{"threshold_breakpoints", {1, 2}}})),
               ConfigError);
  EXPECT_THROW(parse_sweep_config(with("trials", "many")), ConfigError);
  EXPECT_THROW(load_sweep_config("/nonexistent/x.json"), ConfigError);
}

TEST(Report, PathsAndFiles) {
  ReportPaths p = report_paths("out/run.csv");
  EXPECT_EQ(p.records, "out/run.csv");
  EXPECT_EQ(p.summary, "out/run.summary.csv");
  EXPECT_EQ(p.cumulative, "out/run.cumulative.csv");
  EXPECT_EQ(report_paths("x").summary, "x.summary.csv");

  auto dir = std::filesystem::temp_directory_path() / "kgrag_report_test";
  std::filesystem::create_directories(dir);
  SweepConfig c = small_config();
  SweepReport r = run_sweep(c, {fixture_corpus().front()}, session());
  ReportPaths w = write_report(r, (dir / "r.csv").string());
  std::ifstream in(w.records);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, kRecordCsvHeader);
  EXPECT_TRUE(std::filesystem::exists(w.cumulative));
  std::filesystem::remove_all(dir);
}

TEST(Csv, Formatting) {
  EXPECT_EQ(format_snr(phy::kNoNoise), "inf");
  EXPECT_EQ(format_snr(2.0), "2.00");
  EXPECT_EQ(format_snr(-1.5), "-1.50");
  EXPECT_EQ(format_fixed(-1e-9), "0.000000");
  EXPECT_EQ(format_fixed(0.1234567), "0.123457");
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  ExperimentRecord r;
  r.failure = "decode: bad, worse";
  r.flags = {"truncated", "empty_reconstruction"};
  std::string row = to_csv_row(r);
  EXPECT_NE(row.find(",truncated;empty_reconstruction,\"decode: bad, worse\""), std::string::npos);
  EXPECT_EQ(std::count(kRecordCsvHeader.begin(), kRecordCsvHeader.end(), ','), 17);
}

TEST(Csv, SchemeNames) {
  for (Scheme s : kAllSchemes) EXPECT_EQ(parse_scheme(scheme_name(s)), s);
  EXPECT_THROW(parse_scheme("morse"), ConfigError);
}
