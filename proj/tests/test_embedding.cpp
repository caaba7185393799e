#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "test_util.hpp"

using namespace kgrag;

namespace {

EmbeddingVector vec(std::vector<double> v) { return EmbeddingVector{std::move(v)}; }

EmbeddingVector random_vec(Rng& rng, std::size_t dim) {
  EmbeddingVector v;
  v.values.resize(dim);
  for (double& x : v.values) x = rng.gaussian();
  return v;
}

EmbeddingVector scaled(const EmbeddingVector& v, double s) {
  EmbeddingVector out = v;
  for (double& x : out.values) x *= s;
  return out;
}

}  // namespace

TEST(Cosine, ClosedFormExamples) {
  EXPECT_DOUBLE_EQ(cosine(vec({1, 0, 0}), vec({1, 0, 0})), 1.0);
  EXPECT_DOUBLE_EQ(cosine(vec({1, 0}), vec({0, 1})), 0.0);
  EXPECT_NEAR(cosine(vec({1, 0}), vec({1, 1})), std::sqrt(2.0) / 2.0, 1e-9);
  EXPECT_NEAR(cosine(vec({1, 0}), vec({-1, 0})), -1.0, 1e-12);
}

TEST(Cosine, ErrorsAreDistinct) {
  EXPECT_THROW(cosine(vec({1, 0}), vec({1, 0, 0})), DimensionMismatch);
  EXPECT_THROW(cosine(vec({0, 0}), vec({1, 0})), ZeroNormError);
  EXPECT_THROW(cosine(vec({1, 0}), vec({0, 0})), ZeroNormError);
}

TEST(Cosine, SymmetricAndScaleInvariant) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    EmbeddingVector a = random_vec(rng, 16), b = random_vec(rng, 16);
    double lambda = std::exp(rng.gaussian() * 3.0);
    double c = cosine(a, b);
    EXPECT_NEAR(c, cosine(b, a), 1e-12);
    EXPECT_NEAR(c, cosine(scaled(a, lambda), b), 1e-9);
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
  }
}

TEST(StubEmbedder, DeterministicAcrossInstances) {
  StubEmbedder a, b;
  EXPECT_EQ(a.embed_one("Alan Bean"), b.embed_one("Alan Bean"));
  EXPECT_EQ(a.embed_one("Alan Bean"), a.embed_one("Alan Bean"));
  EXPECT_EQ(a.embed_one(""), b.embed_one(""));
  EXPECT_EQ(a.dimension(), kDefaultEmbeddingDim);
  EXPECT_EQ(a.embed_one("").size(), kDefaultEmbeddingDim);
}

TEST(StubEmbedder, OutputIsUnitAndNeverZero) {
  StubEmbedder e(64);
  for (const std::string& t : {std::string(""), std::string("..."), std::string("x"),
                               std::string("Alan Bean"), std::string("\xc3\xa9t\xc3\xa9")}) {
    EmbeddingVector v = e.embed_one(t);
    EXPECT_EQ(v.size(), 64u);
    EXPECT_NEAR(norm(v), 1.0, 1e-12) << t;
    for (double x : v.values) EXPECT_TRUE(std::isfinite(x));
  }
}

TEST(StubEmbedder, LexicalOverlapRanksAboveUnrelated) {
  StubEmbedder e;
  EmbeddingVector a = e.embed_one("Alan Bean");
  double near = cosine(a, e.embed_one("Alan Bean."));
  double far = cosine(a, e.embed_one("carbon dioxide"));
  EXPECT_GT(near, far);
  // Punctuation is not part of any word, so both texts have the same grams.
  EXPECT_NEAR(near, 1.0, 1e-12);
}

TEST(StubEmbedder, MatchesDirectEvaluationOfConstruction) {
  // Recompute "ab cd" from trigram directions by hand.
  StubEmbedder e(32);
  std::vector<std::string> grams = StubEmbedder::trigrams("AB cd");
  std::vector<std::string> expect = {"\x02" "ab", "ab\x03", "\x02" "cd", "cd\x03"};
  ASSERT_EQ(grams, expect);
  std::vector<double> sum(32, 0.0);
  for (const auto& g : grams) {
    auto d = e.trigram_direction(g);
    double n = 0.0;
    for (double x : d) n += x * x;
    EXPECT_NEAR(n, 1.0, 1e-12);
    for (std::size_t i = 0; i < 32; ++i) sum[i] += d[i];
  }
  double n = 0.0;
  for (double x : sum) n += x * x;
  n = std::sqrt(n);
  EmbeddingVector got = e.embed_one("AB cd");
  for (std::size_t i = 0; i < 32; ++i) EXPECT_NEAR(got[i], sum[i] / n, 1e-12);
}

TEST(StubEmbedder, TrigramsOfDegenerateText) {
  EXPECT_EQ(StubEmbedder::trigrams(""), std::vector<std::string>{"\x02\x03"});
  EXPECT_EQ(StubEmbedder::trigrams(" ?! "), std::vector<std::string>{"\x02\x03"});
  EXPECT_EQ(StubEmbedder::trigrams("a"), std::vector<std::string>{"\x02" "a\x03"});
}

TEST(StubEmbedder, BatchPreservesOrder) {
  StubEmbedder e;
  std::vector<std::string> texts = {"one", "two", "three"};
  auto vs = e.embed(texts);
  ASSERT_EQ(vs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(vs[i], e.embed_one(texts[i]));
}

TEST(StubEmbedder, RejectsZeroDimension) { EXPECT_THROW(StubEmbedder(0), ConfigError); }

namespace {

// Index with `n_comm` communities of `size` random members each.
EmbeddingIndex random_index(Rng& rng, std::size_t n_comm, std::size_t size, std::size_t dim) {
  EmbeddingIndex idx(dim);
  NodeId next = 0;
  for (CommunityId c = 0; c < n_comm; ++c) {
    idx.set_summary(c, random_vec(rng, dim));
    for (std::size_t i = 0; i < size; ++i) idx.add_member(c, next++, random_vec(rng, dim));
  }
  return idx;
}

}  // namespace

TEST(BestCommunity, ExactSummaryWins) {
  Rng rng(3);
  EmbeddingIndex idx = random_index(rng, 5, 4, 24);
  for (const auto& [c, s] : idx.summaries()) EXPECT_EQ(idx.best_community(s), c);
}

TEST(BestCommunity, SingleCommunityAlwaysChosen) {
  Rng rng(4);
  EmbeddingIndex idx = random_index(rng, 1, 3, 8);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(idx.best_community(random_vec(rng, 8)), 0u);
}

TEST(BestCommunity, MatchesBruteForceArgmax) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    EmbeddingIndex idx = random_index(rng, 5, 2, 12);
    EmbeddingVector q = random_vec(rng, 12);
    CommunityId best = 0;
    double best_sim = -2.0;
    for (const auto& [c, s] : idx.summaries()) {
      double sim = cosine(q, s);
      if (sim > best_sim) best_sim = sim, best = c;
    }
    EXPECT_EQ(idx.best_community(q), best);
    EXPECT_EQ(idx.best_community(scaled(q, 17.5)), best);
  }
}

TEST(BestCommunity, TiesGoToSmallestId) {
  EmbeddingIndex idx(2);
  idx.set_summary(4, vec({1, 0}));
  idx.set_summary(2, vec({2, 0}));
  idx.set_summary(9, vec({0, 1}));
  EXPECT_EQ(idx.best_community(vec({1, 0})), 2u);
}

TEST(BestCommunity, EmptyIndexIsAnError) {
  EmbeddingIndex idx(4);
  EXPECT_THROW(idx.best_community(vec({1, 0, 0, 0})), LookupError);
}

TEST(TopK, LargerThanCommunityReturnsAllRanked) {
  Rng rng(6);
  EmbeddingIndex idx = random_index(rng, 2, 4, 10);
  EmbeddingVector q = random_vec(rng, 10);
  auto r = idx.top_k_in_community(1, q, 10);
  ASSERT_EQ(r.size(), 4u);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GE(r[i - 1].similarity, r[i].similarity);
  for (const auto& s : r) EXPECT_GE(s.id, 4u);  // community 1 holds ids 4..7
}

TEST(TopK, QueryEqualToMemberComesFirst) {
  Rng rng(7);
  EmbeddingIndex idx = random_index(rng, 1, 10, 16);
  const auto& m = idx.members(0)[6];
  auto r = idx.top_k_in_community(0, m.vector, 3);
  ASSERT_FALSE(r.empty());
  EXPECT_EQ(r[0].id, m.id);
  EXPECT_NEAR(r[0].similarity, 1.0, 1e-12);
}

TEST(TopK, MatchesFullSortOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    EmbeddingIndex idx = random_index(rng, 1, 50, 20);
    EmbeddingVector q = random_vec(rng, 20);
    std::vector<ScoredNode> all;
    for (const auto& m : idx.members(0)) all.push_back({m.id, cosine(q, m.vector)});
    std::sort(all.begin(), all.end(), [](const ScoredNode& a, const ScoredNode& b) {
      return a.similarity != b.similarity ? a.similarity > b.similarity : a.id < b.id;
    });
    all.resize(3);
    EXPECT_EQ(idx.top_k_in_community(0, q, 3), all);
    auto rescaled = idx.top_k_in_community(0, scaled(q, 0.01), 3);
    ASSERT_EQ(rescaled.size(), 3u);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(rescaled[i].id, all[i].id);
  }
}

TEST(TopK, TiesBrokenBySmallerId) {
  EmbeddingIndex idx(2);
  idx.set_summary(0, vec({1, 0}));
  idx.add_member(0, 9, vec({1, 1}));
  idx.add_member(0, 3, vec({2, 2}));
  idx.add_member(0, 5, vec({1, 0}));
  auto r = idx.top_k_in_community(0, vec({1, 1}), 2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].id, 3u);
  EXPECT_EQ(r[1].id, 9u);
}

TEST(TopK, UnknownCommunityIsAnError) {
  EmbeddingIndex idx(2);
  EXPECT_THROW(idx.top_k_in_community(3, vec({1, 0}), 3), LookupError);
}

TEST(TopK, EqualsRestrictionOfFullScan) {
  Rng rng(9);
  EmbeddingIndex idx = random_index(rng, 6, 15, 12);
  for (int trial = 0; trial < 30; ++trial) {
    EmbeddingVector q = random_vec(rng, 12);
    // Global ranking over every member of every community.
    std::vector<std::pair<ScoredNode, CommunityId>> global;
    for (CommunityId c = 0; c < 6; ++c) {
      for (const auto& m : idx.members(c)) global.push_back({{m.id, cosine(q, m.vector)}, c});
    }
    std::sort(global.begin(), global.end(), [](const auto& a, const auto& b) {
      return a.first.similarity != b.first.similarity ? a.first.similarity > b.first.similarity
                                                      : a.first.id < b.first.id;
    });
    for (CommunityId c = 0; c < 6; ++c) {
      std::vector<ScoredNode> restricted;
      for (const auto& [s, cc] : global) {
        if (cc == c && restricted.size() < 4) restricted.push_back(s);
      }
      EXPECT_EQ(idx.top_k_in_community(c, q, 4), restricted);
    }
  }
}

TEST(Index, DimensionChecked) {
  EmbeddingIndex idx(3);
  EXPECT_THROW(idx.add_member(0, 0, vec({1, 0})), DimensionMismatch);
  EXPECT_THROW(idx.set_summary(0, vec({1, 0, 0, 0})), DimensionMismatch);
}

TEST(Index, BuiltFromSampleGraphCoversEveryEntity) {
  const KnowledgeGraph& kg = kgrag::testing::sample_kg();
  StubEmbedder e;
  EmbeddingIndex idx = EmbeddingIndex::build(kg, e);
  EXPECT_EQ(idx.size(), kg.num_entities());
  std::set<NodeId> seen;
  for (const Community& c : kg.communities()) {
    ASSERT_TRUE(idx.summaries().count(c.id)) << c.label;
    for (const auto& m : idx.members(c.id)) {
      EXPECT_TRUE(seen.insert(m.id).second);
      EXPECT_EQ(kg.entity_by_id(m.id)->community, c.id);
      EXPECT_EQ(m.vector, e.embed_one(entity_embedding_text(*kg.entity_by_id(m.id))));
    }
  }
  EXPECT_EQ(seen.size(), kg.num_entities());
}

TEST(Index, EntityTextJoinsNameAndDescription) {
  Entity a{0, "Alan Bean", "American astronaut", 0, {}};
  Entity b{1, "Wheeler", "", 0, {}};
  EXPECT_EQ(entity_embedding_text(a), "Alan Bean: American astronaut");
  EXPECT_EQ(entity_embedding_text(b), "Wheeler");
}

TEST(Index, SearchStatsCountEvaluations) {
  Rng rng(10);
  EmbeddingIndex idx = random_index(rng, 4, 7, 8);
  SearchStats st;
  EmbeddingVector q = random_vec(rng, 8);
  CommunityId c = idx.best_community(q, &st);
  idx.top_k_in_community(c, q, 3, &st);
  EXPECT_EQ(st.community_evaluations, 4u);
  EXPECT_EQ(st.entity_evaluations, 7u);
}
