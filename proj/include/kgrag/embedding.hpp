#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgrag/common.hpp"
#include "kgrag/kg_store.hpp"

namespace kgrag {

inline constexpr std::size_t kDefaultEmbeddingDim = 384;

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t a, std::size_t b)
      : Error("embedding dimension mismatch: " + std::to_string(a) + " vs " +
              std::to_string(b)) {}
};

class ZeroNormError : public Error {
 public:
  ZeroNormError() : Error("cosine of a zero-norm vector is undefined") {}
};

inline double norm(const EmbeddingVector& v) {
  double s = 0.0;
  for (double x : v.values) s += x * x;
  return std::sqrt(s);
}

inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroNormError();
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  // One vector per input, in input order.
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;

  EmbeddingVector embed_one(const std::string& text) {
    return std::move(embed(std::span<const std::string>(&text, 1)).front());
  }
};

// Deterministic offline embedder. Every word of the canonicalized text is
// framed with STX/ETX markers and cut into character trigrams; every trigram
// maps, via its FNV-1a hash, to a seeded Gaussian direction of unit length.
// The text vector is the L2-normalized sum over trigram occurrences, so texts
// with overlapping trigrams have high cosine similarity.
class StubEmbedder final : public Embedder {
 public:
  explicit StubEmbedder(std::size_t dim = kDefaultEmbeddingDim) : dim_(dim) {
    if (dim == 0) throw ConfigError("embedding dimension must be positive");
  }

  std::size_t dimension() const override { return dim_; }

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) out.push_back(embed_text(t));
    return out;
  }

  // Trigrams of every word of the lower-cased text, each word framed by
  // STX/ETX. Words are runs of ASCII alphanumerics or non-ASCII bytes; text
  // without words yields the single gram "\x02\x03".
  static std::vector<std::string> trigrams(const std::string& text) {
    std::vector<std::string> grams;
    auto word_char = [](char c) {
      auto u = static_cast<unsigned char>(c);
      return u >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z');
    };
    std::string lower = canonicalize(text);
    std::size_t i = 0;
    while (i < lower.size()) {
      if (!word_char(lower[i])) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < lower.size() && word_char(lower[j])) ++j;
      std::string framed = "\x02" + lower.substr(i, j - i) + "\x03";
      for (std::size_t k = 0; k + 3 <= framed.size(); ++k) grams.push_back(framed.substr(k, 3));
      i = j;
    }
    if (grams.empty()) grams.push_back("\x02\x03");
    return grams;
  }

  // Unit direction assigned to a single trigram.
  std::vector<double> trigram_direction(const std::string& gram) const {
    Rng rng(fnv1a64(gram));
    std::vector<double> v(dim_);
    double s = 0.0;
    for (double& x : v) {
      x = rng.gaussian();
      s += x * x;
    }
    double inv = 1.0 / std::sqrt(s);
    for (double& x : v) x *= inv;
    return v;
  }

 private:
  EmbeddingVector embed_text(const std::string& text) {
    std::vector<double> acc(dim_, 0.0);
    for (const std::string& g : trigrams(text)) {
      const std::vector<double>& dir = cached_direction(g);
      for (std::size_t i = 0; i < dim_; ++i) acc[i] += dir[i];
    }
    double s = 0.0;
    for (double x : acc) s += x * x;
    s = std::sqrt(s);
    if (s == 0.0) {
      // Exact cancellation is practically impossible; fall back to the
      // direction of the first trigram so output is never all-zero.
      acc = trigram_direction(trigrams(text).front());
    } else {
      for (double& x : acc) x /= s;
    }
    return EmbeddingVector{std::move(acc)};
  }

  const std::vector<double>& cached_direction(const std::string& gram) {
    {
      std::shared_lock lock(mu_);
      if (auto it = cache_.find(gram); it != cache_.end()) return it->second;
    }
    std::vector<double> dir = trigram_direction(gram);
    std::unique_lock lock(mu_);
    return cache_.try_emplace(gram, std::move(dir)).first->second;
  }

  std::size_t dim_;
  std::shared_mutex mu_;
  std::unordered_map<std::string, std::vector<double>> cache_;
};

// Evaluation counters for the hierarchical search.
struct SearchStats {
  std::size_t community_evaluations = 0;
  std::size_t entity_evaluations = 0;
};

struct ScoredNode {
  NodeId id = 0;
  double similarity = 0.0;
  friend bool operator==(const ScoredNode&, const ScoredNode&) = default;
};

// Text embedded for an entity: "name: description", or just the name when
// the description is empty.
inline std::string entity_embedding_text(const Entity& e) {
  return e.description.empty() ? e.name : e.name + ": " + e.description;
}

// Flat per-community arrays, exhaustive scan inside a community.
class EmbeddingIndex {
 public:
  struct Member {
    NodeId id;
    EmbeddingVector vector;
  };

  EmbeddingIndex() = default;
  explicit EmbeddingIndex(std::size_t dim) : dim_(dim) {}

  static EmbeddingIndex build(const KnowledgeGraph& kg, Embedder& embedder) {
    EmbeddingIndex index(embedder.dimension());
    std::vector<std::string> texts;
    for (const Entity& e : kg.entities()) texts.push_back(entity_embedding_text(e));
    std::vector<EmbeddingVector> vecs = embedder.embed(texts);
    std::size_t i = 0;
    for (const Entity& e : kg.entities()) {
      index.add_member(e.community, e.id, std::move(vecs[i++]));
    }
    std::vector<std::string> summaries;
    std::vector<CommunityId> ids;
    for (const Community& c : kg.communities()) {
      if (!index.members_.count(c.id)) continue;
      ids.push_back(c.id);
      summaries.push_back(c.summary.empty() ? c.label : c.summary);
    }
    std::vector<EmbeddingVector> svecs = embedder.embed(summaries);
    for (std::size_t j = 0; j < ids.size(); ++j) {
      index.set_summary(ids[j], std::move(svecs[j]));
    }
    return index;
  }

  void add_member(CommunityId c, NodeId id, EmbeddingVector v) {
    check_dim(v);
    members_[c].push_back(Member{id, std::move(v)});
  }

  void set_summary(CommunityId c, EmbeddingVector v) {
    check_dim(v);
    summaries_[c] = std::move(v);
  }

  std::size_t dimension() const { return dim_; }
  const std::map<CommunityId, EmbeddingVector>& summaries() const { return summaries_; }

  std::span<const Member> members(CommunityId c) const {
    auto it = members_.find(c);
    if (it == members_.end()) {
      throw LookupError("unknown community " + std::to_string(c));
    }
    return it->second;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [c, m] : members_) n += m.size();
    return n;
  }

  // Argmax of cosine against community summaries; ties go to the smallest id.
  CommunityId best_community(const EmbeddingVector& query,
                             SearchStats* stats = nullptr) const {
    if (summaries_.empty()) throw LookupError("embedding index has no communities");
    CommunityId best = 0;
    double best_sim = -2.0;
    for (const auto& [id, s] : summaries_) {  // ascending id
      double sim = cosine(query, s);
      if (stats) ++stats->community_evaluations;
      if (sim > best_sim) {
        best_sim = sim;
        best = id;
      }
    }
    return best;
  }

  // Descending similarity, ties by smaller id, at most k results.
  std::vector<ScoredNode> top_k_in_community(CommunityId community,
                                             const EmbeddingVector& query,
                                             std::size_t k,
                                             SearchStats* stats = nullptr) const {
    std::span<const Member> pool = members(community);
    std::vector<ScoredNode> scored;
    scored.reserve(pool.size());
    for (const Member& m : pool) {
      scored.push_back({m.id, cosine(query, m.vector)});
    }
    if (stats) stats->entity_evaluations += pool.size();
    auto better = [](const ScoredNode& a, const ScoredNode& b) {
      return a.similarity != b.similarity ? a.similarity > b.similarity
                                          : a.id < b.id;
    };
    std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + n, scored.end(), better);
    scored.resize(n);
    return scored;
  }

 private:
  void check_dim(const EmbeddingVector& v) const {
    if (v.size() != dim_) throw DimensionMismatch(v.size(), dim_);
  }

  std::size_t dim_ = kDefaultEmbeddingDim;
  std::map<CommunityId, std::vector<Member>> members_;
  std::map<CommunityId, EmbeddingVector> summaries_;
};

}  // namespace kgrag
