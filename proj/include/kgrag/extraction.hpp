#pragma once

// Three-stage entity extraction: recognition, community-guided candidate
// expansion over the embedding index, and contextual selection.

#include <algorithm>
#include <chrono>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgrag/common.hpp"
#include "kgrag/embedding.hpp"
#include "kgrag/kg_store.hpp"
#include "kgrag/model.hpp"
#include "kgrag/prompts.hpp"

namespace kgrag {

struct Mention {
  std::string surface;
  std::size_t start = 0;  // byte offsets into the sentence, [start, end)
  std::size_t end = 0;
  friend bool operator==(const Mention&, const Mention&) = default;
};

struct Provenance {
  std::size_t mention = 0;  // index into the mention list
  double similarity = 0.0;
};

struct CandidateSet {
  std::vector<NodeId> candidates;  // ascending, distinct
  std::map<NodeId, Provenance> provenance;
  SearchStats stats;

  bool empty() const { return candidates.empty(); }
  bool contains(NodeId id) const {
    return std::binary_search(candidates.begin(), candidates.end(), id);
  }
};

struct SelectedEntities {
  std::vector<NodeId> ids;            // ascending, distinct
  std::vector<std::string> warnings;  // dropped model output, etc.
};

// ---------------------------------------------------------------------------
// Stage 1: recognition
// ---------------------------------------------------------------------------

namespace detail {

struct Token {
  std::size_t start, end;
};

inline bool is_word_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') ||
         (u >= 'A' && u <= 'Z') || u >= 0x80;
}

inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_word_char(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && is_word_char(s[j])) ++j;
    out.push_back({i, j});
    i = j;
  }
  return out;
}

// Lower-cased tokens joined by single spaces.
inline std::string token_key(std::string_view s) {
  std::string key;
  for (const Token& t : tokenize(s)) {
    if (!key.empty()) key.push_back(' ');
    for (std::size_t i = t.start; i < t.end; ++i) key.push_back(ascii_lower(s[i]));
  }
  return key;
}

// True when `needle` occurs in `hay` bounded by non-word characters.
inline bool contains_phrase(std::string_view hay, std::string_view needle) {
  if (needle.empty()) return false;
  std::size_t pos = hay.find(needle);
  while (pos != std::string_view::npos) {
    bool left = pos == 0 || !is_word_char(hay[pos - 1]);
    std::size_t end = pos + needle.size();
    bool right = end == hay.size() || !is_word_char(hay[end]);
    if (left && right) return true;
    pos = hay.find(needle, pos + 1);
  }
  return false;
}

}  // namespace detail

class Recognizer {
 public:
  virtual ~Recognizer() = default;
  // Non-overlapping mentions sorted by start offset.
  virtual std::vector<Mention> recognize(std::string_view sentence) const = 0;
};

// Longest-match, left-to-right, case-insensitive matcher over KG names and
// aliases at token boundaries. Runs of two or more capitalized tokens that
// do not start a KG match are emitted as out-of-KG mentions.
class GazetteerRecognizer final : public Recognizer {
 public:
  explicit GazetteerRecognizer(const KnowledgeGraph& kg) {
    for (const Entity& e : kg.entities()) add(e.name);
    for (const Entity& e : kg.entities()) {
      for (const std::string& a : e.aliases) add(a);
    }
  }

  std::vector<Mention> recognize(std::string_view sentence) const override {
    std::vector<detail::Token> toks = detail::tokenize(sentence);
    std::vector<std::string> lower(toks.size());
    for (std::size_t i = 0; i < toks.size(); ++i) {
      for (std::size_t c = toks[i].start; c < toks[i].end; ++c) {
        lower[i].push_back(ascii_lower(sentence[c]));
      }
    }
    // Length (in tokens) of the longest KG match starting at i, or 0.
    auto match_at = [&](std::size_t i) -> std::size_t {
      std::size_t limit = std::min(max_tokens_, toks.size() - i);
      for (std::size_t n = limit; n >= 1; --n) {
        std::string key = lower[i];
        for (std::size_t k = 1; k < n; ++k) key += ' ' + lower[i + k];
        if (keys_.count(key)) return n;
      }
      return 0;
    };
    auto capitalized = [&](std::size_t i) {
      char c = sentence[toks[i].start];
      return c >= 'A' && c <= 'Z';
    };
    auto emit = [&](std::vector<Mention>& out, std::size_t first, std::size_t last) {
      std::size_t s = toks[first].start, e = toks[last].end;
      out.push_back({std::string(sentence.substr(s, e - s)), s, e});
    };

    std::vector<Mention> out;
    std::size_t i = 0;
    while (i < toks.size()) {
      if (std::size_t n = match_at(i)) {
        emit(out, i, i + n - 1);
        i += n;
        continue;
      }
      if (capitalized(i)) {
        std::size_t j = i + 1;
        while (j < toks.size() && capitalized(j) && match_at(j) == 0) ++j;
        if (j - i >= 2) emit(out, i, j - 1);
        i = j;
        continue;
      }
      ++i;
    }
    return out;
  }

 private:
  void add(const std::string& name) {
    std::string key = detail::token_key(name);
    if (key.empty()) return;
    keys_.insert(key);
    max_tokens_ = std::max<std::size_t>(
        max_tokens_, std::count(key.begin(), key.end(), ' ') + 1);
  }

  std::set<std::string> keys_;
  std::size_t max_tokens_ = 1;
};

// ---------------------------------------------------------------------------
// Stage 2: community-guided expansion
// ---------------------------------------------------------------------------

inline constexpr std::size_t kDefaultTopK = 3;

// For each mention: embed its surface, pick the best-matching community,
// take the top-k members of that community, and union the results.
// Provenance keeps the highest similarity seen for each candidate.
inline CandidateSet expand(std::span<const Mention> mentions,
                           const EmbeddingIndex& index, Embedder& embedder,
                           std::size_t k = kDefaultTopK) {
  CandidateSet out;
  if (mentions.empty()) return out;
  std::vector<std::string> surfaces;
  for (const Mention& m : mentions) surfaces.push_back(m.surface);
  std::vector<EmbeddingVector> vecs = embedder.embed(surfaces);
  std::set<NodeId> ids;
  for (std::size_t mi = 0; mi < mentions.size(); ++mi) {
    CommunityId best = index.best_community(vecs[mi], &out.stats);
    for (const ScoredNode& s : index.top_k_in_community(best, vecs[mi], k, &out.stats)) {
      ids.insert(s.id);
      auto [it, fresh] = out.provenance.try_emplace(s.id, Provenance{mi, s.similarity});
      if (!fresh && s.similarity > it->second.similarity) {
        it->second = Provenance{mi, s.similarity};
      }
    }
  }
  out.candidates.assign(ids.begin(), ids.end());
  return out;
}

// ---------------------------------------------------------------------------
// Stage 3: selection
// ---------------------------------------------------------------------------

class Selector {
 public:
  virtual ~Selector() = default;
  virtual SelectedEntities select(std::string_view sentence,
                                  const CandidateSet& candidates,
                                  const KnowledgeGraph& kg) = 0;
};

// Deterministic stand-in for the model: keep a candidate when its name (or an
// alias) occurs as a phrase in the canonicalized sentence, or when its
// provenance similarity reaches the threshold; keep at most `cap`, preferring
// higher similarity.
class StubSelector final : public Selector {
 public:
  explicit StubSelector(double threshold = 0.5, std::size_t cap = 8)
      : threshold_(threshold), cap_(cap) {}

  SelectedEntities select(std::string_view sentence, const CandidateSet& candidates,
                          const KnowledgeGraph& kg) override {
    std::string canon = canonicalize(sentence);
    std::vector<ScoredNode> kept;
    for (NodeId id : candidates.candidates) {
      const Entity* e = kg.entity_by_id(id);
      if (!e) continue;
      double sim = candidates.provenance.at(id).similarity;
      bool named = detail::contains_phrase(canon, canonicalize(e->name));
      for (std::size_t a = 0; !named && a < e->aliases.size(); ++a) {
        named = detail::contains_phrase(canon, canonicalize(e->aliases[a]));
      }
      if (named || sim >= threshold_) kept.push_back({id, sim});
    }
    std::stable_sort(kept.begin(), kept.end(), [](const ScoredNode& a, const ScoredNode& b) {
      return a.similarity > b.similarity;
    });
    if (kept.size() > cap_) kept.resize(cap_);
    SelectedEntities out;
    for (const ScoredNode& s : kept) out.ids.push_back(s.id);
    std::sort(out.ids.begin(), out.ids.end());
    return out;
  }

 private:
  double threshold_;
  std::size_t cap_;
};

inline std::string selection_prompt(std::string_view sentence,
                                    const CandidateSet& candidates,
                                    const KnowledgeGraph& kg,
                                    std::string_view tmpl = prompts::kSelectionTemplate) {
  std::string lines;
  for (NodeId id : candidates.candidates) {
    const Entity* e = kg.entity_by_id(id);
    if (!e) continue;
    lines += "- " + e->name + ": " +
             (e->description.empty() ? "(no description)" : e->description) + "\n";
  }
  if (!lines.empty()) lines.pop_back();
  return prompts::render(tmpl, {{"sentence", std::string(sentence)},
                                {"candidates", lines}});
}

// One reply item with list markers, quotes and trailing periods removed.
inline std::string clean_name_item(std::string_view item) {
  std::string_view v = trim(item);
  while (!v.empty() && (v.front() == '-' || v.front() == '*' || v.front() == '"' ||
                        v.front() == '\'')) {
    v.remove_prefix(1);
    v = trim(v);
  }
  while (!v.empty() && (v.back() == '"' || v.back() == '\'' || v.back() == '.')) {
    v.remove_suffix(1);
  }
  return std::string(trim(v));
}

// Newline- or comma-separated entity names, each cleaned by clean_name_item.
inline std::vector<std::string> parse_name_list(std::string_view reply) {
  std::vector<std::string> names;
  std::string cur;
  auto flush = [&] {
    std::string v = clean_name_item(cur);
    if (!v.empty()) names.push_back(std::move(v));
    cur.clear();
  };
  for (char c : reply) {
    if (c == '\n' || c == ',') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return names;
}

// Prompts a chat model with the sentence and every candidate's description,
// then admits only names that resolve to candidates.
class ModelSelector final : public Selector {
 public:
  explicit ModelSelector(ChatModel& model,
                         std::string tmpl = std::string(prompts::kSelectionTemplate))
      : model_(model), template_(std::move(tmpl)) {}

  SelectedEntities select(std::string_view sentence, const CandidateSet& candidates,
                          const KnowledgeGraph& kg) override {
    SelectedEntities out;
    if (candidates.empty()) return out;
    std::string reply = model_.complete(selection_prompt(sentence, candidates, kg, template_));
    std::set<NodeId> picked;
    // Names with commas ("Wheeler, Texas") split into pieces; try the whole
    // line first.
    std::vector<std::string> items;
    for (std::string& line : split(reply, '\n')) {
      auto whole = kg.id_of(clean_name_item(line));
      if (whole && candidates.contains(*whole)) {
        picked.insert(*whole);
        continue;
      }
      for (std::string& n : parse_name_list(line)) items.push_back(std::move(n));
    }
    for (const std::string& name : items) {
      auto id = kg.id_of(name);
      if (id && candidates.contains(*id)) {
        picked.insert(*id);
      } else {
        out.warnings.push_back("model selected non-candidate '" + name + "'");
      }
    }
    out.ids.assign(picked.begin(), picked.end());
    return out;
  }

 private:
  ChatModel& model_;
  std::string template_;
};

// ---------------------------------------------------------------------------
// End to end
// ---------------------------------------------------------------------------

struct ExtractionConfig {
  std::size_t top_k = kDefaultTopK;
};

struct StageTimings {
  double recognize_ms = 0.0;
  double expand_ms = 0.0;
  double select_ms = 0.0;
};

struct ExtractionResult {
  std::vector<Mention> mentions;
  CandidateSet candidates;
  SelectedEntities selected;
  StageTimings timings;

  bool empty() const { return selected.ids.empty(); }
};

inline ExtractionResult extract(std::string_view sentence, const KnowledgeGraph& kg,
                                const EmbeddingIndex& index, Embedder& embedder,
                                const Recognizer& recognizer, Selector& selector,
                                const ExtractionConfig& config = {}) {
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
  };
  ExtractionResult r;
  auto t0 = clock::now();
  r.mentions = recognizer.recognize(sentence);
  auto t1 = clock::now();
  r.candidates = expand(r.mentions, index, embedder, config.top_k);
  auto t2 = clock::now();
  r.selected = selector.select(sentence, r.candidates, kg);
  auto t3 = clock::now();
  r.timings = {ms(t0, t1), ms(t1, t2), ms(t2, t3)};
  return r;
}

}  // namespace kgrag
