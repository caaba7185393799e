#pragma once

// Shared knowledge graph: entities, directed typed edges, descriptions,
// communities and the bijective canonical-name -> id map.
//
// Text format, one record per line, tab separated, '#' starts a comment:
//
//   C <community_id> <label> <summary>
//   E <node_id> <name> <community_id> <description> <alias1|alias2|...>
//   T <subject> <relation> <object>
//
// An empty E node_id is assigned automatically (densely, in first-appearance
// order, skipping ids taken explicitly). T endpoints are numeric ids, or
// entity names when the field is not a number. Records may appear in any
// order; references are resolved in a second pass.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "kgrag/common.hpp"

namespace kgrag {

struct Community {
  CommunityId id = 0;
  std::string label;
  std::string summary;

  friend bool operator==(const Community&, const Community&) = default;
};

struct Entity {
  NodeId id = 0;
  std::string name;
  std::string description;
  CommunityId community = 0;
  std::vector<std::string> aliases;

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct Triple {
  NodeId subject = 0;
  std::string relation;
  NodeId object = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct Neighbor {
  std::string relation;
  NodeId node = 0;

  friend auto operator<=>(const Neighbor&, const Neighbor&) = default;
};

// Parsed but unresolved records. Enrichment operates at this stage, before
// the graph is frozen.
struct KgRecords {
  using Endpoint = std::variant<NodeId, std::string>;

  struct EntityRecord {
    std::optional<NodeId> id;
    Entity entity;  // entity.id is filled in by KnowledgeGraph::build
    std::size_t line = 0;
  };
  struct TripleRecord {
    Endpoint subject;
    std::string relation;
    Endpoint object;
    std::size_t line = 0;
  };
  struct CommunityRecord {
    Community community;
    std::size_t line = 0;
  };

  std::vector<CommunityRecord> communities;
  std::vector<EntityRecord> entities;
  std::vector<TripleRecord> triples;
};

namespace detail {

inline std::optional<std::uint32_t> parse_u32(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline bool looks_numeric(std::string_view s) {
  s = trim(s);
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
}

inline std::uint32_t require_u32(std::string_view s, std::size_t line,
                                 const char* field) {
  auto v = parse_u32(s);
  if (!v) {
    throw FormatError(line, std::string("invalid ") + field + " '" +
                                std::string(s) + "'");
  }
  return *v;
}

}  // namespace detail

inline KgRecords parse_kg_records(std::span<const std::string> lines) {
  KgRecords rec;
  std::size_t lineno = 0;
  for (const std::string& raw : lines) {
    ++lineno;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || trim(line).front() == '#') continue;
    std::vector<std::string> f = split(line, '\t');
    const std::string& kind = f[0];
    if (kind == "C") {
      if (f.size() != 4) throw FormatError(lineno, "C record needs 4 fields");
      KgRecords::CommunityRecord c;
      c.community.id = detail::require_u32(f[1], lineno, "community id");
      c.community.label = std::string(trim(f[2]));
      c.community.summary = std::string(trim(f[3]));
      c.line = lineno;
      rec.communities.push_back(std::move(c));
    } else if (kind == "E") {
      if (f.size() != 6) throw FormatError(lineno, "E record needs 6 fields");
      KgRecords::EntityRecord e;
      if (!trim(f[1]).empty()) {
        e.id = detail::require_u32(f[1], lineno, "node id");
      }
      e.entity.name = std::string(trim(f[2]));
      if (e.entity.name.empty()) throw FormatError(lineno, "empty entity name");
      e.entity.community = detail::require_u32(f[3], lineno, "community id");
      e.entity.description = std::string(trim(f[4]));
      if (!trim(f[5]).empty()) {
        for (std::string& a : split(f[5], '|')) {
          std::string t(trim(a));
          if (!t.empty()) e.entity.aliases.push_back(std::move(t));
        }
      }
      e.line = lineno;
      rec.entities.push_back(std::move(e));
    } else if (kind == "T") {
      if (f.size() != 4) throw FormatError(lineno, "T record needs 4 fields");
      auto endpoint = [&](const std::string& s) -> KgRecords::Endpoint {
        if (detail::looks_numeric(s)) {
          return detail::require_u32(s, lineno, "node id");
        }
        if (trim(s).empty()) throw FormatError(lineno, "empty triple endpoint");
        return std::string(trim(s));
      };
      KgRecords::TripleRecord t;
      t.subject = endpoint(f[1]);
      t.relation = std::string(trim(f[2]));
      if (t.relation.empty()) throw FormatError(lineno, "empty relation label");
      t.object = endpoint(f[3]);
      t.line = lineno;
      rec.triples.push_back(std::move(t));
    } else {
      throw FormatError(lineno, "unknown record type '" + kind + "'");
    }
  }
  return rec;
}

inline std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(std::move(line));
  return lines;
}

inline std::vector<std::string> read_lines_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_lines(in);
}

// Immutable after construction; safe for concurrent readers.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  static KnowledgeGraph build(const KgRecords& rec) {
    KnowledgeGraph kg;

    for (const auto& c : rec.communities) {
      auto [it, fresh] = kg.community_pos_.emplace(c.community.id, 0);
      if (!fresh) {
        throw FormatError(c.line, "duplicate community id " +
                                      std::to_string(c.community.id));
      }
      kg.communities_.push_back(c.community);
    }
    std::sort(kg.communities_.begin(), kg.communities_.end(),
              [](const Community& a, const Community& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < kg.communities_.size(); ++i) {
      kg.community_pos_[kg.communities_[i].id] = i;
    }

    // Pass 1: explicit ids. Pass 2: dense auto-assignment.
    std::set<NodeId> taken;
    for (const auto& e : rec.entities) {
      if (e.id && !taken.insert(*e.id).second) {
        throw FormatError(e.line, "duplicate node id " + std::to_string(*e.id));
      }
    }
    NodeId next = 0;
    kg.entities_.reserve(rec.entities.size());
    for (const auto& e : rec.entities) {
      Entity ent = e.entity;
      if (e.id) {
        ent.id = *e.id;
      } else {
        while (taken.count(next)) {
          if (next == std::numeric_limits<NodeId>::max()) {
            throw FormatError(e.line, "node id space exhausted");
          }
          ++next;
        }
        ent.id = next;
        taken.insert(next);
      }
      if (!kg.community_pos_.count(ent.community)) {
        throw FormatError(e.line, "entity '" + ent.name +
                                      "' references unknown community " +
                                      std::to_string(ent.community));
      }
      std::string key = canonicalize(ent.name);
      if (!kg.name_index_.emplace(key, ent.id).second) {
        throw FormatError(e.line, "duplicate canonical name '" + ent.name + "'");
      }
      kg.entities_.push_back(std::move(ent));
    }
    std::sort(kg.entities_.begin(), kg.entities_.end(),
              [](const Entity& a, const Entity& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < kg.entities_.size(); ++i) {
      kg.entity_pos_.emplace(kg.entities_[i].id, i);
    }
    // Aliases never shadow a canonical name; among aliases the first wins.
    for (const Entity& ent : kg.entities_) {
      for (const std::string& a : ent.aliases) {
        std::string key = canonicalize(a);
        if (!kg.name_index_.count(key)) kg.alias_index_.emplace(key, ent.id);
      }
    }

    std::set<Triple> edges;
    for (const auto& t : rec.triples) {
      auto resolve = [&](const KgRecords::Endpoint& ep) -> NodeId {
        if (const NodeId* id = std::get_if<NodeId>(&ep)) {
          if (kg.entity_pos_.count(*id)) return *id;
        } else if (auto id2 = kg.id_of(std::get<std::string>(ep))) {
          return *id2;
        }
        auto show = [](const KgRecords::Endpoint& x) {
          if (const NodeId* id = std::get_if<NodeId>(&x)) {
            return std::to_string(*id);
          }
          return std::get<std::string>(x);
        };
        throw FormatError(t.line, "triple (" + show(t.subject) + ", " +
                                      t.relation + ", " + show(t.object) +
                                      ") references unknown entity " +
                                      show(ep));
      };
      edges.insert(Triple{resolve(t.subject), t.relation, resolve(t.object)});
    }
    kg.triples_.assign(edges.begin(), edges.end());

    kg.adjacency_.resize(kg.entities_.size());
    for (const Triple& t : kg.triples_) {
      kg.adjacency_[kg.entity_pos_.at(t.subject)].push_back({t.relation, t.object});
      kg.adjacency_[kg.entity_pos_.at(t.object)].push_back({t.relation, t.subject});
    }
    for (auto& adj : kg.adjacency_) {
      std::sort(adj.begin(), adj.end());
      adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    return kg;
  }

  static KnowledgeGraph ingest(std::span<const std::string> lines) {
    return build(parse_kg_records(lines));
  }

  static KnowledgeGraph load(std::istream& in) {
    std::vector<std::string> lines = read_lines(in);
    return ingest(lines);
  }

  static KnowledgeGraph load_file(const std::string& path) {
    std::vector<std::string> lines = read_lines_from_file(path);
    return ingest(lines);
  }

  void dump(std::ostream& out) const {
    for (const Community& c : communities_) {
      out << "C\t" << c.id << '\t' << c.label << '\t' << c.summary << '\n';
    }
    for (const Entity& e : entities_) {
      out << "E\t" << e.id << '\t' << e.name << '\t' << e.community << '\t'
          << e.description << '\t';
      for (std::size_t i = 0; i < e.aliases.size(); ++i) {
        if (i) out << '|';
        out << e.aliases[i];
      }
      out << '\n';
    }
    for (const Triple& t : triples_) {
      out << "T\t" << t.subject << '\t' << t.relation << '\t' << t.object
          << '\n';
    }
  }

  void save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    dump(out);
  }

  // nullptr when the id is not a node. Absence is the receiver's
  // signal that an id was corrupted.
  const Entity* entity_by_id(NodeId id) const {
    auto it = entity_pos_.find(id);
    return it == entity_pos_.end() ? nullptr : &entities_[it->second];
  }

  bool contains(NodeId id) const { return entity_pos_.count(id) != 0; }

  const Community* community(CommunityId id) const {
    auto it = community_pos_.find(id);
    return it == community_pos_.end() ? nullptr : &communities_[it->second];
  }

  // Out- and in-neighbors, deduplicated on (relation, neighbor), sorted.
  const std::vector<Neighbor>& neighbors(NodeId id) const {
    auto it = entity_pos_.find(id);
    if (it == entity_pos_.end()) {
      throw LookupError("unknown node id " + std::to_string(id));
    }
    return adjacency_[it->second];
  }

  // Triples whose subject is `id`, sorted by (relation, object).
  std::span<const Triple> outgoing(NodeId id) const {
    auto lo = std::lower_bound(
        triples_.begin(), triples_.end(), id,
        [](const Triple& t, NodeId v) { return t.subject < v; });
    auto hi = std::upper_bound(
        lo, triples_.end(), id,
        [](NodeId v, const Triple& t) { return v < t.subject; });
    return {lo, hi};
  }

  std::optional<NodeId> id_of(std::string_view name) const {
    std::string key = canonicalize(name);
    if (auto it = name_index_.find(key); it != name_index_.end()) {
      return it->second;
    }
    if (auto it = alias_index_.find(key); it != alias_index_.end()) {
      return it->second;
    }
    return std::nullopt;
  }

  std::span<const Entity> entities() const { return entities_; }
  std::span<const Triple> triples() const { return triples_; }
  std::span<const Community> communities() const { return communities_; }
  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_triples() const { return triples_.size(); }

  friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
    return a.entities_ == b.entities_ && a.triples_ == b.triples_ &&
           a.communities_ == b.communities_;
  }

 private:
  std::vector<Entity> entities_;  // ascending id
  std::vector<Triple> triples_;   // ascending (subject, relation, object)
  std::vector<Community> communities_;
  std::vector<std::vector<Neighbor>> adjacency_;  // parallel to entities_
  std::unordered_map<NodeId, std::size_t> entity_pos_;
  std::unordered_map<CommunityId, std::size_t> community_pos_;
  std::unordered_map<std::string, NodeId> name_index_;
  std::unordered_map<std::string, NodeId> alias_index_;
};

// Fills empty entity descriptions and community summaries with model output.
// Returns the number of fields filled.
template <typename Model>
std::size_t enrich_records(KgRecords& rec, Model& model) {
  std::size_t filled = 0;
  std::unordered_map<CommunityId, std::vector<std::string>> members;
  for (auto& e : rec.entities) {
    members[e.entity.community].push_back(e.entity.name);
    if (!e.entity.description.empty()) continue;
    std::string reply = model.complete(
        "Write one concise sentence describing the entity \"" +
        e.entity.name + "\" for a knowledge base. Reply with the sentence only.");
    std::string d(trim(reply));
    std::replace_if(d.begin(), d.end(), [](char c) { return is_space(c); }, ' ');
    if (!d.empty()) {
      e.entity.description = std::move(d);
      ++filled;
    }
  }
  for (auto& c : rec.communities) {
    if (!c.community.summary.empty()) continue;
    std::string prompt = "Write one concise sentence summarising the category \"" +
                         c.community.label + "\", whose members include: ";
    const auto& names = members[c.community.id];
    for (std::size_t i = 0; i < names.size(); ++i) {
      prompt += (i ? ", " : "") + names[i];
    }
    prompt += ". Reply with the sentence only.";
    std::string s(trim(model.complete(prompt)));
    std::replace_if(s.begin(), s.end(), [](char ch) { return is_space(ch); }, ' ');
    if (!s.empty()) {
      c.community.summary = std::move(s);
      ++filled;
    }
  }
  return filled;
}

}  // namespace kgrag
