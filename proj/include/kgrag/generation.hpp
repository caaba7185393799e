#pragma once

// Receiver-side text reconstruction from a subgraph and the shared KG.

#include <set>
#include <string>
#include <vector>

#include "kgrag/common.hpp"
#include "kgrag/kg_store.hpp"
#include "kgrag/model.hpp"
#include "kgrag/prompts.hpp"
#include "kgrag/semgraph.hpp"

namespace kgrag {

struct NamedTriple {
  std::string subject;
  std::string relation;
  std::string object;
};

struct Prompt {
  std::string instruction;
  std::string triples_section;       // one "subject --relation--> object" line per edge
  std::string descriptions_section;  // one "name: description" line per node
  // Structured copies of the sections, used by the template realizer.
  std::vector<NamedTriple> triples;
  std::vector<std::string> node_names;  // ascending node id

  std::string render(std::string_view tmpl = prompts::kGenerationTemplate) const {
    return prompts::render(tmpl, {{"instruction", instruction},
                                  {"triples", triples_section},
                                  {"descriptions", descriptions_section}});
  }
};

// Entity names with underscores (WebNLG style) read as spaces.
inline std::string display_name(std::string_view name) {
  std::string out(name);
  for (char& c : out) {
    if (c == '_') c = ' ';
  }
  return collapse_whitespace(out);
}

inline Prompt build_prompt(const Mcsg& g, const KnowledgeGraph& kg) {
  if (g.empty()) throw Error("cannot build a prompt from an empty subgraph");
  Prompt p;
  p.instruction = std::string(prompts::kGenerationInstruction);
  auto entity = [&](NodeId id) -> const Entity& {
    const Entity* e = kg.entity_by_id(id);
    if (!e) throw LookupError("subgraph node " + std::to_string(id) + " is not in the KG");
    return *e;
  };
  for (NodeId id : g.nodes) {
    const Entity& e = entity(id);
    p.node_names.push_back(display_name(e.name));
    p.descriptions_section += display_name(e.name) + ": " +
                              (e.description.empty() ? "(no description)" : e.description) +
                              "\n";
  }
  std::set<Triple> edges(g.edges.begin(), g.edges.end());  // (subject, relation, object)
  for (const Triple& t : edges) {
    NamedTriple nt{display_name(entity(t.subject).name), t.relation,
                   display_name(entity(t.object).name)};
    p.triples_section += nt.subject + " --" + nt.relation + "--> " + nt.object + "\n";
    p.triples.push_back(std::move(nt));
  }
  if (!p.descriptions_section.empty()) p.descriptions_section.pop_back();
  if (!p.triples_section.empty()) p.triples_section.pop_back();
  return p;
}

// "birthPlace" -> "birth place", "was_born_in" -> "was born in",
// "leaderOfUSA" -> "leader of usa".
inline std::string verbalize_relation(std::string_view rel) {
  std::string out;
  auto upper = [](char c) { return c >= 'A' && c <= 'Z'; };
  auto lower = [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); };
  for (std::size_t i = 0; i < rel.size(); ++i) {
    char c = rel[i];
    if (c == '_' || c == '-' || is_space(c)) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
      continue;
    }
    if (upper(c) && i > 0) {
      bool after_lower = lower(rel[i - 1]);
      bool acronym_end = upper(rel[i - 1]) && i + 1 < rel.size() && lower(rel[i + 1]);
      if ((after_lower || acronym_end) && !out.empty() && out.back() != ' ') out.push_back(' ');
    }
    out.push_back(ascii_lower(c));
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

enum class Backend { kStub, kRemote };

inline const char* backend_name(Backend b) { return b == Backend::kStub ? "stub" : "remote"; }

struct ReconstructedText {
  std::string text;
  Backend backend_used = Backend::kStub;
  bool fallback = false;  // remote failed or answered empty; stub text used
  std::string diagnostic;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual ReconstructedText generate(const Prompt& prompt) = 0;
};

// One clause per triple, "subject relation-phrase object", joined by "; "
// with a trailing period. Nodes that appear in no triple are listed by name.
class StubGenerator final : public Generator {
 public:
  ReconstructedText generate(const Prompt& p) override {
    std::vector<std::string> clauses;
    std::set<std::string> covered;
    for (const NamedTriple& t : p.triples) {
      std::string phrase = verbalize_relation(t.relation);
      clauses.push_back(t.subject + (phrase.empty() ? "" : " " + phrase) + " " + t.object);
      covered.insert(t.subject);
      covered.insert(t.object);
    }
    for (const std::string& n : p.node_names) {
      if (!covered.count(n)) clauses.push_back(n);
    }
    ReconstructedText r;
    for (std::size_t i = 0; i < clauses.size(); ++i) {
      if (i) r.text += "; ";
      r.text += clauses[i];
    }
    if (!r.text.empty()) r.text += ".";
    return r;
  }
};

// Sends the rendered prompt to a chat model and returns its text trimmed but
// otherwise verbatim. Transport failures (after the client's own retries) and
// empty replies fall back to the stub template, flagged.
class ModelGenerator final : public Generator {
 public:
  explicit ModelGenerator(ChatModel& model,
                          std::string tmpl = std::string(prompts::kGenerationTemplate))
      : model_(model), template_(std::move(tmpl)) {}

  ReconstructedText generate(const Prompt& p) override {
    std::string reply;
    try {
      reply = std::string(trim(model_.complete(p.render(template_))));
    } catch (const TransportError& e) {
      return fallback(p, std::string("transport failure: ") + e.what());
    }
    if (reply.empty()) return fallback(p, "empty model response");
    ReconstructedText r;
    r.text = std::move(reply);
    r.backend_used = Backend::kRemote;
    return r;
  }

 private:
  ReconstructedText fallback(const Prompt& p, std::string why) {
    ReconstructedText r = StubGenerator().generate(p);
    r.fallback = true;
    r.diagnostic = std::move(why);
    return r;
  }

  ChatModel& model_;
  std::string template_;
};

// Empty-subgraph short circuit: returns an empty text flagged as such.
inline ReconstructedText reconstruct_text(const Mcsg& g, const KnowledgeGraph& kg,
                                          Generator& gen) {
  if (g.empty()) {
    ReconstructedText r;
    r.diagnostic = "empty subgraph";
    return r;
  }
  return gen.generate(build_prompt(g, kg));
}

}  // namespace kgrag
