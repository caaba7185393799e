#pragma once

// Versioned prompt templates. The same text ships under data/prompts/ so
// live runs can be audited; tests keep the two copies identical.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "kgrag/common.hpp"

namespace kgrag::prompts {

inline constexpr std::string_view kSelectionVersion = "entity_selection_v1";
inline constexpr std::string_view kSelectionTemplate =
    "You are linking entities for a knowledge-graph based communication system.\n"
    "\n"
    "Sentence:\n"
    "{{sentence}}\n"
    "\n"
    "Candidate entities from the knowledge graph, with their descriptions:\n"
    "{{candidates}}\n"
    "\n"
    "Select the candidates that the sentence actually refers to. Reply with the\n"
    "selected entity names exactly as written above, one per line, and nothing else.\n";

inline constexpr std::string_view kGenerationVersion = "generation_v1";
inline constexpr std::string_view kGenerationTemplate =
    "{{instruction}}\n"
    "\n"
    "Triples:\n"
    "{{triples}}\n"
    "\n"
    "Entity descriptions:\n"
    "{{descriptions}}\n";

inline constexpr std::string_view kGenerationInstruction =
    "Write one coherent, natural-sounding sentence that expresses every "
    "relationship and entity listed below. Use only these facts and reply "
    "with the sentence only.";

// Replaces every "{{key}}" with its value. Unknown placeholders are kept.
inline std::string render(std::string_view tmpl,
                          const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    std::size_t open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    std::size_t close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    std::string key(tmpl.substr(open + 2, close - open - 2));
    if (auto it = values.find(key); it != values.end()) {
      out += it->second;
    } else {
      out.append(tmpl.substr(open, close + 2 - open));
    }
    pos = close + 2;
  }
  out.append(tmpl.substr(pos));
  return out;
}

inline std::string load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open prompt template '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace kgrag::prompts
