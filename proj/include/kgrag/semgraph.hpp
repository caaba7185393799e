#pragma once

// Minimum connected subgraph (selected entities plus their one-hop
// neighbourhood), its node-id payload, and receiver-side reconstruction.

#include <algorithm>
#include <numeric>
#include <span>
#include <unordered_map>
#include <vector>

#include "kgrag/common.hpp"
#include "kgrag/kg_store.hpp"

namespace kgrag {

struct Mcsg {
  std::vector<NodeId> nodes;  // ascending
  std::vector<NodeId> seeds;  // ascending, subset of nodes
  std::vector<Triple> edges;  // every KG triple with both endpoints in nodes

  bool empty() const { return nodes.empty(); }
  bool contains(NodeId id) const {
    return std::binary_search(nodes.begin(), nodes.end(), id);
  }
  friend bool operator==(const Mcsg&, const Mcsg&) = default;
};

struct NodeIdPayload {
  std::vector<NodeId> ids;  // ascending, distinct

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  friend bool operator==(const NodeIdPayload&, const NodeIdPayload&) = default;
};

namespace detail {

inline void sort_unique(std::vector<NodeId>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace detail

// Triples of `kg` with both endpoints in the ascending node list.
inline std::vector<Triple> induced_edges(std::span<const NodeId> nodes,
                                         const KnowledgeGraph& kg) {
  std::vector<Triple> edges;
  auto in = [&](NodeId v) { return std::binary_search(nodes.begin(), nodes.end(), v); };
  for (NodeId u : nodes) {
    for (const Triple& t : kg.outgoing(u)) {
      if (in(t.object)) edges.push_back(t);
    }
  }
  return edges;  // outgoing() ranges are sorted and visited in subject order
}

inline Mcsg build_mcsg(std::span<const NodeId> selected, const KnowledgeGraph& kg) {
  Mcsg g;
  g.seeds.assign(selected.begin(), selected.end());
  detail::sort_unique(g.seeds);
  g.nodes = g.seeds;
  for (NodeId s : g.seeds) {
    for (const Neighbor& n : kg.neighbors(s)) g.nodes.push_back(n.node);  // throws on unknown seed
  }
  detail::sort_unique(g.nodes);
  g.edges = induced_edges(g.nodes, kg);
  return g;
}

inline NodeIdPayload payload_of(const Mcsg& g) { return NodeIdPayload{g.nodes}; }

// Connected components of the undirected graph on `nodes` (ascending) with
// the given edges. Components are returned with ascending members.
inline std::vector<std::vector<NodeId>> connected_components(
    std::span<const NodeId> nodes, std::span<const Triple> edges) {
  std::unordered_map<NodeId, std::size_t> pos;
  for (std::size_t i = 0; i < nodes.size(); ++i) pos.emplace(nodes[i], i);
  std::vector<std::size_t> parent(nodes.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Triple& t : edges) {
    auto a = pos.find(t.subject), b = pos.find(t.object);
    if (a == pos.end() || b == pos.end()) continue;
    std::size_t ra = find(a->second), rb = find(b->second);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<std::vector<NodeId>> comps;
  std::unordered_map<std::size_t, std::size_t> comp_of_root;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto [it, fresh] = comp_of_root.try_emplace(find(i), comps.size());
    if (fresh) comps.emplace_back();
    comps[it->second].push_back(nodes[i]);
  }
  return comps;  // ordered by smallest member
}

struct ReconstructOptions {
  // Keep every component instead of only the largest.
  bool keep_all_components = false;
};

// Drops ids that are not KG nodes, induces edges among the survivors and
// keeps the largest connected component (ties: the component holding the
// smallest id). Seeds are unknowable at the receiver, so seeds = nodes.
inline Mcsg reconstruct(std::span<const NodeId> received, const KnowledgeGraph& kg,
                        const ReconstructOptions& opts = {}) {
  std::vector<NodeId> valid;
  for (NodeId id : received) {
    if (kg.contains(id)) valid.push_back(id);
  }
  detail::sort_unique(valid);
  Mcsg g;
  if (valid.empty()) return g;
  std::vector<Triple> edges = induced_edges(valid, kg);
  if (opts.keep_all_components) {
    g.nodes = std::move(valid);
    g.edges = std::move(edges);
  } else {
    auto comps = connected_components(valid, edges);
    const std::vector<NodeId>* best = &comps.front();
    for (const auto& c : comps) {
      if (c.size() > best->size()) best = &c;  // strict: earlier (smaller id) wins ties
    }
    g.nodes = *best;
    g.edges = induced_edges(g.nodes, kg);
  }
  g.seeds = g.nodes;
  return g;
}

}  // namespace kgrag
