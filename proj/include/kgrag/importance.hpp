#pragma once

// Structural importance over an MCSG and the two-class unequal error
// protection split.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgrag/common.hpp"
#include "kgrag/semgraph.hpp"

namespace kgrag {

// Piecewise-linear SNR (dB) -> threshold map, clamped outside the
// breakpoints. Breakpoint SNRs must be strictly increasing and thresholds
// non-decreasing within [0, 1].
class ThresholdPolicy {
 public:
  using Breakpoint = std::pair<double, double>;

  ThresholdPolicy() : ThresholdPolicy({{0.0, 0.0}, {12.0, 0.8}}) {}

  explicit ThresholdPolicy(std::vector<Breakpoint> points) : points_(std::move(points)) {
    if (points_.empty()) throw ConfigError("threshold policy needs at least one breakpoint");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      auto [snr, tau] = points_[i];
      if (!std::isfinite(snr) || !(tau >= 0.0 && tau <= 1.0)) {
        throw ConfigError("threshold breakpoints need finite SNR and threshold in [0,1]");
      }
      if (i && !(snr > points_[i - 1].first)) {
        throw ConfigError("threshold breakpoint SNRs must be strictly increasing");
      }
      if (i && tau < points_[i - 1].second) {
        throw ConfigError("threshold policy must be non-decreasing in SNR");
      }
    }
  }

  double operator()(double snr_db) const {
    if (std::isnan(snr_db)) throw ConfigError("SNR is NaN");
    if (snr_db <= points_.front().first) return points_.front().second;
    if (snr_db >= points_.back().first) return points_.back().second;
    auto hi = std::upper_bound(points_.begin(), points_.end(), snr_db,
                               [](double s, const Breakpoint& b) { return s < b.first; });
    auto lo = hi - 1;
    double t = (snr_db - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
  }

  const std::vector<Breakpoint>& breakpoints() const { return points_; }

 private:
  std::vector<Breakpoint> points_;
};

struct ImportanceConfig {
  double alpha = 0.5;
  ThresholdPolicy threshold_policy;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
  }
};

struct ImportanceRow {
  std::size_t degree_raw = 0;
  double betweenness_raw = 0.0;
  double score = 0.0;
};

using ImportanceTable = std::map<NodeId, ImportanceRow>;

namespace detail {

// Simple undirected adjacency over MCSG nodes (indices into mcsg.nodes).
inline std::vector<std::vector<std::size_t>> simple_adjacency(const Mcsg& g) {
  std::unordered_map<NodeId, std::size_t> pos;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) pos.emplace(g.nodes[i], i);
  std::vector<std::vector<std::size_t>> adj(g.nodes.size());
  for (const Triple& t : g.edges) {
    auto a = pos.find(t.subject), b = pos.find(t.object);
    if (a == pos.end() || b == pos.end() || a->second == b->second) continue;
    adj[a->second].push_back(b->second);
    adj[b->second].push_back(a->second);
  }
  for (auto& v : adj) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return adj;
}

}  // namespace detail

// Number of distinct neighbours; parallel relations count once.
inline std::map<NodeId, std::size_t> degree_centrality(const Mcsg& g) {
  auto adj = detail::simple_adjacency(g);
  std::map<NodeId, std::size_t> out;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) out[g.nodes[i]] = adj[i].size();
  return out;
}

// Unweighted undirected betweenness, counting each unordered (s, t) pair
// once. Brandes accumulation.
inline std::map<NodeId, double> betweenness_centrality(const Mcsg& g) {
  auto adj = detail::simple_adjacency(g);
  const std::size_t n = g.nodes.size();
  std::vector<double> cb(n, 0.0);
  std::vector<double> sigma(n), delta(n);
  std::vector<long> dist(n);
  std::vector<std::vector<std::size_t>> pred(n);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    for (auto& p : pred) p.clear();
    order.clear();
    sigma[s] = 1.0;
    dist[s] = 0;
    std::deque<std::size_t> queue{s};
    while (!queue.empty()) {
      std::size_t v = queue.front();
      queue.pop_front();
      order.push_back(v);
      for (std::size_t w : adj[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          pred[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      std::size_t w = *it;
      for (std::size_t v : pred[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  std::map<NodeId, double> out;
  for (std::size_t i = 0; i < n; ++i) out[g.nodes[i]] = cb[i] / 2.0;
  return out;
}

// Min-max normalisation; a constant metric maps to 1.0 everywhere.
template <typename T>
std::map<NodeId, double> min_max_normalize(const std::map<NodeId, T>& raw) {
  std::map<NodeId, double> out;
  if (raw.empty()) return out;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& [id, v] : raw) {
    lo = std::min(lo, static_cast<double>(v));
    hi = std::max(hi, static_cast<double>(v));
  }
  for (const auto& [id, v] : raw) {
    out[id] = hi == lo ? 1.0 : (static_cast<double>(v) - lo) / (hi - lo);
  }
  return out;
}

inline ImportanceTable importance_scores(const Mcsg& g, const ImportanceConfig& config = {}) {
  config.validate();
  if (g.empty()) throw Error("importance scores need a non-empty MCSG");
  auto degree = degree_centrality(g);
  auto betweenness = betweenness_centrality(g);
  auto nd = min_max_normalize(degree);
  auto nb = min_max_normalize(betweenness);
  ImportanceTable table;
  for (NodeId id : g.nodes) {
    ImportanceRow row;
    row.degree_raw = degree[id];
    row.betweenness_raw = betweenness[id];
    row.score = config.alpha * nd[id] + (1.0 - config.alpha) * nb[id];
    table[id] = row;
  }
  return table;
}

struct UepPartition {
  NodeIdPayload protected_ids;  // convolutionally coded
  NodeIdPayload unprotected_ids;
  double threshold = 0.0;
};

inline UepPartition partition_at(const ImportanceTable& table, double threshold) {
  UepPartition p;
  p.threshold = threshold;
  for (const auto& [id, row] : table) {  // ascending id
    (row.score >= threshold ? p.protected_ids : p.unprotected_ids).ids.push_back(id);
  }
  return p;
}

inline UepPartition partition_uep(const ImportanceTable& table, double snr_db,
                                  const ImportanceConfig& config = {}) {
  return partition_at(table, config.threshold_policy(snr_db));
}

}  // namespace kgrag
