#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "simvc/data_model.hpp"
#include "simvc/prng.hpp"

namespace simvc {

/// Startup-centered co-investment graph: k real investor nodes plus one
/// virtual node for the target. Real edge weights count distinct rounds
/// (dated <= cutoff) both endpoints shared; every real node carries one
/// virtual edge of weight `c_i`.
///
/// Node order in `real_nodes` is the canonical order: edge endpoints are
/// stored with position(a) < position(b) and every downstream consumer
/// (edge features, prompts, serialization) follows it.
struct InvestorGraph {
  struct Edge {
    int a = 0, b = 0;  // positions into real_nodes, a < b
    double weight = 0.0;
  };

  std::string startup_id;
  Date cutoff;
  std::vector<std::string> real_nodes;
  std::vector<Edge> real_edges;
  std::vector<double> virtual_weights;  // one per real node

  int node_pos(const std::string& id) const {
    auto it = std::find(real_nodes.begin(), real_nodes.end(), id);
    return it == real_nodes.end() ? -1 : static_cast<int>(it - real_nodes.begin());
  }

  std::optional<double> edge_weight(int a, int b) const {
    if (a > b) std::swap(a, b);
    for (const auto& e : real_edges) {
      if (e.a == a && e.b == b) return e.weight;
    }
    return std::nullopt;
  }
};

inline json to_json(const InvestorGraph& g) {
  json j;
  j["startup_id"] = g.startup_id;
  j["cutoff"] = g.cutoff.to_string();
  j["nodes"] = g.real_nodes;
  json edges = json::array();
  for (const auto& e : g.real_edges) {
    edges.push_back(json::array({g.real_nodes[size_t(e.a)], g.real_nodes[size_t(e.b)], e.weight}));
  }
  j["edges"] = edges;
  j["virtual_edge_weights"] = g.virtual_weights;
  return j;
}

inline InvestorGraph investor_graph_from_json(const json& j) {
  InvestorGraph g;
  g.startup_id = j.at("startup_id").get<std::string>();
  g.cutoff = Date::parse_or_throw(j.at("cutoff").get<std::string>());
  g.real_nodes = j.at("nodes").get<std::vector<std::string>>();
  for (const auto& e : j.at("edges")) {
    InvestorGraph::Edge edge;
    edge.a = g.node_pos(e.at(0).get<std::string>());
    edge.b = g.node_pos(e.at(1).get<std::string>());
    edge.weight = e.at(2).get<double>();
    if (edge.a < 0 || edge.b < 0) throw MalformedRecord("edge endpoint not in node list");
    if (edge.a > edge.b) std::swap(edge.a, edge.b);
    g.real_edges.push_back(edge);
  }
  g.virtual_weights = j.at("virtual_edge_weights").get<std::vector<double>>();
  return g;
}

/// Union of the startup's historical investors (rounds <= cutoff) and every
/// investor who ever shared a round (<= cutoff) with one of them. The
/// startup's own team members are excluded.
inline std::set<std::string> candidate_pool(const Dataset& ds, const std::string& startup_id,
                                            Date cutoff) {
  const Startup& s = ds.startup(startup_id);
  std::set<std::string> base = ds.historical_investors(startup_id, cutoff);
  if (base.empty()) throw NoHistoricalInvestors(startup_id);
  std::set<std::string> pool = base;
  for (const auto& inv : base) {
    auto it = ds.rounds_by_investor.find(inv);
    if (it == ds.rounds_by_investor.end()) continue;
    for (size_t idx : it->second) {
      const FundingRound& r = ds.rounds[idx];
      if (r.round_date > cutoff) continue;
      pool.insert(r.investor_ids.begin(), r.investor_ids.end());
    }
  }
  for (const auto& member : s.team) pool.erase(member);
  return pool;
}

/// Uniform sample without replacement, deterministic for a given seed.
/// The pool is ordered ascending by id before the partial Fisher-Yates walk
/// (see Rng for the pinned algorithm); if the pool is smaller than k the
/// whole pool is returned.
inline std::vector<std::string> sample_candidates(const std::set<std::string>& pool, size_t k,
                                                  uint64_t seed) {
  if (pool.empty()) throw EmptyPool("candidate pool is empty");
  if (k == 0) throw InvalidConfig("k must be >= 1");
  std::vector<std::string> items(pool.begin(), pool.end());
  Rng rng(seed);
  return rng.sample(std::move(items), k);
}

/// Real edges exactly between candidate pairs with >= 1 shared round at
/// cutoff; weight = number of distinct shared rounds. Virtual edges connect
/// the startup to every candidate with weight `virtual_weight`.
inline InvestorGraph build_graph(const Dataset& ds, const std::string& startup_id,
                                 const std::vector<std::string>& candidates, Date cutoff,
                                 double virtual_weight = 1.0) {
  if (candidates.empty()) throw EmptyPool("no candidates for " + startup_id);
  InvestorGraph g;
  g.startup_id = startup_id;
  g.cutoff = cutoff;
  g.real_nodes = candidates;
  g.virtual_weights.assign(candidates.size(), virtual_weight);

  std::map<std::string, int> pos;
  for (size_t i = 0; i < candidates.size(); ++i) pos[candidates[i]] = static_cast<int>(i);

  std::map<std::pair<int, int>, int> counts;
  for (const auto& r : ds.rounds) {
    if (r.round_date > cutoff) continue;
    std::vector<int> present;
    for (const auto& inv : r.investor_ids) {
      auto it = pos.find(inv);
      if (it != pos.end()) present.push_back(it->second);
    }
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());
    for (size_t i = 0; i < present.size(); ++i) {
      for (size_t j = i + 1; j < present.size(); ++j) {
        ++counts[{present[i], present[j]}];
      }
    }
  }
  for (const auto& [key, n] : counts) {
    g.real_edges.push_back({key.first, key.second, static_cast<double>(n)});
  }
  return g;
}

struct DistanceStats {
  double mean_distance_future_coinvestors = 0.0;
  double mean_distance_overall = 0.0;
  size_t future_pairs_used = 0;
  size_t future_pairs_unreachable = 0;
  size_t sampled_pairs_used = 0;
  size_t sampled_pairs_unreachable = 0;
};

namespace detail {

/// BFS over an adjacency-list graph; returns hop distances (-1 unreachable).
inline std::vector<int> bfs_hops(const std::vector<std::vector<int>>& adj, int src) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> q{src};
  dist[size_t(src)] = 0;
  while (!q.empty()) {
    const int u = q.front();
    q.pop_front();
    for (int v : adj[size_t(u)]) {
      if (dist[size_t(v)] < 0) {
        dist[size_t(v)] = dist[size_t(u)] + 1;
        q.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace detail

/// Mean unweighted shortest-path length over (a) investor pairs that first
/// co-invest after the cutoff and (b) uniformly sampled distinct node pairs,
/// both measured on the global co-investment graph as of the cutoff.
/// Unreachable pairs are excluded from the means and counted.
inline DistanceStats graph_distance_stats(const Dataset& ds, Date cutoff,
                                          size_t sample_pairs = 500, uint64_t seed = 7) {
  std::map<std::string, int> index;
  std::vector<std::vector<int>> adj;
  auto node_of = [&](const std::string& id) {
    auto [it, fresh] = index.try_emplace(id, static_cast<int>(adj.size()));
    if (fresh) adj.emplace_back();
    return it->second;
  };

  std::set<std::pair<int, int>> edges;
  std::set<std::pair<std::string, std::string>> past_pairs;
  for (const auto& r : ds.rounds) {
    if (r.round_date > cutoff) continue;
    for (size_t i = 0; i < r.investor_ids.size(); ++i) {
      const int a = node_of(r.investor_ids[i]);
      for (size_t j = i + 1; j < r.investor_ids.size(); ++j) {
        const int b = node_of(r.investor_ids[j]);
        if (a == b) continue;
        auto key = std::minmax(a, b);
        if (edges.insert({key.first, key.second}).second) {
          adj[size_t(a)].push_back(b);
          adj[size_t(b)].push_back(a);
        }
        auto skey = std::minmax(r.investor_ids[i], r.investor_ids[j]);
        past_pairs.insert({skey.first, skey.second});
      }
    }
  }

  // Pairs whose first co-investment happens strictly after the cutoff.
  std::set<std::pair<std::string, std::string>> future_pairs;
  for (const auto& r : ds.rounds) {
    if (r.round_date <= cutoff) continue;
    for (size_t i = 0; i < r.investor_ids.size(); ++i) {
      for (size_t j = i + 1; j < r.investor_ids.size(); ++j) {
        if (r.investor_ids[i] == r.investor_ids[j]) continue;
        auto key = std::minmax(r.investor_ids[i], r.investor_ids[j]);
        if (!past_pairs.count({key.first, key.second})) {
          future_pairs.insert({key.first, key.second});
        }
      }
    }
  }

  DistanceStats stats;
  std::map<int, std::vector<int>> bfs_cache;
  auto hops = [&](int src) -> const std::vector<int>& {
    auto it = bfs_cache.find(src);
    if (it == bfs_cache.end()) it = bfs_cache.emplace(src, detail::bfs_hops(adj, src)).first;
    return it->second;
  };

  double total = 0.0;
  for (const auto& [a, b] : future_pairs) {
    auto ia = index.find(a), ib = index.find(b);
    if (ia == index.end() || ib == index.end()) {
      ++stats.future_pairs_unreachable;
      continue;
    }
    const int d = hops(ia->second)[size_t(ib->second)];
    if (d < 0) {
      ++stats.future_pairs_unreachable;
    } else {
      total += d;
      ++stats.future_pairs_used;
    }
  }
  if (stats.future_pairs_used) {
    stats.mean_distance_future_coinvestors = total / double(stats.future_pairs_used);
  }

  total = 0.0;
  const size_t n = adj.size();
  if (n >= 2) {
    Rng rng(seed);
    for (size_t t = 0; t < sample_pairs; ++t) {
      const int a = static_cast<int>(rng.below(n));
      int b = static_cast<int>(rng.below(n - 1));
      if (b >= a) ++b;
      const int d = hops(a)[size_t(b)];
      if (d < 0) {
        ++stats.sampled_pairs_unreachable;
      } else {
        total += d;
        ++stats.sampled_pairs_used;
      }
    }
  }
  if (stats.sampled_pairs_used) {
    stats.mean_distance_overall = total / double(stats.sampled_pairs_used);
  }
  return stats;
}

}  // namespace simvc
