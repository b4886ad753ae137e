#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "simvc/data_model.hpp"
#include "simvc/encoder.hpp"
#include "simvc/graph.hpp"
#include "simvc/portrait.hpp"
#include "simvc/vgat.hpp"

namespace simvc {

struct DateRange {
  Date start, end;  // inclusive
  bool contains(Date d) const { return start <= d && d <= end; }
};

struct SplitSpec {
  DateRange train_window, val_window, test_window;  // over first-financing dates
  std::vector<int> k_values = {10, 20, 30};
  double min_pos_neg_ratio = 0.05;
  int horizon_days = 365;

  void validate() const {
    if (min_pos_neg_ratio < 0) throw InvalidConfig("min_pos_neg_ratio must be >= 0");
    for (const auto* w : {&train_window, &val_window, &test_window}) {
      if (w->end < w->start) throw InvalidConfig("split window end precedes start");
    }
    if (!(train_window.end < val_window.start && val_window.end < test_window.start)) {
      throw InvalidConfig("split windows must be disjoint and ordered train < val < test");
    }
    if (k_values.empty()) throw InvalidConfig("k_values must be nonempty");
    for (int k : k_values) {
      if (k < 1) throw InvalidConfig("k values must be >= 1");
    }
  }
};

/// An InvestorGraph with encoded node features and labeled real edges; the
/// VGAT training unit.
struct EdgeTrainingGraph {
  InvestorGraph meta;
  EdgeGraph numeric;
  int k_requested = 0;
};

struct SplitStats {
  std::vector<std::string> companies;
  int graphs_built = 0;
  int graphs_retained = 0;
  int graphs_dropped = 0;
  long positives = 0;  // over retained graphs
  long negatives = 0;
  double aggregate_ratio() const {
    return negatives > 0 ? double(positives) / double(negatives) : 0.0;
  }

  json to_json() const {
    return {{"companies", companies},        {"graphs_built", graphs_built},
            {"graphs_retained", graphs_retained}, {"graphs_dropped", graphs_dropped},
            {"positives", positives},        {"negatives", negatives},
            {"aggregate_pos_neg_ratio", aggregate_ratio()}};
  }
};

struct TrainingGraphs {
  std::vector<EdgeTrainingGraph> train, val, test;
  SplitStats train_stats, val_stats, test_stats;
};

namespace detail {

/// Labels each real edge 1 iff both endpoints take part in a round of this
/// startup inside (first, first + horizon].
inline void label_edges(const Dataset& ds, const std::string& startup_id, Date first_date,
                        int horizon_days, const InvestorGraph& meta, EdgeGraph& g) {
  std::set<std::pair<int, int>> positive_pairs;
  auto it = ds.rounds_by_startup.find(startup_id);
  if (it != ds.rounds_by_startup.end()) {
    for (size_t idx : it->second) {
      const FundingRound& r = ds.rounds[idx];
      if (!(r.round_date > first_date &&
            r.round_date <= first_date.add_days(horizon_days))) {
        continue;
      }
      std::vector<int> present;
      for (const auto& inv : r.investor_ids) {
        const int pos = meta.node_pos(inv);
        if (pos >= 0) present.push_back(pos);
      }
      for (size_t i = 0; i < present.size(); ++i) {
        for (size_t j = i + 1; j < present.size(); ++j) {
          positive_pairs.insert(std::minmax(present[i], present[j]));
        }
      }
    }
  }
  for (auto& e : g.edges) {
    e.label = positive_pairs.count({e.a, e.b}) ? 1 : 0;
  }
}

}  // namespace detail

/// Encoded numeric view of an investor graph: one portrait embedding per
/// candidate plus the startup portrait embedding on the virtual node.
inline EdgeGraph embed_graph(const Dataset& ds, const InvestorGraph& meta,
                             TextEncoder& encoder) {
  EdgeGraph g;
  g.graph_id = meta.startup_id;
  g.features = Mat(static_cast<Eigen::Index>(meta.real_nodes.size()),
                   static_cast<Eigen::Index>(encoder.dimension()));
  for (size_t i = 0; i < meta.real_nodes.size(); ++i) {
    const auto profile = render_investor_portrait(ds, meta.real_nodes[i], meta.cutoff);
    const auto emb = encoder.encode(profile.text, meta.real_nodes[i]);
    for (size_t d = 0; d < emb.values.size(); ++d) {
      g.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = emb.values[d];
    }
  }
  const auto sprofile = render_startup_portrait(ds, meta.startup_id, meta.cutoff);
  const auto semb = encoder.encode(sprofile.text, meta.startup_id);
  g.virtual_feature = Mat(1, static_cast<Eigen::Index>(encoder.dimension()));
  for (size_t d = 0; d < semb.values.size(); ++d) {
    g.virtual_feature(0, static_cast<Eigen::Index>(d)) = semb.values[d];
  }
  for (const auto& e : meta.real_edges) {
    g.edges.push_back({e.a, e.b, e.weight, -1});
  }
  g.virtual_weights = meta.virtual_weights;
  return g;
}

/// Startups whose first seed/angel round falls in the window, in id order.
inline std::vector<std::string> startups_first_financed_in(const Dataset& ds,
                                                           const DateRange& window) {
  std::vector<std::string> out;
  for (const auto& [id, s] : ds.startups) {
    try {
      if (window.contains(first_round(ds, id).round_date)) out.push_back(id);
    } catch (const NoQualifyingRound&) {
    }
  }
  return out;
}

/// Builds one labeled graph per qualifying company per k. A company
/// qualifies when its first financing falls in the window AND a follow-on
/// round lands within the horizon (the edge supervision signal requires an
/// observed future round). Graphs under the pos/neg ratio floor are dropped
/// and counted.
inline TrainingGraphs build_training_graphs(const Dataset& ds, const SplitSpec& spec,
                                            TextEncoder& encoder, uint64_t seed) {
  spec.validate();
  TrainingGraphs out;

  auto build_split = [&](const DateRange& window, std::vector<EdgeTrainingGraph>& dst,
                         SplitStats& stats, const char* name) {
    const auto in_window = startups_first_financed_in(ds, window);
    for (const auto& id : in_window) {
      if (!label_followon(ds, id, spec.horizon_days)) continue;  // qualification rule
      stats.companies.push_back(id);
      const Date cutoff = first_round(ds, id).round_date;
      for (int k : spec.k_values) {
        const auto pool = candidate_pool(ds, id, cutoff);
        const auto candidates = sample_candidates(
            pool, static_cast<size_t>(k),
            mix_seed(seed, "sample:" + id + ":k" + std::to_string(k)));
        EdgeTrainingGraph g;
        g.k_requested = k;
        g.meta = build_graph(ds, id, candidates, cutoff);
        g.numeric = embed_graph(ds, g.meta, encoder);
        g.numeric.graph_id = id + ":k" + std::to_string(k);
        detail::label_edges(ds, id, cutoff, spec.horizon_days, g.meta, g.numeric);
        ++stats.graphs_built;
        if (g.numeric.pos_neg_ratio() < spec.min_pos_neg_ratio) {
          ++stats.graphs_dropped;
          continue;
        }
        ++stats.graphs_retained;
        stats.positives += g.numeric.positives();
        stats.negatives += g.numeric.negatives();
        dst.push_back(std::move(g));
      }
    }
    if (stats.companies.empty()) {
      throw EmptyWindow(std::string(name) + " window holds no qualifying company");
    }
  };

  build_split(spec.train_window, out.train, out.train_stats, "train");
  build_split(spec.val_window, out.val, out.val_stats, "val");
  build_split(spec.test_window, out.test, out.test_stats, "test");
  return out;
}

struct CohortEntry {
  std::string startup_id;
  Date first_round_date;
  bool label = false;
};

/// The simulation cohort: every startup first financed (seed/angel) in the
/// window, labeled by follow-on within the horizon. No follow-on
/// qualification here, unlike the training graphs.
inline std::vector<CohortEntry> build_test_cohort(const Dataset& ds, const DateRange& window,
                                                  int horizon_days = 365) {
  std::vector<CohortEntry> cohort;
  for (const auto& id : startups_first_financed_in(ds, window)) {
    CohortEntry e;
    e.startup_id = id;
    e.first_round_date = first_round(ds, id).round_date;
    e.label = label_followon(ds, id, horizon_days);  // LabelNotObservable propagates
    cohort.push_back(e);
  }
  return cohort;
}

// ---- graph bundle serialization --------------------------------------------

inline json to_json(const EdgeTrainingGraph& g) {
  json j = to_json(g.meta);
  j["k_requested"] = g.k_requested;
  j["graph_id"] = g.numeric.graph_id;
  json edges = json::array();
  for (const auto& e : g.numeric.edges) {
    edges.push_back(json::array({e.a, e.b, e.weight, e.label}));
  }
  j["labeled_edges"] = edges;
  json feats = json::array();
  for (Eigen::Index r = 0; r < g.numeric.features.rows(); ++r) {
    std::vector<double> row(static_cast<size_t>(g.numeric.features.cols()));
    for (Eigen::Index c = 0; c < g.numeric.features.cols(); ++c) row[size_t(c)] = g.numeric.features(r, c);
    feats.push_back(row);
  }
  j["features"] = feats;
  std::vector<double> vf(static_cast<size_t>(g.numeric.virtual_feature.cols()));
  for (Eigen::Index c = 0; c < g.numeric.virtual_feature.cols(); ++c) {
    vf[size_t(c)] = g.numeric.virtual_feature(0, c);
  }
  j["virtual_feature"] = vf;
  return j;
}

inline EdgeTrainingGraph edge_training_graph_from_json(const json& j) {
  EdgeTrainingGraph g;
  g.meta = investor_graph_from_json(j);
  g.k_requested = j.value("k_requested", 0);
  g.numeric.graph_id = j.value("graph_id", g.meta.startup_id);
  for (const auto& e : j.at("labeled_edges")) {
    g.numeric.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>(),
                               e.at(3).get<int>()});
  }
  const auto feats = j.at("features").get<std::vector<std::vector<double>>>();
  if (feats.empty()) throw MalformedRecord("graph bundle without features");
  g.numeric.features = Mat(static_cast<Eigen::Index>(feats.size()),
                           static_cast<Eigen::Index>(feats.front().size()));
  for (size_t r = 0; r < feats.size(); ++r) {
    for (size_t c = 0; c < feats[r].size(); ++c) {
      g.numeric.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = feats[r][c];
    }
  }
  const auto vf = j.at("virtual_feature").get<std::vector<double>>();
  g.numeric.virtual_feature = Mat(1, static_cast<Eigen::Index>(vf.size()));
  for (size_t c = 0; c < vf.size(); ++c) {
    g.numeric.virtual_feature(0, static_cast<Eigen::Index>(c)) = vf[c];
  }
  g.numeric.virtual_weights = g.meta.virtual_weights;
  return g;
}

inline void write_graph_bundle(const std::vector<EdgeTrainingGraph>& graphs,
                               const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write graph bundle " + path.string());
  for (const auto& g : graphs) out << to_json(g).dump() << "\n";
}

inline std::vector<EdgeTrainingGraph> load_graph_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open graph bundle " + path.string());
  std::vector<EdgeTrainingGraph> graphs;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw MalformedRecord(path.string() + ":" + std::to_string(ln) + " bad JSON");
    }
    graphs.push_back(edge_training_graph_from_json(j));
  }
  return graphs;
}

inline std::vector<EdgeGraph> numeric_graphs(const std::vector<EdgeTrainingGraph>& graphs) {
  std::vector<EdgeGraph> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(g.numeric);
  return out;
}

}  // namespace simvc
