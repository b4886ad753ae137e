#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "simvc/autodiff.hpp"
#include "simvc/errors.hpp"
#include "simvc/prng.hpp"

namespace simvc {

using ad::Mat;
using ad::Value;

/// Numeric view of a startup-centered graph as the edge models consume it:
/// real-node feature rows, one virtual (company) feature row, weighted real
/// edges with optional binary labels, and per-node virtual edge weights.
/// Edge endpoints are positions into the node order; a < b.
struct EdgeGraph {
  struct Edge {
    int a = 0, b = 0;
    double weight = 1.0;
    int label = -1;  // -1 = unlabeled
  };

  std::string graph_id;
  Mat features;      // n x d_enc
  Mat virtual_feature;  // 1 x d_enc
  std::vector<Edge> edges;
  std::vector<double> virtual_weights;

  int n_nodes() const { return static_cast<int>(features.rows()); }

  int positives() const {
    int c = 0;
    for (const auto& e : edges) c += e.label == 1;
    return c;
  }
  int negatives() const {
    int c = 0;
    for (const auto& e : edges) c += e.label == 0;
    return c;
  }
  /// Positive/negative label ratio; +inf when there are no negatives.
  double pos_neg_ratio() const {
    const int neg = negatives();
    if (neg == 0) return positives() > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    return static_cast<double>(positives()) / neg;
  }
};

/// One graph-attention layer: W node transform, attention vector a (2*d_out),
/// and a learned scalar gate on log(1 + edge weight).
struct GatLayerParams {
  Mat W;      // d_in x d_out
  Mat a;      // 2*d_out x 1
  Mat gamma;  // 1 x 1
};

struct MlpParams {
  Mat A1, b1;  // d x d, 1 x d
  Mat A2, b2;
};

/// How the edge-attention softmax in the edge head is normalized.
///
/// * channel_gate (default): per edge, softmax over the d_model channels of
///   the query-key agreement q (.) k; the result gates the value vector.
///   Strictly per-edge, so the company query modulates each edge's class
///   decision directly.
/// * joint_over_edges: one scalar logit per edge, softmax across all real
///   edges of the graph. Kept as an experiment: optimizing through the
///   shared attention budget starves part of the edges and pins their class
///   scores to the 0.5 boundary, which makes edge classification untrainable
///   in practice.
enum class EdgeAttentionMode { channel_gate, joint_over_edges };

inline std::string to_string(EdgeAttentionMode m) {
  return m == EdgeAttentionMode::channel_gate ? "channel_gate" : "joint_over_edges";
}

inline std::optional<EdgeAttentionMode> edge_attention_from_string(const std::string& s) {
  if (s == "channel_gate") return EdgeAttentionMode::channel_gate;
  if (s == "joint_over_edges") return EdgeAttentionMode::joint_over_edges;
  return std::nullopt;
}

struct VgatParams {
  GatLayerParams global, local;
  MlpParams virtual_mlp;
  Mat wq;  // d_model x d_model
  Mat wk;  // (2*d_model+1) x d_model
  Mat wv;  // (2*d_model+1) x d_model
  Mat classifier;  // d_model x 2
  int d_enc = 0, d_model = 0;
  EdgeAttentionMode edge_attention = EdgeAttentionMode::channel_gate;

  template <typename F>
  void for_each(F&& f) {
    f("global.W", global.W);
    f("global.a", global.a);
    f("global.gamma", global.gamma);
    f("local.W", local.W);
    f("local.a", local.a);
    f("local.gamma", local.gamma);
    f("mlp.A1", virtual_mlp.A1);
    f("mlp.b1", virtual_mlp.b1);
    f("mlp.A2", virtual_mlp.A2);
    f("mlp.b2", virtual_mlp.b2);
    f("wq", wq);
    f("wk", wk);
    f("wv", wv);
    f("classifier", classifier);
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<VgatParams*>(this)->for_each([&](const std::string& n, Mat& m) {
      f(n, static_cast<const Mat&>(m));
    });
  }
};

/// Two-layer GAT baseline: no virtual node; the company embedding is
/// concatenated onto every investor feature, and edges are classified from
/// [h_i || h_j || w_ij] directly.
struct GatBaselineParams {
  GatLayerParams layer1, layer2;
  Mat classifier;  // (2*d_model+1) x 2
  int d_enc = 0, d_model = 0;

  template <typename F>
  void for_each(F&& f) {
    f("layer1.W", layer1.W);
    f("layer1.a", layer1.a);
    f("layer1.gamma", layer1.gamma);
    f("layer2.W", layer2.W);
    f("layer2.a", layer2.a);
    f("layer2.gamma", layer2.gamma);
    f("classifier", classifier);
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<GatBaselineParams*>(this)->for_each([&](const std::string& n, Mat& m) {
      f(n, static_cast<const Mat&>(m));
    });
  }
};

namespace detail {

inline Mat glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-s, s);
  }
  return m;
}

inline GatLayerParams init_gat_layer(int d_in, int d_out, Rng& rng) {
  GatLayerParams p;
  p.W = glorot(d_in, d_out, rng);
  p.a = glorot(2 * d_out, 1, rng);
  p.gamma = Mat::Constant(1, 1, 0.1);
  return p;
}

}  // namespace detail

inline VgatParams init_vgat(int d_enc, int d_model, uint64_t seed) {
  Rng rng(mix_seed(seed, "vgat-init"));
  VgatParams p;
  p.d_enc = d_enc;
  p.d_model = d_model;
  p.global = detail::init_gat_layer(d_enc, d_model, rng);
  p.local = detail::init_gat_layer(d_model, d_model, rng);
  p.virtual_mlp.A1 = detail::glorot(d_model, d_model, rng);
  p.virtual_mlp.b1 = Mat::Zero(1, d_model);
  p.virtual_mlp.A2 = detail::glorot(d_model, d_model, rng);
  p.virtual_mlp.b2 = Mat::Zero(1, d_model);
  p.wq = detail::glorot(d_model, d_model, rng);
  p.wk = detail::glorot(2 * d_model + 1, d_model, rng);
  p.wv = detail::glorot(2 * d_model + 1, d_model, rng);
  p.classifier = detail::glorot(d_model, 2, rng);
  return p;
}

inline GatBaselineParams init_gat_baseline(int d_enc, int d_model, uint64_t seed) {
  Rng rng(mix_seed(seed, "gat-baseline-init"));
  GatBaselineParams p;
  p.d_enc = d_enc;
  p.d_model = d_model;
  p.layer1 = detail::init_gat_layer(2 * d_enc, d_model, rng);
  p.layer2 = detail::init_gat_layer(d_model, d_model, rng);
  p.classifier = detail::glorot(2 * d_model + 1, 2, rng);
  return p;
}

/// Tape-side mirror of GatLayerParams.
struct GatLayerLeaves {
  Value W, a, gamma;
};

struct VgatLeaves {
  GatLayerLeaves global, local;
  Value A1, b1, A2, b2;
  Value wq, wk, wv, classifier;
  EdgeAttentionMode edge_attention = EdgeAttentionMode::channel_gate;
  std::vector<std::pair<std::string, Value>> named;
};

struct GatBaselineLeaves {
  GatLayerLeaves layer1, layer2;
  Value classifier;
  std::vector<std::pair<std::string, Value>> named;
};

namespace detail {

template <typename Params, typename Leaves>
void bind_leaves(Params& params, Leaves& leaves, bool trainable,
                 std::map<std::string, Value>& by_name) {
  params.for_each([&](const std::string& name, Mat& m) {
    Value v = trainable ? ad::leaf(m) : ad::constant(m);
    by_name[name] = v;
    leaves.named.emplace_back(name, v);
  });
}

}  // namespace detail

inline VgatLeaves make_leaves(VgatParams& params, bool trainable = true) {
  VgatLeaves l;
  l.edge_attention = params.edge_attention;
  std::map<std::string, Value> m;
  detail::bind_leaves(params, l, trainable, m);
  l.global = {m["global.W"], m["global.a"], m["global.gamma"]};
  l.local = {m["local.W"], m["local.a"], m["local.gamma"]};
  l.A1 = m["mlp.A1"];
  l.b1 = m["mlp.b1"];
  l.A2 = m["mlp.A2"];
  l.b2 = m["mlp.b2"];
  l.wq = m["wq"];
  l.wk = m["wk"];
  l.wv = m["wv"];
  l.classifier = m["classifier"];
  return l;
}

inline GatBaselineLeaves make_leaves(GatBaselineParams& params, bool trainable = true) {
  GatBaselineLeaves l;
  std::map<std::string, Value> m;
  detail::bind_leaves(params, l, trainable, m);
  l.layer1 = {m["layer1.W"], m["layer1.a"], m["layer1.gamma"]};
  l.layer2 = {m["layer2.W"], m["layer2.a"], m["layer2.gamma"]};
  l.classifier = m["classifier"];
  return l;
}

/// Adjacency with per-neighbor edge weights; node u's own entry (weight 0)
/// is prepended inside gat_layer.
using WeightedAdjacency = std::vector<std::vector<std::pair<int, double>>>;

/// Single attention head over the given adjacency:
///   h'_u = ELU( sum_{v in N(u)+{u}} alpha_uv * W h_v ),
///   alpha = softmax over LeakyReLU(a^T [W h_u || W h_v]) + gamma*log1p(w_uv).
/// Isolated nodes reduce to a softmax over the self entry, i.e. ELU(W h_u).
inline Value gat_layer(const Value& X, const WeightedAdjacency& adj, const GatLayerLeaves& p) {
  const int n = static_cast<int>(X->val.rows());
  const int d_out = static_cast<int>(p.W->val.cols());
  if (static_cast<int>(adj.size()) != n) throw ShapeMismatch("gat_layer adjacency size");

  const Value HW = ad::matmul(X, p.W);
  std::vector<int> lower(static_cast<size_t>(d_out)), upper(static_cast<size_t>(d_out));
  for (int i = 0; i < d_out; ++i) {
    lower[size_t(i)] = i;
    upper[size_t(i)] = d_out + i;
  }
  // a^T [Wh_u || Wh_v] = (Wh_u . a_left) + (Wh_v . a_right)
  const Value s_left = ad::matmul(HW, ad::gather_rows(p.a, lower));
  const Value s_right = ad::matmul(HW, ad::gather_rows(p.a, upper));

  std::vector<Value> rows;
  rows.reserve(static_cast<size_t>(n));
  for (int u = 0; u < n; ++u) {
    std::vector<int> nbr{u};
    Mat gate(1, 1 + adj[size_t(u)].size());
    gate(0, 0) = 0.0;  // self weight is 0 by definition
    for (size_t t = 0; t < adj[size_t(u)].size(); ++t) {
      nbr.push_back(adj[size_t(u)][t].first);
      gate(0, static_cast<Eigen::Index>(t + 1)) = std::log1p(adj[size_t(u)][t].second);
    }
    Value raw = ad::add_scalar(ad::transpose(ad::gather_rows(s_right, nbr)),
                               ad::element(s_left, u, 0));
    Value logits = ad::add(ad::leaky_relu(raw),
                           ad::scalar_mul(ad::constant(gate), p.gamma));
    Value alpha = ad::softmax_row(logits);
    rows.push_back(ad::matmul(alpha, ad::gather_rows(HW, nbr)));
  }
  return ad::elu(ad::vstack(rows));
}

/// Per-edge model outputs: attended embedding, class logits, and the
/// class-1 probability.
struct EdgeOutput {
  int a = 0, b = 0;
  int label = -1;
  Value embedding;  // 1 x d (attended for VGAT, raw base feature for GAT)
  Value logits;     // 1 x 2
  double score = 0.0;
};

namespace detail {

inline WeightedAdjacency real_adjacency(const EdgeGraph& g) {
  WeightedAdjacency adj(static_cast<size_t>(g.n_nodes()));
  for (const auto& e : g.edges) {
    adj[size_t(e.a)].push_back({e.b, e.weight});
    adj[size_t(e.b)].push_back({e.a, e.weight});
  }
  return adj;
}

inline double class1_probability(const Mat& logits) {
  const double m = logits.maxCoeff();
  const double z0 = std::exp(logits(0, 0) - m), z1 = std::exp(logits(0, 1) - m);
  return z1 / (z0 + z1);
}

}  // namespace detail

/// VGAT forward pass (global GAT over real+virtual nodes, local GAT over the
/// real-node subgraph, MLP on the virtual node, edge attention with the
/// virtual embedding as query, softmax-normalized jointly over all real
/// edges, then a 2-class edge head). Returns one output per real edge;
/// edgeless graphs return an empty list.
inline std::vector<EdgeOutput> vgat_forward(const EdgeGraph& g, const VgatLeaves& p) {
  const int n = g.n_nodes();
  std::vector<EdgeOutput> out;
  if (g.edges.empty()) return out;
  if (g.virtual_weights.size() != static_cast<size_t>(n)) {
    throw ShapeMismatch("graph needs one virtual edge weight per real node");
  }

  Mat all_features(n + 1, g.features.cols());
  all_features.topRows(n) = g.features;
  all_features.row(n) = g.virtual_feature;

  WeightedAdjacency global_adj(static_cast<size_t>(n) + 1);
  for (const auto& e : g.edges) {
    global_adj[size_t(e.a)].push_back({e.b, e.weight});
    global_adj[size_t(e.b)].push_back({e.a, e.weight});
  }
  for (int i = 0; i < n; ++i) {
    const double c = g.virtual_weights[size_t(i)];
    global_adj[size_t(i)].push_back({n, c});
    global_adj[size_t(n)].push_back({i, c});
  }

  const Value h1 = gat_layer(ad::constant(all_features), global_adj, p.global);

  std::vector<int> real_idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) real_idx[size_t(i)] = i;
  const Value h2 = gat_layer(ad::gather_rows(h1, real_idx), detail::real_adjacency(g), p.local);

  const Value hd = ad::row(h1, n);
  const Value hidden = ad::elu(ad::add(ad::matmul(hd, p.A1), p.b1));
  const Value h_star = ad::add(ad::matmul(hidden, p.A2), p.b2);

  const int d_model = static_cast<int>(p.wq->val.cols());
  const double inv_sqrt_d = 1.0 / std::sqrt(double(d_model));
  const Value query = ad::matmul(h_star, p.wq);

  std::vector<Value> values, embeddings;
  std::vector<Value> logit_scalars;  // joint_over_edges only
  for (const auto& e : g.edges) {
    Value m = ad::hconcat({ad::row(h2, e.a), ad::row(h2, e.b),
                           ad::scalar(e.weight)});
    Value key = ad::matmul(m, p.wk);
    Value value = ad::matmul(m, p.wv);
    values.push_back(value);
    if (p.edge_attention == EdgeAttentionMode::channel_gate) {
      Value gate = ad::softmax_row(ad::scale(ad::cmul(query, key), inv_sqrt_d));
      embeddings.push_back(ad::cmul(gate, value));
    } else {
      logit_scalars.push_back(ad::scale(ad::dot(query, key), inv_sqrt_d));
    }
  }
  if (p.edge_attention == EdgeAttentionMode::joint_over_edges) {
    const Value alpha = ad::softmax_row(ad::hconcat(logit_scalars));
    for (size_t i = 0; i < g.edges.size(); ++i) {
      embeddings.push_back(ad::scalar_mul(values[i], ad::element(alpha, 0, static_cast<int>(i))));
    }
  }

  for (size_t i = 0; i < g.edges.size(); ++i) {
    EdgeOutput eo;
    eo.a = g.edges[i].a;
    eo.b = g.edges[i].b;
    eo.label = g.edges[i].label;
    eo.embedding = embeddings[i];
    eo.logits = ad::matmul(eo.embedding, p.classifier);
    eo.score = detail::class1_probability(eo.logits->val);
    out.push_back(std::move(eo));
  }
  return out;
}

/// Baseline two-layer GAT forward: company embedding concatenated onto every
/// node feature, no virtual node, classifier straight on [h_i || h_j || w].
inline std::vector<EdgeOutput> gat_baseline_forward(const EdgeGraph& g,
                                                    const GatBaselineLeaves& p) {
  std::vector<EdgeOutput> out;
  if (g.edges.empty()) return out;
  const int n = g.n_nodes();

  Mat features(n, 2 * g.features.cols());
  for (int i = 0; i < n; ++i) {
    features.row(i) << g.features.row(i), g.virtual_feature.row(0);
  }
  const auto adj = detail::real_adjacency(g);
  const Value h1 = gat_layer(ad::constant(features), adj, p.layer1);
  const Value h2 = gat_layer(h1, adj, p.layer2);

  for (const auto& e : g.edges) {
    EdgeOutput eo;
    eo.a = e.a;
    eo.b = e.b;
    eo.label = e.label;
    eo.embedding = ad::hconcat({ad::row(h2, e.a), ad::row(h2, e.b), ad::scalar(e.weight)});
    eo.logits = ad::matmul(eo.embedding, p.classifier);
    eo.score = detail::class1_probability(eo.logits->val);
    out.push_back(std::move(eo));
  }
  return out;
}

struct LossBreakdown {
  Value total;
  double cross_entropy = 0.0;
  double contrastive = 0.0;
};

struct LossConfig {
  double alpha_contrast = 0.01;
  size_t contrast_pair_cap = 64;  // per graph, sampled deterministically
  uint64_t seed = 0;
};

/// Cross-entropy averaged over labeled edges plus alpha * InfoNCE-style
/// contrastive term. Anchors pair with same-label edges of the same graph;
/// the denominator is the positive partner plus every different-label edge;
/// similarities are cosines of the edge embeddings. Graphs with a single
/// label class contribute no contrastive term.
inline LossBreakdown edge_loss(const std::vector<EdgeOutput>& edges, const LossConfig& cfg,
                               const std::string& graph_id) {
  if (edges.empty()) throw ShapeMismatch("edge_loss on empty edge list");

  std::vector<Value> ce_terms;
  for (const auto& e : edges) {
    if (e.label < 0) throw ShapeMismatch("edge_loss requires labeled edges");
    ce_terms.push_back(ad::cross_entropy_logits(e.logits, e.label));
  }
  Value ce = ad::scale(ad::sum(ad::hconcat(ce_terms)), 1.0 / double(ce_terms.size()));

  std::vector<size_t> pos, neg;
  for (size_t i = 0; i < edges.size(); ++i) (edges[i].label == 1 ? pos : neg).push_back(i);

  LossBreakdown out;
  out.cross_entropy = ce->val(0, 0);
  if (pos.empty() || neg.empty()) {
    out.total = ce;
    return out;
  }

  std::vector<std::pair<size_t, size_t>> pairs;
  auto add_pairs = [&](const std::vector<size_t>& group) {
    for (size_t i : group) {
      for (size_t j : group) {
        if (i != j) pairs.push_back({i, j});
      }
    }
  };
  add_pairs(pos);
  add_pairs(neg);
  if (pairs.empty()) {  // one edge per class: no same-label partner exists
    out.total = ce;
    return out;
  }
  if (pairs.size() > cfg.contrast_pair_cap) {
    Rng rng(mix_seed(cfg.seed, "contrast:" + graph_id));
    pairs = rng.sample(std::move(pairs), cfg.contrast_pair_cap);
  }

  // Cosine similarities are cached per (anchor, other) since anchors repeat.
  std::map<std::pair<size_t, size_t>, Value> sim_cache;
  auto sim = [&](size_t i, size_t j) {
    auto key = std::minmax(i, j);
    auto it = sim_cache.find(key);
    if (it == sim_cache.end()) {
      it = sim_cache.emplace(key, ad::cosine(edges[i].embedding, edges[j].embedding)).first;
    }
    return it->second;
  };
  // Per anchor, the sum of exp(similarity) over all different-label edges.
  std::map<size_t, Value> neg_sum_cache;
  auto neg_sum = [&](size_t anchor) {
    auto it = neg_sum_cache.find(anchor);
    if (it == neg_sum_cache.end()) {
      const auto& others = edges[anchor].label == 1 ? neg : pos;
      std::vector<Value> terms;
      for (size_t m : others) terms.push_back(ad::eexp(sim(anchor, m)));
      it = neg_sum_cache.emplace(anchor, ad::sum(ad::hconcat(terms))).first;
    }
    return it->second;
  };

  std::vector<Value> terms;
  for (const auto& [i, k] : pairs) {
    Value s_pos = sim(i, k);
    Value denom = ad::add(ad::eexp(s_pos), neg_sum(i));
    terms.push_back(ad::sub(ad::elog(denom), s_pos));
  }
  Value contrast = ad::scale(ad::sum(ad::hconcat(terms)), 1.0 / double(terms.size()));
  out.contrastive = contrast->val(0, 0);
  out.total = ad::add(ce, ad::scale(contrast, cfg.alpha_contrast));
  return out;
}

/// Interaction edges: real edges whose class-1 score clears the threshold.
struct ScoredEdge {
  int a = 0, b = 0;
  double score = 0.0;
};

inline std::vector<ScoredEdge> infer_interactions(const EdgeGraph& g, VgatParams& params,
                                                  double threshold = 0.5) {
  auto leaves = make_leaves(params, /*trainable=*/false);
  std::vector<ScoredEdge> out;
  for (const auto& e : vgat_forward(g, leaves)) {
    if (e.score >= threshold) out.push_back({e.a, e.b, e.score});
  }
  return out;
}

inline std::vector<ScoredEdge> infer_interactions_gat(const EdgeGraph& g,
                                                      GatBaselineParams& params,
                                                      double threshold = 0.5) {
  auto leaves = make_leaves(params, /*trainable=*/false);
  std::vector<ScoredEdge> out;
  for (const auto& e : gat_baseline_forward(g, leaves)) {
    if (e.score >= threshold) out.push_back({e.a, e.b, e.score});
  }
  return out;
}

}  // namespace simvc
