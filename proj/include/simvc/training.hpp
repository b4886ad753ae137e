#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "simvc/vgat.hpp"

namespace simvc {

using json = nlohmann::json;

template <typename Params>
struct ModelOps;

template <>
struct ModelOps<VgatParams> {
  using Leaves = VgatLeaves;
  static constexpr const char* name = "vgat";
  static Leaves leaves(VgatParams& p, bool trainable) { return make_leaves(p, trainable); }
  static std::vector<EdgeOutput> forward(const EdgeGraph& g, const Leaves& l) {
    return vgat_forward(g, l);
  }
};

template <>
struct ModelOps<GatBaselineParams> {
  using Leaves = GatBaselineLeaves;
  static constexpr const char* name = "gat_baseline";
  static Leaves leaves(GatBaselineParams& p, bool trainable) { return make_leaves(p, trainable); }
  static std::vector<EdgeOutput> forward(const EdgeGraph& g, const Leaves& l) {
    return gat_baseline_forward(g, l);
  }
};

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 0.01;
  double alpha_contrast = 0.01;
  int max_epochs = 200;
  int patience = 10;
  uint64_t seed = 0;
  double min_pos_neg_ratio = 0.05;
  size_t contrast_pair_cap = 64;
  double score_threshold = 0.5;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0, train_ce = 0.0, train_contrast = 0.0;
  double val_precision = 0.0, val_recall = 0.0, val_f1 = 0.0;
  bool best = false;

  json to_json() const {
    return {{"epoch", epoch},
            {"train_loss", train_loss},
            {"train_ce", train_ce},
            {"train_contrast", train_contrast},
            {"val_precision", val_precision},
            {"val_recall", val_recall},
            {"val_f1", val_f1},
            {"best", best}};
  }
};

template <typename Params>
struct TrainResult {
  Params params;  // best-on-validation snapshot
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_val_f1 = 0.0;
};

struct EdgeMetrics {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

/// Pooled edge classification metrics at a score threshold.
template <typename Params>
EdgeMetrics evaluate_edges(Params& params, const std::vector<EdgeGraph>& graphs,
                           double threshold = 0.5) {
  auto leaves = ModelOps<Params>::leaves(params, /*trainable=*/false);
  EdgeMetrics m;
  for (const auto& g : graphs) {
    for (const auto& e : ModelOps<Params>::forward(g, leaves)) {
      const bool pred = e.score >= threshold;
      if (e.label == 1) {
        pred ? ++m.tp : ++m.fn;
      } else if (e.label == 0) {
        pred ? ++m.fp : ++m.tn;
      }
    }
  }
  m.precision = (m.tp + m.fp) ? double(m.tp) / double(m.tp + m.fp) : 0.0;
  m.recall = (m.tp + m.fn) ? double(m.tp) / double(m.tp + m.fn) : 0.0;
  m.f1 = (m.precision + m.recall > 0)
             ? 2 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

/// Mean per-graph loss with parameters treated as constants; used by the
/// finite-difference check.
template <typename Params>
double batch_loss_value(Params& params, const std::vector<EdgeGraph>& graphs,
                        const LossConfig& cfg) {
  auto leaves = ModelOps<Params>::leaves(params, /*trainable=*/false);
  double total = 0.0;
  for (const auto& g : graphs) {
    total += edge_loss(ModelOps<Params>::forward(g, leaves), cfg, g.graph_id).total->val(0, 0);
  }
  return total / double(graphs.size());
}

/// AdamW, one state slot per named tensor.
class AdamW {
public:
  AdamW(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8)
      : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::string& name, Mat& theta, const Mat& grad) {
    auto& s = state_[name];
    if (s.m.size() == 0) {
      s.m = Mat::Zero(theta.rows(), theta.cols());
      s.v = Mat::Zero(theta.rows(), theta.cols());
    }
    ++s.t;
    s.m = beta1_ * s.m + (1.0 - beta1_) * grad;
    s.v = beta2_ * s.v + (1.0 - beta2_) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(beta1_, s.t);
    const double bc2 = 1.0 - std::pow(beta2_, s.t);
    const Mat mhat = s.m / bc1;
    const Mat vhat = s.v / bc2;
    theta -= lr_ * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
    theta -= lr_ * wd_ * theta;
  }

private:
  struct State {
    Mat m, v;
    long t = 0;
  };
  double lr_, wd_, beta1_, beta2_, eps_;
  std::map<std::string, State> state_;
};

/// Per-graph AdamW training with early stopping on validation edge-F1.
/// Deterministic for a fixed seed; throws Divergence on a non-finite loss
/// with the offending epoch/graph recorded.
template <typename Params>
TrainResult<Params> train(Params params, const std::vector<EdgeGraph>& train_graphs,
                          const std::vector<EdgeGraph>& val_graphs, const TrainConfig& cfg) {
  if (train_graphs.empty()) throw InvalidConfig("train(): empty training set");
  for (const auto& g : train_graphs) {
    if (g.pos_neg_ratio() < cfg.min_pos_neg_ratio) {
      throw InvalidConfig("graph " + g.graph_id + " violates the pos/neg ratio filter (" +
                          std::to_string(g.pos_neg_ratio()) + " < " +
                          std::to_string(cfg.min_pos_neg_ratio) + ")");
    }
  }

  AdamW opt(cfg.lr, cfg.weight_decay);
  LossConfig loss_cfg{cfg.alpha_contrast, cfg.contrast_pair_cap, cfg.seed};

  TrainResult<Params> result;
  result.params = params;
  int since_best = 0;

  std::vector<size_t> order(train_graphs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(cfg.seed, "epoch:" + std::to_string(epoch)));
    shuffle_rng.shuffle(order);

    double sum_loss = 0.0, sum_ce = 0.0, sum_contrast = 0.0;
    for (size_t idx : order) {
      const EdgeGraph& g = train_graphs[idx];
      auto leaves = ModelOps<Params>::leaves(params, /*trainable=*/true);
      auto edges = ModelOps<Params>::forward(g, leaves);
      auto loss = edge_loss(edges, loss_cfg, g.graph_id);
      const double lv = loss.total->val(0, 0);
      if (!std::isfinite(lv)) {
        throw Divergence("non-finite loss at epoch " + std::to_string(epoch) + ", graph " +
                         g.graph_id);
      }
      sum_loss += lv;
      sum_ce += loss.cross_entropy;
      sum_contrast += loss.contrastive;
      ad::backward(loss.total);

      size_t li = 0;
      params.for_each([&](const std::string& name, Mat& theta) {
        opt.step(name, theta, leaves.named[li].second->grad);
        ++li;
      });
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = sum_loss / double(train_graphs.size());
    log.train_ce = sum_ce / double(train_graphs.size());
    log.train_contrast = sum_contrast / double(train_graphs.size());

    const auto& probe = val_graphs.empty() ? train_graphs : val_graphs;
    const EdgeMetrics vm = evaluate_edges(params, probe, cfg.score_threshold);
    log.val_precision = vm.precision;
    log.val_recall = vm.recall;
    log.val_f1 = vm.f1;

    if (result.best_epoch < 0 || vm.f1 > result.best_val_f1) {
      result.best_val_f1 = vm.f1;
      result.best_epoch = epoch;
      result.params = params;
      log.best = true;
      since_best = 0;
    } else {
      ++since_best;
    }
    result.log.push_back(log);
    if (since_best >= cfg.patience) break;
  }
  return result;
}

/// Max relative error between analytic gradients and central finite
/// differences (step 1e-5) across every parameter entry of every tensor.
template <typename Params>
double gradient_check(Params params, const std::vector<EdgeGraph>& graphs,
                      const LossConfig& cfg, double step = 1e-5) {
  auto leaves = ModelOps<Params>::leaves(params, /*trainable=*/true);
  std::vector<Value> totals;
  for (const auto& g : graphs) {
    totals.push_back(edge_loss(ModelOps<Params>::forward(g, leaves), cfg, g.graph_id).total);
  }
  Value loss = ad::scale(ad::sum(ad::hconcat(totals)), 1.0 / double(graphs.size()));
  ad::backward(loss);

  std::map<std::string, Mat> analytic;
  for (const auto& [name, leafv] : leaves.named) analytic[name] = leafv->grad;

  double max_rel = 0.0;
  params.for_each([&](const std::string& name, Mat& theta) {
    const Mat& ga = analytic[name];
    for (Eigen::Index r = 0; r < theta.rows(); ++r) {
      for (Eigen::Index c = 0; c < theta.cols(); ++c) {
        const double orig = theta(r, c);
        theta(r, c) = orig + step;
        const double lp = batch_loss_value(params, graphs, cfg);
        theta(r, c) = orig - step;
        const double lm = batch_loss_value(params, graphs, cfg);
        theta(r, c) = orig;
        const double fd = (lp - lm) / (2.0 * step);
        const double rel =
            std::abs(ga(r, c) - fd) / std::max({std::abs(ga(r, c)), std::abs(fd), 1e-6});
        max_rel = std::max(max_rel, rel);
      }
    }
  });
  return max_rel;
}

/// Versioned JSON tensor bundle with a shape manifest.
template <typename Params>
void save_checkpoint(const Params& params, const std::filesystem::path& path) {
  json tensors;
  params.for_each([&](const std::string& name, const Mat& m) {
    std::vector<double> data(static_cast<size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        data[static_cast<size_t>(r * m.cols() + c)] = m(r, c);
      }
    }
    tensors[name] = {{"shape", {m.rows(), m.cols()}}, {"data", data}};
  });
  json j = {{"format_version", 1},
            {"model", ModelOps<Params>::name},
            {"d_enc", params.d_enc},
            {"d_model", params.d_model},
            {"tensors", tensors}};
  if constexpr (requires { params.edge_attention; }) {
    j["edge_attention"] = to_string(params.edge_attention);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << j.dump(2) << "\n";
}

template <typename Params>
Params load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingCheckpoint(path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw MalformedRecord("checkpoint is not valid JSON: " + path.string());
  if (j.value("format_version", 0) != 1) {
    throw MalformedRecord("unsupported checkpoint version in " + path.string());
  }
  if (j.value("model", "") != ModelOps<Params>::name) {
    throw MalformedRecord("checkpoint holds model '" + j.value("model", "") + "', expected '" +
                          std::string(ModelOps<Params>::name) + "'");
  }
  Params params;
  params.d_enc = j.at("d_enc").get<int>();
  params.d_model = j.at("d_model").get<int>();
  if constexpr (requires { params.edge_attention; }) {
    const auto mode = edge_attention_from_string(j.value("edge_attention", "channel_gate"));
    if (!mode) throw MalformedRecord("unknown edge_attention in " + path.string());
    params.edge_attention = *mode;
  }
  params.for_each([&](const std::string& name, Mat& m) {
    const auto& t = j.at("tensors").at(name);
    const auto rows = t.at("shape").at(0).get<Eigen::Index>();
    const auto cols = t.at("shape").at(1).get<Eigen::Index>();
    const auto data = t.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
      throw MalformedRecord("tensor " + name + " size mismatch in " + path.string());
    }
    m.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        m(r, c) = data[static_cast<size_t>(r * cols + c)];
      }
    }
  });
  return params;
}

inline void write_training_log(const std::vector<EpochLog>& log,
                               const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write training log " + path.string());
  for (const auto& e : log) out << e.to_json().dump() << "\n";
}

}  // namespace simvc
