#pragma once

#include <algorithm>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "simvc/agents.hpp"
#include "simvc/dataset_builder.hpp"

namespace simvc {

/// What the metrics layer consumes: a ranking score, the binary verdict and
/// the ground-truth label. Decoupled from SimulationOutcome so baselines and
/// file-loaded outcomes evaluate identically.
struct ScoredVerdict {
  std::string startup_id;
  Date first_round_date;
  double score = 0.0;
  bool verdict = false;
  bool label = false;
};

inline std::vector<ScoredVerdict> join_labels(const std::vector<SimulationOutcome>& outcomes,
                                              const std::vector<CohortEntry>& cohort) {
  std::map<std::string, bool> labels;
  for (const auto& e : cohort) labels[e.startup_id] = e.label;
  std::vector<ScoredVerdict> out;
  for (const auto& o : outcomes) {
    auto it = labels.find(o.startup_id);
    if (it == labels.end()) throw DanglingReference("outcome for unlabeled " + o.startup_id);
    out.push_back({o.startup_id, o.first_round_date, o.p_success, o.verdict, it->second});
  }
  return out;
}

/// Percent of positives in the top K by descending score; ties broken by
/// ascending startup id.
inline double p_at_k(std::vector<ScoredVerdict> ranked, size_t K) {
  if (K < 1) throw InvalidConfig("p_at_k needs K >= 1");
  if (ranked.size() < K) {
    throw CohortSmallerThanK("cohort of " + std::to_string(ranked.size()) + " < K=" +
                             std::to_string(K));
  }
  std::sort(ranked.begin(), ranked.end(), [](const ScoredVerdict& a, const ScoredVerdict& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.startup_id < b.startup_id;
  });
  size_t hits = 0;
  for (size_t i = 0; i < K; ++i) hits += ranked[i].label ? 1 : 0;
  return 100.0 * double(hits) / double(K);
}

struct MonthlyPrecision {
  std::string month;
  size_t cohort_size = 0;
  std::map<int, double> p_at_k;  // only for K <= cohort_size
  bool skipped(int K) const { return !p_at_k.count(K); }
};

struct ApResult {
  double value = 0.0;
  std::vector<std::string> months_used, months_skipped;
};

inline std::map<std::string, std::vector<ScoredVerdict>> group_by_month(
    const std::vector<ScoredVerdict>& outcomes) {
  std::map<std::string, std::vector<ScoredVerdict>> bym;
  for (const auto& o : outcomes) bym[o.first_round_date.month_key()].push_back(o);
  return bym;
}

/// Unweighted mean of monthly P@K over months with at least K startups;
/// smaller months are skipped and reported.
inline ApResult ap_at_k(const std::vector<ScoredVerdict>& outcomes, size_t K) {
  ApResult res;
  double total = 0.0;
  for (const auto& [month, rows] : group_by_month(outcomes)) {
    if (rows.size() < K) {
      res.months_skipped.push_back(month);
      continue;
    }
    total += p_at_k(rows, K);
    res.months_used.push_back(month);
  }
  if (res.months_used.empty()) {
    throw AllMonthsSkipped("no month holds at least K=" + std::to_string(K) + " startups");
  }
  res.value = total / double(res.months_used.size());
  return res;
}

struct ClassificationMetrics {
  double precision = 0.0;
  std::optional<double> recall;  // absent when the cohort has no positive label
  double f1 = 0.0;
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Verdict-vs-label precision/recall/F1 in percent. Consumes only
/// (verdict, label); scores never enter.
inline ClassificationMetrics classification_metrics(const std::vector<ScoredVerdict>& outcomes) {
  ClassificationMetrics m;
  for (const auto& o : outcomes) {
    if (o.verdict) {
      o.label ? ++m.tp : ++m.fp;
    } else {
      o.label ? ++m.fn : ++m.tn;
    }
  }
  m.precision = (m.tp + m.fp) ? 100.0 * double(m.tp) / double(m.tp + m.fp) : 0.0;
  if (m.tp + m.fn > 0) {
    m.recall = 100.0 * double(m.tp) / double(m.tp + m.fn);
    const double r = *m.recall;
    m.f1 = (m.precision + r > 0.0) ? 2.0 * m.precision * r / (m.precision + r) : 0.0;
  }
  return m;
}

struct MetricsReport {
  std::map<int, double> ap_at_k;  // percent, averaged over runs
  double precision = 0.0;
  std::optional<double> recall;
  double f1 = 0.0;
  std::vector<MonthlyPrecision> per_month;  // averaged over runs
  int n_runs = 1;
  json config_snapshot;

  json to_json() const {
    json jap;
    for (const auto& [k, v] : ap_at_k) jap["AP@" + std::to_string(k)] = v;
    json months = json::array();
    for (const auto& m : per_month) {
      json pk;
      for (const auto& [k, v] : m.p_at_k) pk["P@" + std::to_string(k)] = v;
      months.push_back({{"month", m.month}, {"cohort_size", m.cohort_size}, {"p_at_k", pk}});
    }
    json j = {{"ap_at_k", jap},
              {"precision", precision},
              {"recall", recall ? json(*recall) : json(nullptr)},
              {"f1", f1},
              {"per_month", months},
              {"n_runs", n_runs},
              {"config", config_snapshot}};
    return j;
  }
};

/// Metric-level averaging across runs: AP@K and P/R/F1 are computed per run
/// and then averaged, matching how replicate runs are reported.
inline MetricsReport evaluate_runs(const std::vector<std::vector<SimulationOutcome>>& runs,
                                   const std::vector<CohortEntry>& cohort,
                                   const std::vector<int>& k_list) {
  if (runs.empty()) throw InvalidConfig("evaluate_runs: no runs");
  MetricsReport rep;
  rep.n_runs = static_cast<int>(runs.size());

  std::map<int, double> ap_sum;
  double p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
  bool recall_defined = true;
  std::map<std::string, std::pair<size_t, std::map<int, std::pair<double, int>>>> month_acc;

  for (const auto& run : runs) {
    const auto scored = join_labels(run, cohort);
    for (int k : k_list) {
      ap_sum[k] += ap_at_k(scored, static_cast<size_t>(k)).value;
    }
    const auto cm = classification_metrics(scored);
    p_sum += cm.precision;
    if (cm.recall) {
      r_sum += *cm.recall;
    } else {
      recall_defined = false;
    }
    f_sum += cm.f1;

    for (const auto& [month, rows] : group_by_month(scored)) {
      auto& slot = month_acc[month];
      slot.first = rows.size();
      for (int k : k_list) {
        if (rows.size() < static_cast<size_t>(k)) continue;
        auto& [sum, cnt] = slot.second[k];
        sum += p_at_k(rows, static_cast<size_t>(k));
        cnt += 1;
      }
    }
  }

  const double n = double(runs.size());
  for (const auto& [k, v] : ap_sum) rep.ap_at_k[k] = v / n;
  rep.precision = p_sum / n;
  if (recall_defined) rep.recall = r_sum / n;
  rep.f1 = f_sum / n;
  for (const auto& [month, slot] : month_acc) {
    MonthlyPrecision mp;
    mp.month = month;
    mp.cohort_size = slot.first;
    for (const auto& [k, sc] : slot.second) mp.p_at_k[k] = sc.first / double(sc.second);
    rep.per_month.push_back(std::move(mp));
  }
  return rep;
}

/// Random baseline: Bernoulli(historical_rate) verdicts, uniform scores.
inline std::vector<ScoredVerdict> random_baseline(const std::vector<CohortEntry>& cohort,
                                                  double historical_rate, uint64_t seed) {
  Rng rng(mix_seed(seed, "random-baseline"));
  std::vector<ScoredVerdict> out;
  for (const auto& e : cohort) {
    ScoredVerdict v;
    v.startup_id = e.startup_id;
    v.first_round_date = e.first_round_date;
    v.score = rng.uniform();
    v.verdict = rng.bernoulli(historical_rate);
    v.label = e.label;
    out.push_back(v);
  }
  return out;
}

/// Wraps pre-scored verdict lists (e.g. the random baseline) into a report.
inline MetricsReport evaluate_scored(const std::vector<std::vector<ScoredVerdict>>& runs,
                                     const std::vector<int>& k_list) {
  MetricsReport rep;
  rep.n_runs = static_cast<int>(runs.size());
  std::map<int, double> ap_sum;
  double p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
  bool recall_defined = true;
  for (const auto& scored : runs) {
    for (int k : k_list) ap_sum[k] += ap_at_k(scored, static_cast<size_t>(k)).value;
    const auto cm = classification_metrics(scored);
    p_sum += cm.precision;
    cm.recall ? void(r_sum += *cm.recall) : void(recall_defined = false);
    f_sum += cm.f1;
  }
  const double n = double(runs.size());
  for (const auto& [k, v] : ap_sum) rep.ap_at_k[k] = v / n;
  rep.precision = p_sum / n;
  if (recall_defined) rep.recall = r_sum / n;
  rep.f1 = f_sum / n;
  return rep;
}

/// Ablation row set: the full system plus the paper's variants.
inline const std::vector<std::string>& ablation_modes() {
  static const std::vector<std::string> modes = {
      "wo_roleplay", "wo_interaction", "full_interaction",
      "network_interaction", "gat_interaction", "simvc_cas"};
  return modes;
}

/// Runs every ablation mode over the cohort and reports per-mode metrics.
/// Modes needing a trained model throw MissingCheckpoint when the matching
/// parameters are absent from the base config.
inline std::map<std::string, MetricsReport> run_ablations(
    const Dataset& ds, const std::vector<CohortEntry>& cohort, const SimulateConfig& base,
    const BackendFactory& factory, const PromptTemplates& templates,
    const std::vector<int>& k_list, int n_runs = 1, int jobs = 1) {
  std::map<std::string, MetricsReport> table;
  for (const auto& mode : ablation_modes()) {
    SimulateConfig cfg = base;
    if (mode == "wo_roleplay") {
      cfg.roleplay = false;
      cfg.mode = InteractionMode::none;
    } else if (mode == "wo_interaction") {
      cfg.mode = InteractionMode::none;
    } else if (mode == "full_interaction") {
      cfg.mode = InteractionMode::full;
    } else if (mode == "network_interaction") {
      cfg.mode = InteractionMode::network;
    } else if (mode == "gat_interaction") {
      cfg.mode = InteractionMode::gat_baseline;
    } else {
      cfg.mode = InteractionMode::vgat;
    }
    const auto run = run_cohort(ds, cohort, cfg, factory, templates, n_runs, jobs);
    auto rep = evaluate_runs(run.outcomes, cohort, k_list);
    rep.config_snapshot = cfg.snapshot("per-factory");
    table.emplace(mode, std::move(rep));
  }
  return table;
}

struct ConsistencyResult {
  std::map<std::string, std::vector<double>> scores;  // startup -> one score per repeat
  double variation_fraction = 0.0;  // startups with more than one distinct score
};

/// Repeats the simulation with a fixed candidate sample (same sampling seed)
/// but fresh backend calls per repeat.
inline ConsistencyResult consistency(const Dataset& ds, const std::vector<std::string>& startup_ids,
                                     int repeats, const SimulateConfig& cfg,
                                     const BackendFactory& factory,
                                     const PromptTemplates& templates) {
  ConsistencyResult res;
  size_t varied = 0;
  for (const auto& id : startup_ids) {
    auto& list = res.scores[id];
    for (int r = 0; r < repeats; ++r) {
      auto backend = factory(id, r);
      list.push_back(simulate(ds, id, cfg, *backend, templates).p_success);
    }
    const std::set<double> distinct(list.begin(), list.end());
    if (distinct.size() > 1) ++varied;
  }
  res.variation_fraction =
      startup_ids.empty() ? 0.0 : double(varied) / double(startup_ids.size());
  return res;
}

/// Aligned-column text table in the shape of the paper-style comparisons.
inline std::string format_report_table(const std::map<std::string, MetricsReport>& table,
                                       const std::vector<int>& k_list) {
  std::ostringstream out;
  out << std::left << std::setw(22) << "method";
  for (int k : k_list) out << std::right << std::setw(9) << ("AP@" + std::to_string(k));
  out << std::setw(11) << "precision" << std::setw(9) << "recall" << std::setw(9) << "F1" << "\n";
  for (const auto& [name, rep] : table) {
    out << std::left << std::setw(22) << name;
    out << std::fixed << std::setprecision(2);
    for (int k : k_list) {
      auto it = rep.ap_at_k.find(k);
      if (it != rep.ap_at_k.end()) {
        out << std::right << std::setw(9) << it->second;
      } else {
        out << std::right << std::setw(9) << "-";
      }
    }
    out << std::right << std::setw(11) << rep.precision;
    if (rep.recall) {
      out << std::setw(9) << *rep.recall;
    } else {
      out << std::setw(9) << "-";
    }
    out << std::setw(9) << rep.f1 << "\n";
  }
  return out.str();
}

}  // namespace simvc
