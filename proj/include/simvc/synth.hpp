#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "simvc/data_model.hpp"
#include "simvc/graph.hpp"
#include "simvc/prng.hpp"
#include "simvc/vgat.hpp"

namespace simvc::synth {

// ---------------------------------------------------------------------------
// Planted edge-classification task
//
// Per graph: sparse nonnegative taste vectors over topics, a company vector
// with two hot topics plus a climate channel, and two planted investor
// cliques (one per hot topic). Both cliques co-invested historically, but
// only the clique matching the climate co-invests in this company: hot
// graphs activate the primary-topic clique, cold graphs the secondary one.
// Deciding an edge therefore needs a product of company context with pair
// features; concatenating the company vector onto node features and mixing
// additively is not enough, which is exactly the regime the virtual-node
// query is built for.
// ---------------------------------------------------------------------------

struct PlantedTaskConfig {
  int n_train = 300;
  int n_val = 60;
  int n_test = 60;
  int k = 10;         // nodes per graph
  int n_topics = 10;  // feature dimension is n_topics + 1 (climate channel)
  int clique_lo = 2, clique_hi = 3;      // members per planted clique
  double taste_low = 0.55, taste_high = 0.95;
  double hot_fraction = 0.5;  // 1.0 plants the primary clique in every graph
  double feature_noise = 0.02;
  double edge_prob = 0.2;     // background co-investment edges
  uint64_t seed = 1;

  int dim() const { return n_topics + 1; }
};

struct PlantedTask {
  std::vector<EdgeGraph> train, val, test;
};

namespace detail {

inline EdgeGraph planted_graph(const PlantedTaskConfig& cfg, uint64_t graph_seed,
                               const std::string& id) {
  Rng rng(graph_seed);
  EdgeGraph g;
  g.graph_id = id;
  const int T = cfg.n_topics;
  const int dim = cfg.dim();
  const bool hot = rng.uniform() < cfg.hot_fraction;

  const int topic_a = int(rng.below(uint64_t(T)));
  const int topic_b = int((topic_a + 1 + rng.below(uint64_t(T - 1))) % T);
  Mat company = Mat::Zero(1, dim);
  company(0, topic_a) = 0.7;
  company(0, topic_b) = 0.3;
  company(0, T) = (hot ? 1.0 : 0.0) + cfg.feature_noise * rng.normal();
  g.virtual_feature = company;
  g.virtual_weights.assign(static_cast<size_t>(cfg.k), 1.0);

  if (2 * cfg.clique_lo > cfg.k) throw InvalidConfig("planted task: k too small for two cliques");
  const int span = cfg.clique_hi - cfg.clique_lo + 1;
  const int n_a = std::min(cfg.clique_lo + int(rng.below(uint64_t(span))), cfg.k - cfg.clique_lo);
  const int n_b = std::min(cfg.clique_lo + int(rng.below(uint64_t(span))), cfg.k - n_a);
  std::vector<int> order(static_cast<size_t>(cfg.k), 0);
  for (int i = 0; i < cfg.k; ++i) order[size_t(i)] = i;
  rng.shuffle(order);
  std::vector<int> group(static_cast<size_t>(cfg.k), 2);  // 0: clique A, 1: clique B, 2: rest
  for (int i = 0; i < n_a; ++i) group[size_t(order[size_t(i)])] = 0;
  for (int i = n_a; i < n_a + n_b; ++i) group[size_t(order[size_t(i)])] = 1;

  g.features = Mat::Zero(cfg.k, dim);
  for (int i = 0; i < cfg.k; ++i) {
    Mat t = Mat::Zero(1, dim);
    if (group[size_t(i)] == 0) {
      t(0, topic_a) = rng.uniform(cfg.taste_low, cfg.taste_high);
      t(0, int(rng.below(uint64_t(T)))) += rng.uniform(0.05, 0.3);
    } else if (group[size_t(i)] == 1) {
      t(0, topic_b) = rng.uniform(cfg.taste_low, cfg.taste_high);
      t(0, int(rng.below(uint64_t(T)))) += rng.uniform(0.05, 0.3);
    } else {
      int other = topic_a;
      while (other == topic_a || other == topic_b) other = int(rng.below(uint64_t(T)));
      t(0, other) = rng.uniform(0.5, 0.9);
      const int extra = int(rng.below(uint64_t(T)));
      if (extra != topic_a && extra != topic_b) t(0, extra) += rng.uniform(0.05, 0.4);
    }
    for (int d = 0; d < T; ++d) t(0, d) += cfg.feature_noise * std::abs(rng.normal());
    g.features.row(i) = t;
  }

  const int active = hot ? 0 : 1;
  auto add_edge = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    for (const auto& e : g.edges) {
      if (e.a == a && e.b == b) return;
    }
    EdgeGraph::Edge e;
    e.a = a;
    e.b = b;
    e.weight = 1.0 + double(rng.below(3));
    e.label = (group[size_t(a)] == active && group[size_t(b)] == active) ? 1 : 0;
    g.edges.push_back(e);
  };
  for (int a = 0; a < cfg.k; ++a) {
    for (int b = a + 1; b < cfg.k; ++b) {
      const bool same_clique = group[size_t(a)] != 2 && group[size_t(a)] == group[size_t(b)];
      if (same_clique || rng.uniform() < cfg.edge_prob) add_edge(a, b);
    }
  }
  // Background-heavy draws can dip below the trainer's pos/neg floor; shed
  // background negatives (never clique edges) until the graph clears it.
  while (g.pos_neg_ratio() < 0.055) {
    auto it = std::find_if(g.edges.rbegin(), g.edges.rend(), [&](const EdgeGraph::Edge& e) {
      return e.label == 0 && (group[size_t(e.a)] == 2 || group[size_t(e.a)] != group[size_t(e.b)]);
    });
    if (it == g.edges.rend()) break;
    g.edges.erase(std::next(it).base());
  }
  return g;
}

}  // namespace detail

inline PlantedTask planted_edge_task(const PlantedTaskConfig& cfg) {
  PlantedTask task;
  auto gen = [&](std::vector<EdgeGraph>& dst, int count, const char* tag) {
    for (int i = 0; i < count; ++i) {
      const std::string id = std::string(tag) + std::to_string(i);
      dst.push_back(detail::planted_graph(cfg, mix_seed(cfg.seed, "planted:" + id), id));
    }
  };
  gen(task.train, cfg.n_train, "tr");
  gen(task.val, cfg.n_val, "va");
  gen(task.test, cfg.n_test, "te");
  return task;
}

/// Linearly separable variant: the label depends only on the first feature
/// coordinate of the two endpoints, with a margin, so a logistic probe on
/// [x_i || x_j || w] solves it.
inline PlantedTask separable_edge_task(const PlantedTaskConfig& cfg) {
  PlantedTask task;
  auto gen = [&](std::vector<EdgeGraph>& dst, int count, const char* tag) {
    for (int i = 0; i < count; ++i) {
      const std::string id = std::string(tag) + std::to_string(i);
      Rng rng(mix_seed(cfg.seed, "separable:" + id));
      EdgeGraph g;
      g.graph_id = id;
      const int dim = cfg.dim();
      g.features = Mat(cfg.k, dim);
      for (int u = 0; u < cfg.k; ++u) {
        double lead = rng.uniform(-1.0, 1.0);
        if (std::abs(lead) < 0.2) lead = lead < 0 ? -0.2 : 0.2;  // margin
        g.features(u, 0) = lead;
        for (int d = 1; d < dim; ++d) g.features(u, d) = 0.3 * rng.normal();
      }
      g.virtual_feature = Mat::Zero(1, dim);
      g.virtual_feature(0, dim - 1) = 1.0;
      g.virtual_weights.assign(static_cast<size_t>(cfg.k), 1.0);
      for (int a = 0; a < cfg.k; ++a) {
        for (int b = a + 1; b < cfg.k; ++b) {
          if (rng.uniform() >= cfg.edge_prob) continue;
          EdgeGraph::Edge e;
          e.a = a;
          e.b = b;
          e.weight = 1.0 + double(rng.below(3));
          e.label = (g.features(a, 0) + g.features(b, 0) > 0.0) ? 1 : 0;
          g.edges.push_back(e);
        }
      }
      if (g.edges.empty() || g.pos_neg_ratio() < 0.05) continue;
      dst.push_back(std::move(g));
    }
  };
  gen(task.train, cfg.n_train, "tr");
  gen(task.val, cfg.n_val, "va");
  gen(task.test, cfg.n_test, "te");
  return task;
}

// ---------------------------------------------------------------------------
// Full synthetic VC ecosystem
//
// Topics play the role of investment theses. Investors carry a primary and a
// secondary topic; history-era startups give every investor a portfolio that
// covers its topic vocabulary and wires the co-investment network (dense
// within a topic, sparse across). Eligible startups draw a hidden quality
// that controls how coherent their keyword list is; follow-on labels are
// Bernoulli with probability proportional to quality plus the affinity of
// the first-round investors, calibrated so the expected positive rate equals
// base_followon_rate. For positives, the follow-on round is taken by the
// highest-affinity members of the candidate pool, which plants the
// company-conditioned co-investment pairs VGAT trains on.
// ---------------------------------------------------------------------------

struct SynthConfig {
  int n_startups = 600;   // eligible startups (training era + cohort)
  int n_investors = 240;
  int taste_dim = 8;      // number of topics
  double quality_noise = 0.5;  // chance an off-topic keyword collides with another topic
  double peer_influence_strength = 1.0;  // forwarded to the scripted backend
  double base_followon_rate = 0.213;
  uint64_t seed = 1;

  // Date layout (defaults mirror a multi-year collection window).
  Date history_start = Date::from_ymd(2014, 1, 1);
  Date train_window_start = Date::from_ymd(2016, 10, 1);
  Date train_window_end = Date::from_ymd(2020, 9, 30);
  Date cohort_start = Date::from_ymd(2021, 10, 1);
  Date cohort_end = Date::from_ymd(2022, 9, 30);

  int keywords_per_startup = 5;
  // Topic vocabulary size controls portfolio coverage: with the default a
  // typical portfolio covers only part of its topic's vocabulary, so some
  // on-topic investors miss a given startup's exact keywords (informed
  // skeptics). Small vocabularies give every cluster member full coverage.
  int vocab_per_topic = 18;
  double cross_topic_round_rate = 0.5;  // history rounds pulling an outside investor
  double cohort_fraction = 0.2;
  int horizon_days = 365;

  void validate() const {
    if (n_startups < 5 || n_investors < taste_dim || taste_dim < 1) {
      throw InvalidConfig("synth: need n_startups >= 5, n_investors >= taste_dim >= 1");
    }
    if (base_followon_rate < 0 || base_followon_rate > 1 || quality_noise < 0 ||
        quality_noise > 1 || peer_influence_strength < 0 || peer_influence_strength > 1) {
      throw InvalidConfig("synth: rates must lie in [0,1]");
    }
  }
};

/// Oracle-only ground truth; written next to the bundle as truth.json and
/// excluded from pipeline inputs by path convention.
struct SynthTruth {
  std::map<std::string, double> quality;              // eligible startups
  std::map<std::string, int> topic;                   // eligible startups
  std::map<std::string, double> followon_probability;
  std::map<std::string, std::vector<std::string>> followon_investors;  // planted
  std::map<std::string, int> investor_primary_topic;
  double peer_influence_strength = 1.0;

  json to_json() const {
    json j;
    j["quality"] = quality;
    j["topic"] = topic;
    j["followon_probability"] = followon_probability;
    j["followon_investors"] = followon_investors;
    j["investor_primary_topic"] = investor_primary_topic;
    j["peer_influence_strength"] = peer_influence_strength;
    return j;
  }
};

struct SynthResult {
  Dataset dataset;
  SynthTruth truth;
};

namespace detail {

inline std::string keyword(int topic, int w) {
  return "t" + std::to_string(topic) + "_kw" + std::to_string(w);
}

inline std::string person_name(uint64_t n) {
  static const char* first[] = {"Avery", "Jordan", "Morgan", "Riley",  "Casey",  "Quinn",
                                "Rowan", "Emerson", "Sasha",  "Devon", "Harper", "Kai"};
  static const char* last[] = {"Chen",   "Okafor", "Silva",  "Novak", "Haddad", "Ito",
                               "Fischer", "Mbeki",  "Laurent", "Kovac", "Osei",  "Varga"};
  return std::string(first[n % 12]) + " " + last[(n / 12) % 12];
}

}  // namespace detail

inline SynthResult generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, "synth"));
  SynthResult result;
  Dataset& ds = result.dataset;
  SynthTruth& truth = result.truth;
  truth.peer_influence_strength = cfg.peer_influence_strength;

  const int T = cfg.taste_dim;
  // History volume scales with the investor population, not the eligible
  // startups: it exists to build portfolios and co-investment ties, and
  // keeping it bounded keeps candidate pools at a size k=10 samples cover.
  const int n_history = std::max(4 * T, 2 * cfg.n_investors);
  const int n_cohort = std::max(1, int(cfg.cohort_fraction * cfg.n_startups));
  const int n_training_era = cfg.n_startups - n_cohort;

  // ---- investors -----------------------------------------------------------
  struct Investor {
    std::string id;
    int primary = 0, secondary = 0;
    double primary_weight = 0.8;
  };
  std::vector<Investor> investors;
  std::vector<std::vector<int>> by_topic(static_cast<size_t>(T));
  for (int i = 0; i < cfg.n_investors; ++i) {
    Investor inv;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "inv%04d", i);
    inv.id = buf;
    inv.primary = i % T;  // balanced clusters
    inv.secondary = T > 1 ? int((inv.primary + 1 + rng.below(uint64_t(T - 1))) % T) : 0;
    inv.primary_weight = 0.65 + 0.25 * rng.uniform();
    by_topic[size_t(inv.primary)].push_back(i);
    investors.push_back(inv);
    truth.investor_primary_topic[inv.id] = inv.primary;

    Person p;
    p.person_id = inv.id;
    p.name = detail::person_name(uint64_t(i));
    p.gender = i % 3 == 0 ? std::optional<Gender>(Gender::female)
                          : (i % 3 == 1 ? std::optional<Gender>(Gender::male) : std::nullopt);
    p.education.push_back({"University " + std::to_string(1 + int(rng.below(20))), "MBA",
                           Date::from_ymd(2000 + i % 8, 9, 1), Date::from_ymd(2002 + i % 8, 6, 1)});
    p.employment.push_back({"Fund " + std::to_string(1 + i / 4), "Partner",
                            Date::from_ymd(2006 + i % 6, 1, 15), std::nullopt});
    ds.persons.emplace(p.person_id, std::move(p));
  }

  auto affinity = [&](const Investor& inv, int topic) {
    if (inv.primary == topic) return inv.primary_weight;
    if (inv.secondary == topic) return (1.0 - inv.primary_weight) * 0.75;
    return 0.05;
  };

  // ---- founders ------------------------------------------------------------
  const int n_founders = std::max(4, cfg.n_startups / 2);
  std::vector<std::string> founder_ids;
  for (int i = 0; i < n_founders; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "fnd%04d", i);
    Person p;
    p.person_id = buf;
    p.name = detail::person_name(uint64_t(1000 + i));
    p.employment.push_back({"Startup role", "Founder", std::nullopt, std::nullopt});
    founder_ids.push_back(p.person_id);
    ds.persons.emplace(p.person_id, std::move(p));
  }

  int round_counter = 0;
  auto next_round_id = [&] {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "rnd%05d", round_counter++);
    return std::string(buf);
  };

  auto make_startup = [&](const std::string& id, int topic, Date founding,
                          std::vector<std::string> keywords) {
    Startup s;
    s.startup_id = id;
    s.founding_date = founding;
    s.industry = "sector" + std::to_string(topic);
    s.location = "City " + std::to_string(1 + int(rng.below(30)));
    s.description = "Early-stage company building products in sector" + std::to_string(topic) + ".";
    s.keywords = std::move(keywords);
    if (!s.keywords.empty()) {
      s.products.push_back("product based on " + s.keywords.front());
    }
    s.team.push_back(founder_ids[rng.below(founder_ids.size())]);
    if (rng.uniform() < 0.4) {
      std::string extra = founder_ids[rng.below(founder_ids.size())];
      if (extra != s.team[0]) s.team.push_back(extra);
    }
    ds.startups.emplace(id, s);
    return id;
  };

  // ---- history era: builds portfolios and the co-investment network --------
  const int history_span = cfg.train_window_start.days() - cfg.history_start.days() - 30;
  std::vector<int> topic_history_count(static_cast<size_t>(T), 0);
  // Rotating round membership spreads deals evenly over a topic cluster, so
  // every investor's portfolio covers the topic vocabulary.
  std::vector<size_t> topic_rotation(static_cast<size_t>(T), 0);
  for (int h = 0; h < n_history; ++h) {
    const int topic = h % T;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "his%04d", h);
    // Keyword window cycles through the topic vocabulary so that, across its
    // history, every topic cluster's portfolio covers the whole vocabulary.
    std::vector<std::string> kws;
    const int start = topic_history_count[size_t(topic)]++ * 3;
    for (int w = 0; w < cfg.keywords_per_startup; ++w) {
      kws.push_back(detail::keyword(topic, (start + w) % cfg.vocab_per_topic));
    }
    const Date founding = cfg.history_start.add_days(int(rng.below(uint64_t(history_span / 2))));
    make_startup(buf, topic, founding, std::move(kws));

    const auto& cluster = by_topic[size_t(topic)];
    const int n_rounds = 1 + int(rng.below(2));
    Date round_date = founding.add_days(30 + int(rng.below(200)));
    for (int r = 0; r < n_rounds; ++r) {
      FundingRound round;
      round.round_id = next_round_id();
      round.startup_id = buf;
      round.round_date = round_date;
      round.stage = r == 0 ? (rng.uniform() < 0.7 ? Stage::seed : Stage::angel) : Stage::series_a;
      round.amount = (r == 0 ? 1.0 : 6.0) * 1e6 * (0.5 + rng.uniform());
      // Pair rounds keep each investor's partner list (and with it the
      // candidate pools) small enough for a k=10 sample to cover. The first
      // slot rotates through the cluster for portfolio coverage; the second
      // is a random cluster mate or, with the configured rate, an outside
      // investor, which wires the cross-topic ties.
      std::set<std::string> members;
      auto& rot = topic_rotation[size_t(topic)];
      if (!cluster.empty()) {
        members.insert(investors[size_t(cluster[rot++ % cluster.size()])].id);
        if (T > 1 && rng.uniform() < cfg.cross_topic_round_rate) {
          const int other = int((topic + 1 + rng.below(uint64_t(T - 1))) % T);
          const auto& oc = by_topic[size_t(other)];
          if (!oc.empty()) members.insert(investors[size_t(oc[rng.below(oc.size())])].id);
        } else {
          members.insert(investors[size_t(cluster[size_t(rng.below(cluster.size()))])].id);
        }
      }
      round.investor_ids.assign(members.begin(), members.end());
      ds.rounds.push_back(round);
      round_date = round_date.add_days(200 + int(rng.below(300)));
      if (round_date >= cfg.train_window_start) break;
    }
  }

  // ---- eligible startups ----------------------------------------------------
  struct Eligible {
    std::string id;
    int topic = 0;
    double quality = 0.0;
    Date first_date;
    std::vector<std::string> first_investors;
    double z = 0.0;
  };
  std::vector<Eligible> eligible;
  int noise_counter = 0;

  for (int s = 0; s < cfg.n_startups; ++s) {
    Eligible e;
    const bool cohort = s >= n_training_era;
    char buf[16];
    std::snprintf(buf, sizeof(buf), cohort ? "coh%04d" : "stp%04d", cohort ? s - n_training_era : s);
    e.id = buf;
    e.topic = int(rng.below(uint64_t(T)));
    e.quality = rng.uniform();

    const Date w0 = cohort ? cfg.cohort_start : cfg.train_window_start;
    const Date w1 = cohort ? cfg.cohort_end : cfg.train_window_end;
    e.first_date = w0.add_days(int(rng.below(uint64_t(w1.days() - w0.days() + 1))));

    // Keyword coherence is a deterministic, monotone function of quality;
    // the incoherent remainder collides with another topic's vocabulary with
    // probability quality_noise and is otherwise a unique noise token.
    // The map is steep so that only upper-half quality clears the scripted
    // backend's two-keyword bar via on-topic terms.
    const int n_on = std::clamp(
        int(std::lround(cfg.keywords_per_startup * (1.1 * e.quality - 0.36))), 0,
        cfg.keywords_per_startup);
    std::vector<std::string> kws;
    const int start = int(rng.below(uint64_t(cfg.vocab_per_topic)));
    for (int w = 0; w < n_on; ++w) {
      kws.push_back(detail::keyword(e.topic, (start + w) % cfg.vocab_per_topic));
    }
    for (int w = n_on; w < cfg.keywords_per_startup; ++w) {
      if (T > 1 && rng.uniform() < cfg.quality_noise) {
        const int other = int((e.topic + 1 + rng.below(uint64_t(T - 1))) % T);
        kws.push_back(detail::keyword(other, int(rng.below(uint64_t(cfg.vocab_per_topic)))));
      } else {
        kws.push_back("zz_noise" + std::to_string(noise_counter++));
      }
    }
    const Date founding = e.first_date.add_days(-90 - int(rng.below(540)));
    make_startup(e.id, e.topic, founding, std::move(kws));

    // First round comes from the topic cluster (occasionally one outsider).
    const auto& cluster = by_topic[size_t(e.topic)];
    std::set<std::string> members;
    const int n_inv = 2 + (rng.uniform() < 0.3 ? 1 : 0);
    for (int t = 0; t < n_inv && !cluster.empty(); ++t) {
      members.insert(investors[size_t(cluster[size_t(rng.below(cluster.size()))])].id);
    }
    if (T > 1 && rng.uniform() < 0.15) {
      const int other = int((e.topic + 1 + rng.below(uint64_t(T - 1))) % T);
      const auto& oc = by_topic[size_t(other)];
      if (!oc.empty()) members.insert(investors[size_t(oc[rng.below(oc.size())])].id);
    }
    FundingRound round;
    round.round_id = next_round_id();
    round.startup_id = e.id;
    round.round_date = e.first_date;
    round.stage = rng.uniform() < 0.7 ? Stage::seed : Stage::angel;
    round.amount = 1e6 * (0.5 + 2.5 * rng.uniform());
    round.investor_ids.assign(members.begin(), members.end());
    ds.rounds.push_back(round);
    e.first_investors = round.investor_ids;

    double aff = 0.0;
    for (const auto& inv_id : e.first_investors) {
      aff += affinity(investors[size_t(std::stoi(inv_id.substr(3)))], e.topic);
    }
    aff /= double(e.first_investors.size());
    e.z = 0.65 * e.quality + 0.35 * aff;

    truth.quality[e.id] = e.quality;
    truth.topic[e.id] = e.topic;
    eligible.push_back(std::move(e));
  }

  // ---- labels and planted follow-on rounds ----------------------------------
  double z_mean = 0.0;
  for (const auto& e : eligible) z_mean += e.z;
  z_mean /= double(eligible.size());

  // Partner map as of the eligible era (history + first rounds).
  std::map<std::string, std::set<std::string>> partners;
  for (const auto& r : ds.rounds) {
    for (const auto& a : r.investor_ids) {
      for (const auto& b : r.investor_ids) {
        if (a != b) partners[a].insert(b);
      }
    }
  }

  int outside_counter = 0;
  for (const auto& e : eligible) {
    const double p = std::min(1.0, cfg.base_followon_rate * e.z / z_mean);
    truth.followon_probability[e.id] = p;
    const bool positive = rng.bernoulli(p);
    if (!positive) {
      // Some negatives still raise later, outside the one-year horizon.
      if (rng.uniform() < 0.2) {
        FundingRound late;
        late.round_id = next_round_id();
        late.startup_id = e.id;
        late.round_date = e.first_date.add_days(cfg.horizon_days + 30 + int(rng.below(300)));
        late.stage = Stage::series_a;
        late.amount = 8e6 * (0.5 + rng.uniform());
        late.investor_ids = {e.first_investors.front()};
        ds.rounds.push_back(late);
      }
      continue;
    }

    // The follow-on syndicate: one or two insiders from the first round plus
    // the highest-affinity co-investment partners of those insiders. Pairs
    // inside the syndicate then share a historical round by construction,
    // which is what makes them labeled edges in the candidate graphs.
    std::set<std::string> syndicate;
    const size_t n_insiders = std::min<size_t>(e.first_investors.size(), 1 + rng.below(2));
    std::vector<std::string> insiders = e.first_investors;
    rng.shuffle(insiders);
    insiders.resize(n_insiders);
    syndicate.insert(insiders.begin(), insiders.end());

    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& insider : insiders) {
      const auto it = partners.find(insider);
      if (it == partners.end()) continue;
      for (const auto& partner : it->second) {
        if (syndicate.count(partner)) continue;
        const auto& inv = investors[size_t(std::stoi(partner.substr(3)))];
        ranked.push_back({affinity(inv, e.topic) + 0.05 * rng.uniform(), partner});
      }
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    const size_t target_size = 3 + rng.below(2);
    for (const auto& [aff_score, partner] : ranked) {
      if (syndicate.size() >= target_size) break;
      syndicate.insert(partner);
    }
    FundingRound follow;
    follow.round_id = next_round_id();
    follow.startup_id = e.id;
    follow.round_date = e.first_date.add_days(30 + int(rng.below(uint64_t(cfg.horizon_days - 35))));
    follow.stage = Stage::series_a;
    follow.amount = 6e6 * (0.5 + rng.uniform());
    follow.investor_ids.assign(syndicate.begin(), syndicate.end());
    // Outside investors are an observational-noise source (agents know
    // nothing about them), so the quality_noise switch gates them too.
    if (cfg.quality_noise > 0.0 && rng.uniform() < 0.15) {  // a newcomer from outside the pool
      char buf[16];
      std::snprintf(buf, sizeof(buf), "new%04d", outside_counter++);
      Person p;
      p.person_id = buf;
      p.name = detail::person_name(uint64_t(5000 + outside_counter));
      ds.persons.emplace(p.person_id, p);
      follow.investor_ids.push_back(buf);
    }
    std::sort(follow.investor_ids.begin(), follow.investor_ids.end());
    truth.followon_investors[e.id] = follow.investor_ids;
    ds.rounds.push_back(follow);
  }

  // Every eligible startup's one-year label must be observable at as_of.
  Date max_date = cfg.cohort_end.add_days(cfg.horizon_days + 1);
  for (const auto& r : ds.rounds) max_date = std::max(max_date, r.round_date);
  ds.as_of = max_date.add_days(30);
  ds.finalize();
  return result;
}

/// Writes the JSONL bundle plus truth.json (oracle-only, excluded from
/// pipeline inputs by the path convention).
inline void write_bundle(const SynthResult& result, const std::filesystem::path& dir) {
  serialize(result.dataset, dir);
  std::ofstream out(dir / "truth.json");
  if (!out) throw IoError("cannot write " + (dir / "truth.json").string());
  out << result.truth.to_json().dump(2) << "\n";
}

}  // namespace simvc::synth
