#pragma once

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "simvc/dataset_builder.hpp"
#include "simvc/encoder.hpp"
#include "simvc/graph.hpp"
#include "simvc/llm.hpp"
#include "simvc/portrait.hpp"
#include "simvc/training.hpp"

namespace simvc {

struct PromptTemplates {
  std::string initial_system, initial_user;
  std::string revise_system, revise_user;

  static PromptTemplates defaults() {
    PromptTemplates t;
    t.initial_system =
        "You are role-playing a venture investor. Stay in character as the investor described "
        "below and judge the opportunity from their perspective.\n"
        "=== INVESTOR PROFILE ===\n{investor_profile}\n";
    t.initial_user =
        "A startup is raising capital. Decide whether you would invest.\n"
        "=== STARTUP PROFILE ===\n{startup_profile}\n"
        "=== INSTRUCTIONS ===\n"
        "Give a short assessment in character, then end your reply with exactly one line: "
        "\"DECISION: INVEST\" or \"DECISION: PASS\".\n";
    t.revise_system = t.initial_system;
    t.revise_user =
        "You previously assessed this startup. Peers from your co-investment network have "
        "shared their initial assessments; weigh them against your own judgement.\n"
        "=== STARTUP PROFILE ===\n{startup_profile}\n"
        "=== YOUR INITIAL ASSESSMENT ===\n{own_decision}\n"
        "=== PEER ASSESSMENTS ===\n{neighbor_block}\n"
        "=== INSTRUCTIONS ===\n"
        "Give your final decision in character, then end your reply with exactly one line: "
        "\"DECISION: INVEST\" or \"DECISION: PASS\".\n";
    return t;
  }

  /// Loads initial_decision.txt / revised_decision.txt, each split into
  /// [[system]] and [[user]] sections.
  static PromptTemplates load(const std::filesystem::path& dir) {
    auto read_file = [](const std::filesystem::path& p, std::string& system, std::string& user) {
      std::ifstream in(p);
      if (!in) throw IoError("cannot open template " + p.string());
      std::string line, *dst = nullptr;
      while (std::getline(in, line)) {
        if (line == "[[system]]") {
          dst = &system;
        } else if (line == "[[user]]") {
          dst = &user;
        } else if (dst) {
          *dst += line;
          *dst += "\n";
        }
      }
      if (system.empty() || user.empty()) {
        throw InvalidConfig("template " + p.string() + " needs [[system]] and [[user]] sections");
      }
    };
    PromptTemplates t;
    read_file(dir / "initial_decision.txt", t.initial_system, t.initial_user);
    read_file(dir / "revised_decision.txt", t.revise_system, t.revise_user);
    return t;
  }

  void write_defaults(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    {
      std::ofstream out(dir / "initial_decision.txt");
      out << "[[system]]\n" << initial_system << "[[user]]\n" << initial_user;
    }
    {
      std::ofstream out(dir / "revised_decision.txt");
      out << "[[system]]\n" << revise_system << "[[user]]\n" << revise_user;
    }
  }
};

namespace detail {

inline std::string substitute(std::string text, const std::string& key, const std::string& value) {
  const std::string token = "{" + key + "}";
  size_t at = 0;
  while ((at = text.find(token, at)) != std::string::npos) {
    text.replace(at, token.size(), value);
    at += value.size();
  }
  return text;
}

}  // namespace detail

struct AgentDecision {
  std::string investor_id;
  int round = 0;  // 0 = initial, 1 = revised
  bool invest = false;
  std::string raw_response;
  bool parse_ok = true;

  json to_json() const {
    return {{"investor_id", investor_id}, {"round", round},
            {"verdict", invest ? "INVEST" : "PASS"}, {"raw_response", raw_response},
            {"parse_ok", parse_ok}};
  }
};

enum class InteractionMode { vgat, gat_baseline, network, full, none };

inline std::string to_string(InteractionMode m) {
  switch (m) {
    case InteractionMode::vgat: return "vgat";
    case InteractionMode::gat_baseline: return "gat_baseline";
    case InteractionMode::network: return "network";
    case InteractionMode::full: return "full";
    default: return "none";
  }
}

inline std::optional<InteractionMode> interaction_mode_from_string(const std::string& s) {
  if (s == "vgat") return InteractionMode::vgat;
  if (s == "gat_baseline" || s == "gat") return InteractionMode::gat_baseline;
  if (s == "network") return InteractionMode::network;
  if (s == "full") return InteractionMode::full;
  if (s == "none") return InteractionMode::none;
  return std::nullopt;
}

struct InteractionEdge {
  int a = 0, b = 0;  // candidate positions
  double score = 0.0;
};

struct SimulationOutcome {
  std::string startup_id;
  Date first_round_date;
  std::vector<std::string> candidates;
  std::vector<AgentDecision> initial_decisions;
  std::vector<InteractionEdge> interaction_edges;
  std::vector<AgentDecision> revised_decisions;
  double p_success = 0.0;
  bool verdict = false;
  uint64_t seed = 0;
  json config_snapshot;

  json to_json() const {
    json init = json::array(), revised = json::array(), edges = json::array();
    for (const auto& d : initial_decisions) init.push_back(d.to_json());
    for (const auto& d : revised_decisions) revised.push_back(d.to_json());
    for (const auto& e : interaction_edges) edges.push_back(json::array({e.a, e.b, e.score}));
    return {{"schema_version", 1},
            {"startup_id", startup_id},
            {"first_round_date", first_round_date.to_string()},
            {"candidates", candidates},
            {"initial_decisions", init},
            {"interaction_edges", edges},
            {"revised_decisions", revised},
            {"p_success", p_success},
            {"verdict", verdict},
            {"seed", seed},
            {"config", config_snapshot}};
  }

  static SimulationOutcome from_json(const json& j) {
    SimulationOutcome o;
    o.startup_id = j.at("startup_id").get<std::string>();
    o.first_round_date = Date::parse_or_throw(j.at("first_round_date").get<std::string>());
    o.candidates = j.at("candidates").get<std::vector<std::string>>();
    auto read_decisions = [](const json& arr, int round) {
      std::vector<AgentDecision> out;
      for (const auto& d : arr) {
        AgentDecision a;
        a.investor_id = d.at("investor_id").get<std::string>();
        a.round = round;
        a.invest = d.at("verdict").get<std::string>() == "INVEST";
        a.raw_response = d.value("raw_response", "");
        a.parse_ok = d.value("parse_ok", true);
        out.push_back(std::move(a));
      }
      return out;
    };
    o.initial_decisions = read_decisions(j.at("initial_decisions"), 0);
    o.revised_decisions = read_decisions(j.at("revised_decisions"), 1);
    for (const auto& e : j.at("interaction_edges")) {
      o.interaction_edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
    }
    o.p_success = j.at("p_success").get<double>();
    o.verdict = j.at("verdict").get<bool>();
    o.seed = j.value("seed", 0ull);
    o.config_snapshot = j.value("config", json::object());
    return o;
  }
};

struct SimulateConfig {
  int k = 10;
  uint64_t seed = 0;
  double threshold = 0.5;
  InteractionMode mode = InteractionMode::vgat;
  bool roleplay = true;  // false: fixed generic-analyst persona, interaction disabled
  double virtual_weight = 1.0;
  size_t neighbor_profile_max_chars = 600;  // deterministic truncation of peer profiles
  VgatParams* vgat_params = nullptr;
  GatBaselineParams* gat_params = nullptr;
  TextEncoder* encoder = nullptr;

  json snapshot(const std::string& backend_name) const {
    return {{"k", k},
            {"threshold", threshold},
            {"mode", to_string(mode)},
            {"roleplay", roleplay},
            {"virtual_weight", virtual_weight},
            {"neighbor_profile_max_chars", neighbor_profile_max_chars},
            {"backend", backend_name}};
  }
};

inline const char* kGenericAnalystPersona =
    "Generalist venture analyst\n"
    "A seasoned, sector-agnostic venture capital analyst who evaluates startups purely on "
    "the fundamentals visible in the provided profile.\n";

/// Round-0 decision: fills the initial-decision template, calls the backend
/// once, parses the trailing decision token. An unparseable response maps to
/// PASS with parse_ok=false and the raw response archived.
inline AgentDecision initial_decision(LlmBackend& backend, const std::string& startup_portrait,
                                      const std::string& investor_portrait,
                                      const PromptTemplates& templates,
                                      const std::string& investor_id) {
  const std::string system =
      detail::substitute(templates.initial_system, "investor_profile", investor_portrait);
  const std::string user =
      detail::substitute(templates.initial_user, "startup_profile", startup_portrait);
  AgentDecision d;
  d.investor_id = investor_id;
  d.round = 0;
  d.raw_response = backend.complete(system, user);
  const auto parsed = parse_decision_token(d.raw_response);
  d.parse_ok = parsed.has_value();
  d.invest = parsed.value_or(false);
  return d;
}

struct NeighborContext {
  std::string investor_id;
  double score = 0.0;
  const AgentDecision* decision = nullptr;
  std::string profile_summary;
};

/// Round-1 decision. Neighbors must already be ordered (descending edge
/// score, then investor id). With no neighbors the round-0 decision carries
/// over without a backend call; an unparseable response keeps the round-0
/// verdict.
inline AgentDecision revise_decision(LlmBackend& backend, const AgentDecision& own,
                                     const std::vector<NeighborContext>& neighbors,
                                     const std::string& startup_portrait,
                                     const std::string& investor_portrait,
                                     const PromptTemplates& templates) {
  if (neighbors.empty()) {
    AgentDecision d = own;
    d.round = 1;
    return d;
  }
  std::ostringstream block;
  for (const auto& n : neighbors) {
    block << "--- Peer " << n.investor_id << " (interaction score "
          << n.score << ") ---\n";
    block << n.profile_summary << "\n";
    block << "Their initial assessment:\n" << n.decision->raw_response << "\n";
  }
  std::string system =
      detail::substitute(templates.revise_system, "investor_profile", investor_portrait);
  std::string user = detail::substitute(templates.revise_user, "startup_profile", startup_portrait);
  user = detail::substitute(user, "own_decision", own.raw_response);
  user = detail::substitute(user, "neighbor_block", block.str());

  AgentDecision d;
  d.investor_id = own.investor_id;
  d.round = 1;
  d.raw_response = backend.complete(system, user);
  const auto parsed = parse_decision_token(d.raw_response);
  d.parse_ok = parsed.has_value();
  d.invest = parsed.has_value() ? *parsed : own.invest;  // conservative fallback
  return d;
}

namespace detail {

inline std::string truncate_profile(const std::string& text, size_t max_chars) {
  if (text.size() <= max_chars) return text;
  // Cut at the last full line inside the budget.
  const auto nl = text.rfind('\n', max_chars);
  return text.substr(0, nl == std::string::npos ? max_chars : nl) + "\n[truncated]";
}

}  // namespace detail

/// Aggregation rule: p_success is the exact fraction of final INVEST
/// decisions over the simulated agents, and the verdict fires iff any agent
/// invests.
inline void aggregate_decisions(SimulationOutcome& out) {
  int invested = 0;
  for (const auto& d : out.revised_decisions) invested += d.invest ? 1 : 0;
  out.p_success =
      static_cast<double>(invested) / static_cast<double>(out.revised_decisions.size());
  out.verdict = out.p_success > 0.0;
}

/// Full two-round simulation for one startup: candidate pool, sampling,
/// portraits, round 0, interaction edges per mode, round 1, aggregation.
/// p_success divides by the number of agents actually simulated (the whole
/// pool when it is smaller than k).
inline SimulationOutcome simulate(const Dataset& ds, const std::string& startup_id,
                                  const SimulateConfig& cfg, LlmBackend& backend,
                                  const PromptTemplates& templates) {
  const FundingRound& first = first_round(ds, startup_id);
  const Date cutoff = first.round_date;

  const auto pool = candidate_pool(ds, startup_id, cutoff);
  const auto candidates =
      sample_candidates(pool, static_cast<size_t>(cfg.k), mix_seed(cfg.seed, "sample:" + startup_id));
  const int k_eff = static_cast<int>(candidates.size());

  SimulationOutcome out;
  out.startup_id = startup_id;
  out.first_round_date = first.round_date;
  out.candidates = candidates;
  out.seed = cfg.seed;
  out.config_snapshot = cfg.snapshot(backend.name());

  const auto startup_profile = render_startup_portrait(ds, startup_id, cutoff);
  std::vector<std::string> investor_texts(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    investor_texts[i] = cfg.roleplay
                            ? render_investor_portrait(ds, candidates[i], cutoff).text
                            : std::string(kGenericAnalystPersona);
  }

  // Round 0 — every agent decides independently.
  for (size_t i = 0; i < candidates.size(); ++i) {
    out.initial_decisions.push_back(initial_decision(backend, startup_profile.text,
                                                     investor_texts[i], templates, candidates[i]));
  }

  // Interaction structure. Disabling roleplay also disables interaction.
  const InteractionMode mode = cfg.roleplay ? cfg.mode : InteractionMode::none;
  switch (mode) {
    case InteractionMode::none:
      break;
    case InteractionMode::full:
      for (int a = 0; a < k_eff; ++a) {
        for (int b = a + 1; b < k_eff; ++b) out.interaction_edges.push_back({a, b, 1.0});
      }
      break;
    case InteractionMode::network: {
      const auto g = build_graph(ds, startup_id, candidates, cutoff, cfg.virtual_weight);
      for (const auto& e : g.real_edges) out.interaction_edges.push_back({e.a, e.b, e.weight});
      break;
    }
    case InteractionMode::vgat:
    case InteractionMode::gat_baseline: {
      if (!cfg.encoder) throw InvalidConfig("interaction mode needs an encoder");
      const auto meta = build_graph(ds, startup_id, candidates, cutoff, cfg.virtual_weight);
      const EdgeGraph numeric = embed_graph(ds, meta, *cfg.encoder);
      std::vector<ScoredEdge> scored;
      if (mode == InteractionMode::vgat) {
        if (!cfg.vgat_params) throw MissingCheckpoint("vgat interaction mode without parameters");
        scored = infer_interactions(numeric, *cfg.vgat_params, cfg.threshold);
      } else {
        if (!cfg.gat_params) throw MissingCheckpoint("gat interaction mode without parameters");
        scored = infer_interactions_gat(numeric, *cfg.gat_params, cfg.threshold);
      }
      for (const auto& e : scored) out.interaction_edges.push_back({e.a, e.b, e.score});
      break;
    }
  }

  // Round 1 — only after every round-0 decision exists (the loop above is
  // the barrier). Agents without neighbors keep their initial decision.
  std::vector<std::vector<std::pair<int, double>>> nbrs(static_cast<size_t>(k_eff));
  for (const auto& e : out.interaction_edges) {
    nbrs[size_t(e.a)].push_back({e.b, e.score});
    nbrs[size_t(e.b)].push_back({e.a, e.score});
  }
  for (int i = 0; i < k_eff; ++i) {
    auto& list = nbrs[size_t(i)];
    std::sort(list.begin(), list.end(), [&](const auto& x, const auto& y) {
      if (x.second != y.second) return x.second > y.second;
      return candidates[size_t(x.first)] < candidates[size_t(y.first)];
    });
    std::vector<NeighborContext> ctx;
    for (const auto& [j, score] : list) {
      NeighborContext n;
      n.investor_id = candidates[size_t(j)];
      n.score = score;
      n.decision = &out.initial_decisions[size_t(j)];
      n.profile_summary =
          detail::truncate_profile(investor_texts[size_t(j)], cfg.neighbor_profile_max_chars);
      ctx.push_back(std::move(n));
    }
    out.revised_decisions.push_back(revise_decision(backend, out.initial_decisions[size_t(i)],
                                                    ctx, startup_profile.text,
                                                    investor_texts[size_t(i)], templates));
  }

  aggregate_decisions(out);
  return out;
}

struct CohortFailure {
  std::string startup_id;
  int run = 0;
  std::string error;
};

struct CohortRun {
  // outcomes[r] holds run r's outcomes in cohort order (failures skipped).
  std::vector<std::vector<SimulationOutcome>> outcomes;
  std::vector<CohortFailure> failures;
};

using BackendFactory =
    std::function<std::shared_ptr<LlmBackend>(const std::string& startup_id, int run)>;

/// Runs `n_runs` replicates over the cohort; run r derives its candidate
/// sampling seed from (base seed, r). Per-startup failures are recorded and
/// skipped. `jobs` > 1 parallelizes across startups within a run; the
/// factory must then hand out independent backends.
inline CohortRun run_cohort(const Dataset& ds, const std::vector<CohortEntry>& cohort,
                            SimulateConfig cfg, const BackendFactory& factory,
                            const PromptTemplates& templates, int n_runs = 1, int jobs = 1) {
  CohortRun result;
  const uint64_t base_seed = cfg.seed;
  std::mutex mu;
  for (int r = 0; r < n_runs; ++r) {
    cfg.seed = mix_seed(base_seed, "run:" + std::to_string(r));
    std::vector<std::optional<SimulationOutcome>> slots(cohort.size());

    std::atomic<size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= cohort.size()) return;
        try {
          auto backend = factory(cohort[i].startup_id, r);
          slots[i] = simulate(ds, cohort[i].startup_id, cfg, *backend, templates);
        } catch (const std::exception& ex) {
          std::lock_guard<std::mutex> lock(mu);
          result.failures.push_back({cohort[i].startup_id, r, ex.what()});
        }
      }
    };
    if (jobs <= 1) {
      worker();
    } else {
      std::vector<std::thread> threads;
      for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
      for (auto& t : threads) t.join();
    }

    std::vector<SimulationOutcome> run_outcomes;
    for (auto& s : slots) {
      if (s.has_value()) run_outcomes.push_back(std::move(*s));
    }
    result.outcomes.push_back(std::move(run_outcomes));
  }
  return result;
}

inline void write_outcomes(const std::vector<std::vector<SimulationOutcome>>& runs,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write outcomes " + path.string());
  for (size_t r = 0; r < runs.size(); ++r) {
    for (const auto& o : runs[r]) {
      json j = o.to_json();
      j["run"] = r;
      out << j.dump() << "\n";
    }
  }
}

inline std::vector<std::vector<SimulationOutcome>> load_outcomes(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open outcomes " + path.string());
  std::vector<std::vector<SimulationOutcome>> runs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw MalformedRecord("bad outcome line in " + path.string());
    const size_t r = j.value("run", 0u);
    if (runs.size() <= r) runs.resize(r + 1);
    runs[r].push_back(SimulationOutcome::from_json(j));
  }
  return runs;
}

}  // namespace simvc
