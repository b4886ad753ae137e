#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "simvc/errors.hpp"
#include "simvc/prng.hpp"

namespace simvc {

/// Chat-completion backend. Implementations must be deterministic for
/// identical (system, user) inputs: the HTTP backend requests temperature 0,
/// the scripted backend is a pure function.
class LlmBackend {
public:
  virtual ~LlmBackend() = default;
  virtual std::string name() const = 0;
  virtual std::string complete(const std::string& system_prompt,
                               const std::string& user_prompt) = 0;
};

// Prompt block markers. The default templates emit these and the scripted
// backend keys on them; they are part of the scripted backend's documented
// contract, not of the LlmBackend interface.
inline constexpr const char* kStartupBlockMarker = "=== STARTUP PROFILE ===";
inline constexpr const char* kInvestorBlockMarker = "=== INVESTOR PROFILE ===";
inline constexpr const char* kOwnDecisionMarker = "=== YOUR INITIAL ASSESSMENT ===";
inline constexpr const char* kPeerBlockMarker = "=== PEER ASSESSMENTS ===";
inline constexpr const char* kDecisionToken = "DECISION:";

/// Last "DECISION: INVEST|PASS" in the text, case-insensitive; nullopt when
/// absent. true = INVEST.
inline std::optional<bool> parse_decision_token(const std::string& text) {
  std::string upper(text.size(), '\0');
  std::transform(text.begin(), text.end(), upper.begin(),
                 [](unsigned char c) { return char(std::toupper(c)); });
  const auto at = upper.rfind(kDecisionToken);
  if (at == std::string::npos) return std::nullopt;
  size_t p = at + std::string(kDecisionToken).size();
  while (p < upper.size() && upper[p] == ' ') ++p;
  if (upper.compare(p, 6, "INVEST") == 0) return true;
  if (upper.compare(p, 4, "PASS") == 0) return false;
  return std::nullopt;
}

struct ScriptedBackendConfig {
  // Round 0: INVEST iff >= overlap_threshold shared keywords between the
  // investor persona and the startup.
  int overlap_threshold = 2;
  // Round 0 fallback when the persona carries no keywords (generic analyst):
  // INVEST iff the startup's dominant keyword-topic multiplicity reaches this.
  int coherence_threshold = 3;
  // Round 1: supermajority flip (own vote included) — disabled entirely at 0.
  double peer_influence = 1.0;
  // The opposing side must reach this multiple of the agent's own side
  // before the agent changes its decision. Giving up a PASS takes less
  // opposing weight than abandoning a conviction to invest.
  double flip_up_factor = 2.0;    // PASS -> INVEST
  double flip_down_factor = 3.0;  // INVEST -> PASS
};

/// Deterministic rule-based stand-in for the LLM. Round-0 rule: keyword
/// overlap between persona and startup. Round-1 rule: the agent counts its
/// neighbors' round-0 votes plus its own and flips only when the opposing
/// side reaches flip_factor times its own side. With only INVEST neighbors
/// this reduces to "flip PASS->INVEST iff at least 2 neighbors INVEST".
class ScriptedBackend final : public LlmBackend {
public:
  explicit ScriptedBackend(ScriptedBackendConfig cfg = {}) : cfg_(cfg) {}

  std::string name() const override { return "scripted"; }

  std::string complete(const std::string& system_prompt, const std::string& user_prompt) override {
    const std::string prompt = system_prompt + "\n" + user_prompt;
    if (prompt.find(kPeerBlockMarker) != std::string::npos ||
        prompt.find(kOwnDecisionMarker) != std::string::npos) {
      return revise(prompt);
    }
    return initial(prompt);
  }

  /// Collects both the portrait's "Keywords:" line and the per-entry
  /// "keywords: a, b" fields. Lines mentioning `skip_startup_id` are ignored:
  /// when scoring a persona against a startup it already backed, the stake in
  /// that very startup must not count toward the overlap.
  static std::set<std::string> keywords_in_block(const std::string& block,
                                                 const std::string& skip_startup_id = "") {
    std::set<std::string> out;
    std::istringstream in(block);
    std::string line;
    while (std::getline(in, line)) {
      if (!skip_startup_id.empty() &&
          line.find("| " + skip_startup_id + " |") != std::string::npos) {
        continue;
      }
      std::string lower(line.size(), '\0');
      std::transform(line.begin(), line.end(), lower.begin(),
                     [](unsigned char c) { return char(std::tolower(c)); });
      const auto at = lower.find("keywords:");
      if (at == std::string::npos) continue;
      std::string rest = line.substr(at + 9);
      const auto bar = rest.find(" |");
      if (bar != std::string::npos) rest = rest.substr(0, bar);
      std::istringstream items(rest);
      std::string item;
      while (std::getline(items, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t\r");
        if (b == std::string::npos) continue;
        std::string kw = item.substr(b, e - b + 1);
        if (kw.empty() || kw == "none" || kw == "none recorded") continue;
        out.insert(kw);
      }
    }
    return out;
  }

private:
  static std::string block_of(const std::string& prompt, const char* marker) {
    const auto at = prompt.find(marker);
    if (at == std::string::npos) return "";
    const auto start = at + std::string(marker).size();
    auto end = prompt.find("\n===", start);
    if (end == std::string::npos) end = prompt.size();
    return prompt.substr(start, end - start);
  }

  static std::string startup_id_of(const std::string& startup_block) {
    // First line shaped "# Startup Profile: <id>".
    const auto at = startup_block.find("# Startup Profile: ");
    if (at == std::string::npos) return "";
    const auto start = at + std::string("# Startup Profile: ").size();
    const auto end = startup_block.find('\n', start);
    return startup_block.substr(start, end - start);
  }

  std::string initial(const std::string& prompt) const {
    const std::string startup_block = block_of(prompt, kStartupBlockMarker);
    const std::string target_id = startup_id_of(startup_block);
    const auto persona = keywords_in_block(block_of(prompt, kInvestorBlockMarker), target_id);
    const auto startup = keywords_in_block(startup_block);

    bool invest = false;
    std::ostringstream why;
    if (persona.empty()) {
      // Generic analyst: judge keyword coherence by topic prefix (text
      // before '_'); unique keywords count as their own topic.
      std::map<std::string, int> by_topic;
      int best = 0;
      for (const auto& kw : startup) {
        const auto us = kw.find('_');
        best = std::max(best, ++by_topic[us == std::string::npos ? kw : kw.substr(0, us)]);
      }
      invest = best >= cfg_.coherence_threshold;
      why << "As a generalist analyst I see a dominant focus of " << best
          << " related keywords; threshold is " << cfg_.coherence_threshold << ".";
    } else {
      std::vector<std::string> shared;
      for (const auto& kw : startup) {
        if (persona.count(kw)) shared.push_back(kw);
      }
      invest = static_cast<int>(shared.size()) >= cfg_.overlap_threshold;
      why << "My portfolio overlaps this startup on " << shared.size() << " keyword(s)";
      if (!shared.empty()) {
        why << " (";
        for (size_t i = 0; i < shared.size(); ++i) why << (i ? ", " : "") << shared[i];
        why << ")";
      }
      why << "; my bar is " << cfg_.overlap_threshold << ".";
    }
    std::ostringstream out;
    out << why.str() << "\n" << kDecisionToken << " " << (invest ? "INVEST" : "PASS") << "\n";
    return out.str();
  }

  std::string revise(const std::string& prompt) const {
    const std::string own_block = block_of(prompt, kOwnDecisionMarker);
    const std::string peer_block = block_of(prompt, kPeerBlockMarker);
    const auto own = parse_decision_token(own_block);
    const bool own_invest = own.value_or(false);

    int n_invest = 0, n_pass = 0;
    {
      std::istringstream in(peer_block);
      std::string line;
      while (std::getline(in, line)) {
        const auto d = parse_decision_token(line);
        if (d.has_value()) (*d ? n_invest : n_pass) += 1;
      }
    }

    bool final_invest = own_invest;
    std::ostringstream why;
    why << "I initially chose " << (own_invest ? "INVEST" : "PASS") << ". Among my contacts, "
        << n_invest << " invest and " << n_pass << " pass.";
    if (cfg_.peer_influence > 0.0) {
      const double votes_invest = n_invest + (own_invest ? 1 : 0);
      const double votes_pass = n_pass + (own_invest ? 0 : 1);
      if (!own_invest && votes_invest >= cfg_.flip_up_factor * votes_pass) {
        final_invest = true;
      } else if (own_invest && votes_pass >= cfg_.flip_down_factor * votes_invest) {
        final_invest = false;
      }
      if (final_invest != own_invest) why << " The weight of peer opinion changes my mind.";
      else why << " I stay with my assessment.";
    } else {
      why << " I weigh my own analysis only.";
    }
    std::ostringstream out;
    out << why.str() << "\n" << kDecisionToken << " " << (final_invest ? "INVEST" : "PASS") << "\n";
    return out.str();
  }

  ScriptedBackendConfig cfg_;
};

/// Wraps another backend and flips the final decision token with probability
/// flip_probability per call; draw sequence is deterministic per seed.
class NoisyBackend final : public LlmBackend {
public:
  NoisyBackend(std::shared_ptr<LlmBackend> inner, double flip_probability, uint64_t seed)
      : inner_(std::move(inner)), p_(flip_probability), rng_(mix_seed(seed, "noisy")) {}

  std::string name() const override { return "noisy(" + inner_->name() + ")"; }

  std::string complete(const std::string& system_prompt, const std::string& user_prompt) override {
    std::string text = inner_->complete(system_prompt, user_prompt);
    const bool flip = rng_.bernoulli(p_);
    if (!flip) return text;
    const auto decision = parse_decision_token(text);
    if (!decision.has_value()) return text;
    const auto at = text.rfind(kDecisionToken);
    return text.substr(0, at) + kDecisionToken + (*decision ? " PASS" : " INVEST") + "\n";
  }

private:
  std::shared_ptr<LlmBackend> inner_;
  double p_;
  Rng rng_;
};

/// Counts calls; used by tests asserting the round-0/round-1 call budget.
class CountingBackend final : public LlmBackend {
public:
  explicit CountingBackend(std::shared_ptr<LlmBackend> inner) : inner_(std::move(inner)) {}
  std::string name() const override { return inner_->name(); }
  std::string complete(const std::string& s, const std::string& u) override {
    ++calls_;
    return inner_->complete(s, u);
  }
  long calls() const { return calls_; }

private:
  std::shared_ptr<LlmBackend> inner_;
  long calls_ = 0;
};

struct HttpChatConfig {
  std::string endpoint;  // http://host:port/v1/chat/completions
  std::string api_key;
  std::string model = "gpt-3.5-turbo";
  int max_retries = 3;
  int backoff_ms = 250;
  int timeout_sec = 60;

  static HttpChatConfig from_env() {
    HttpChatConfig c;
    if (const char* e = std::getenv("SIMVC_LLM_ENDPOINT")) c.endpoint = e;
    if (const char* k = std::getenv("SIMVC_LLM_API_KEY")) c.api_key = k;
    if (const char* m = std::getenv("SIMVC_LLM_MODEL")) c.model = m;
    return c;
  }
};

}  // namespace simvc

#ifdef SIMVC_ENABLE_HTTP
#include <Eigen/Core>

#include <httplib.h>

#include "simvc/encoder.hpp"  // detail::split_url

namespace simvc {

/// Chat-completion HTTP backend (OpenAI-style request/response shape).
/// Always requests temperature 0; retries transport errors, 429 and 5xx
/// with exponential backoff.
class HttpChatBackend final : public LlmBackend {
public:
  explicit HttpChatBackend(HttpChatConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty()) {
      throw InvalidConfig("HttpChatBackend requires SIMVC_LLM_ENDPOINT or config endpoint");
    }
  }

  std::string name() const override { return "http:" + cfg_.model; }

  std::string complete(const std::string& system_prompt, const std::string& user_prompt) override {
    const auto url = detail::split_url(cfg_.endpoint);
    nlohmann::json req{{"model", cfg_.model},
                       {"temperature", 0},
                       {"messages",
                        {{{"role", "system"}, {"content", system_prompt}},
                         {{"role", "user"}, {"content", user_prompt}}}}};
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.backoff_ms << (attempt - 1)));
      }
      httplib::Client cli(url.host_port);
      cli.set_read_timeout(cfg_.timeout_sec, 0);
      httplib::Headers headers;
      if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
      auto res = cli.Post(url.path, headers, req.dump(), "application/json");
      if (!res) {
        last_error = "transport error";
        continue;
      }
      if (res->status >= 500 || res->status == 429) {
        last_error = "status " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw BackendUnavailable("chat endpoint returned status " + std::to_string(res->status));
      }
      auto body = nlohmann::json::parse(res->body, nullptr, false);
      if (body.is_discarded()) throw BackendUnavailable("chat endpoint returned invalid JSON");
      try {
        return body.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception&) {
        throw BackendUnavailable("chat response missing choices[0].message.content");
      }
    }
    throw BackendUnavailable("chat endpoint unreachable after retries: " + last_error);
  }

private:
  HttpChatConfig cfg_;
};

}  // namespace simvc
#endif  // SIMVC_ENABLE_HTTP
