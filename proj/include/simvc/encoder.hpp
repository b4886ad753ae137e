#pragma once

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "simvc/errors.hpp"
#include "simvc/prng.hpp"

namespace simvc {

struct EmbeddingVector {
  std::vector<double> values;
  std::string source_id;
};

/// Turns portrait text into a fixed-dimension vector. Implementations must
/// be deterministic: identical text yields an identical vector.
class TextEncoder {
public:
  virtual ~TextEncoder() = default;
  virtual size_t dimension() const = 0;
  virtual EmbeddingVector encode(const std::string& text, const std::string& source_id = "") = 0;
};

/// Test/offline encoder: hashes token unigrams and bigrams into d_enc signed
/// buckets and L2-normalizes. Tokens are lowercased maximal alnum runs
/// (plus '_' and '.' so generated keyword ids stay whole).
class HashingEncoder final : public TextEncoder {
public:
  explicit HashingEncoder(size_t dim = 128) : dim_(dim) {
    if (dim_ == 0) throw InvalidConfig("encoder dimension must be >= 1");
  }

  size_t dimension() const override { return dim_; }

  EmbeddingVector encode(const std::string& text, const std::string& source_id = "") override {
    if (text.empty()) throw InvalidConfig("encode() requires nonempty text");
    std::vector<double> v(dim_, 0.0);
    std::vector<std::string> tokens = tokenize(text);
    auto bump = [&](const std::string& tok) {
      const uint64_t h = fnv1a64(tok);
      const size_t bucket = static_cast<size_t>(h % dim_);
      const double sign = (h >> 63) ? -1.0 : 1.0;
      v[bucket] += sign;
    };
    for (size_t i = 0; i < tokens.size(); ++i) {
      bump(tokens[i]);
      if (i + 1 < tokens.size()) bump(tokens[i] + " " + tokens[i + 1]);
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      v[0] = 1.0;  // text with no tokens at all maps to a fixed unit vector
    } else {
      for (double& x : v) x /= norm;
    }
    return {std::move(v), source_id};
  }

  static std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
      const auto uc = static_cast<unsigned char>(c);
      if (std::isalnum(uc) || c == '_' || c == '.') {
        cur.push_back(static_cast<char>(std::tolower(uc)));
      } else if (!cur.empty()) {
        tokens.push_back(std::move(cur));
        cur.clear();
      }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
  }

private:
  size_t dim_;
};

struct HttpEncoderConfig {
  std::string endpoint;  // http://host:port/path
  std::string api_key;
  size_t dimension = 128;
  int max_retries = 3;
  int backoff_ms = 250;       // doubled per retry
  int timeout_sec = 30;
  int min_interval_ms = 0;    // crude rate limit between calls

  static HttpEncoderConfig from_env(size_t dimension = 128) {
    HttpEncoderConfig c;
    if (const char* e = std::getenv("SIMVC_ENCODER_ENDPOINT")) c.endpoint = e;
    if (const char* k = std::getenv("SIMVC_ENCODER_API_KEY")) c.api_key = k;
    c.dimension = dimension;
    return c;
  }
};

namespace detail {

struct ParsedUrl {
  std::string host_port;  // scheme://host:port
  std::string path;
};

inline ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidConfig("endpoint URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace detail

}  // namespace simvc

// The HTTP client is only pulled in by translation units that ask for it;
// tests that never touch the network skip the (heavy) httplib header.
// Eigen must precede httplib: a system header pulled in by httplib leaks
// macros that break Eigen's product kernels.
#ifdef SIMVC_ENABLE_HTTP
#include <Eigen/Core>

#include <httplib.h>

namespace simvc {

/// Production encoder backend: POSTs {"input": text} and expects
/// {"embedding": [floats]} back. Retries with exponential backoff.
class HttpEncoder final : public TextEncoder {
public:
  explicit HttpEncoder(HttpEncoderConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty()) {
      throw InvalidConfig("HttpEncoder requires SIMVC_ENCODER_ENDPOINT or config endpoint");
    }
  }

  size_t dimension() const override { return cfg_.dimension; }

  EmbeddingVector encode(const std::string& text, const std::string& source_id = "") override {
    if (text.empty()) throw InvalidConfig("encode() requires nonempty text");
    rate_limit();
    const auto url = detail::split_url(cfg_.endpoint);
    nlohmann::json req{{"input", text}};
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(
            std::chrono::milliseconds(cfg_.backoff_ms << (attempt - 1)));
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
        throw BackendUnavailable("encoder returned status " + std::to_string(res->status));
      }
      auto body = nlohmann::json::parse(res->body, nullptr, false);
      if (body.is_discarded() || !body.contains("embedding") || !body["embedding"].is_array()) {
        throw BackendUnavailable("encoder response missing embedding array");
      }
      std::vector<double> v = body["embedding"].get<std::vector<double>>();
      if (v.size() != cfg_.dimension) {
        throw ShapeMismatch("encoder returned dimension " + std::to_string(v.size()) +
                            ", expected " + std::to_string(cfg_.dimension));
      }
      for (double x : v) {
        if (!std::isfinite(x)) throw BackendUnavailable("encoder returned non-finite entry");
      }
      return {std::move(v), source_id};
    }
    throw BackendUnavailable("encoder unreachable after retries: " + last_error);
  }

private:
  void rate_limit() {
    if (cfg_.min_interval_ms <= 0) return;
    std::lock_guard<std::mutex> lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    const auto min_gap = std::chrono::milliseconds(cfg_.min_interval_ms);
    if (last_call_.time_since_epoch().count() != 0 && now - last_call_ < min_gap) {
      std::this_thread::sleep_for(min_gap - (now - last_call_));
    }
    last_call_ = std::chrono::steady_clock::now();
  }

  HttpEncoderConfig cfg_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point last_call_{};
};

}  // namespace simvc
#endif  // SIMVC_ENABLE_HTTP
