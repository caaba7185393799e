#pragma once

// HTTP clients for remote models, speaking the common OpenAI-style wire
// shapes:
//
//   POST {base}/embeddings        {"model", "input": [texts]}
//     -> {"data": [{"index": i, "embedding": [...]}, ...]}
//   POST {base}/chat/completions  {"model", "temperature",
//                                  "messages": [{"role": "user", "content"}]}
//     -> {"choices": [{"message": {"content": "..."}}]}
//
// The auth token is read from the environment variable named in the config
// and sent as "Authorization: Bearer <token>". https needs the library built
// with CPPHTTPLIB_OPENSSL_SUPPORT.

#include <chrono>
#include <cstdlib>
#include <memory>
#include <semaphore>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "kgrag/common.hpp"
#include "kgrag/embedding.hpp"
#include "kgrag/model.hpp"

namespace kgrag {

using InFlightLimit = std::counting_semaphore<1024>;

struct RemoteConfig {
  std::string base_url;  // e.g. "http://localhost:8000/v1"
  std::string model;
  std::string api_key_env = "KGRAG_API_KEY";
  double timeout_s = 60.0;
  int retries = 2;
  double backoff_s = 0.5;  // doubles after every failed attempt
  double temperature = 0.0;
  std::size_t batch_size = 64;  // embeddings per request
  // Shared cap on concurrent requests. Clients built from copies of one
  // config share the same limit.
  std::shared_ptr<InFlightLimit> in_flight = std::make_shared<InFlightLimit>(4);

  // Reads <PREFIX>_URL and <PREFIX>_MODEL, e.g. KGRAG_CHAT_URL.
  static RemoteConfig from_env(const std::string& prefix) {
    RemoteConfig c;
    if (const char* v = std::getenv((prefix + "_URL").c_str())) c.base_url = v;
    if (const char* v = std::getenv((prefix + "_MODEL").c_str())) c.model = v;
    return c;
  }
};

namespace detail {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

inline ParsedUrl parse_base_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("base URL needs a scheme: '" + url + "'");
  auto slash = url.find('/', scheme + 3);
  ParsedUrl p;
  p.origin = url.substr(0, slash);
  p.path = slash == std::string::npos ? "" : url.substr(slash);
  while (!p.path.empty() && p.path.back() == '/') p.path.pop_back();
  return p;
}

class HttpJsonClient {
 public:
  explicit HttpJsonClient(RemoteConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty()) throw ConfigError("remote endpoint URL is not configured");
    url_ = parse_base_url(cfg_.base_url);
  }

  const RemoteConfig& config() const { return cfg_; }

  // POSTs `body` to base path + `route`, retrying transient failures.
  nlohmann::json post(const std::string& route, const nlohmann::json& body) const {
    const std::string endpoint = cfg_.base_url + route;
    double backoff = cfg_.backoff_s;
    for (int attempt = 0;; ++attempt) {
      try {
        return post_once(endpoint, url_.path + route, body);
      } catch (const TransportError& e) {
        if (!e.retriable() || attempt >= cfg_.retries) throw;
      }
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
  }

 private:
  nlohmann::json post_once(const std::string& endpoint, const std::string& path,
                           const nlohmann::json& body) const {
    struct Permit {
      InFlightLimit& s;
      explicit Permit(InFlightLimit& sem) : s(sem) { s.acquire(); }
      ~Permit() { s.release(); }
    } permit(*cfg_.in_flight);

    httplib::Client cli(url_.origin);
    auto secs = static_cast<time_t>(cfg_.timeout_s);
    auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!cfg_.api_key_env.empty()) {
      if (const char* token = std::getenv(cfg_.api_key_env.c_str()); token && *token) {
        headers.emplace("Authorization", std::string("Bearer ") + token);
      }
    }
    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res) throw TransportError(endpoint, 0, httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) {
      throw TransportError(endpoint, res->status, res->body.substr(0, 200));
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(endpoint, res->status, std::string("invalid JSON: ") + e.what());
    }
  }

  RemoteConfig cfg_;
  ParsedUrl url_;
};

}  // namespace detail

class HttpChatModel final : public ChatModel {
 public:
  explicit HttpChatModel(RemoteConfig cfg) : client_(std::move(cfg)) {}

  std::string complete(const std::string& prompt) override {
    const RemoteConfig& c = client_.config();
    nlohmann::json body = {
        {"model", c.model},
        {"temperature", c.temperature},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
    };
    nlohmann::json reply = client_.post("/chat/completions", body);
    try {
      const auto& content = reply.at("choices").at(0).at("message").at("content");
      return content.is_null() ? std::string() : content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(c.base_url + "/chat/completions", 200,
                           std::string("unexpected response shape: ") + e.what());
    }
  }

 private:
  detail::HttpJsonClient client_;
};

class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(RemoteConfig cfg, std::size_t dimension = kDefaultEmbeddingDim)
      : client_(std::move(cfg)), dim_(dimension) {}

  std::size_t dimension() const override { return dim_; }

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
    std::vector<EmbeddingVector> out(texts.size());
    const RemoteConfig& c = client_.config();
    const std::string endpoint = c.base_url + "/embeddings";
    std::size_t batch = std::max<std::size_t>(1, c.batch_size);
    for (std::size_t start = 0; start < texts.size(); start += batch) {
      std::size_t n = std::min(batch, texts.size() - start);
      nlohmann::json input = nlohmann::json::array();
      for (std::size_t i = 0; i < n; ++i) input.push_back(texts[start + i]);
      nlohmann::json reply = client_.post("/embeddings", {{"model", c.model}, {"input", input}});
      try {
        const auto& data = reply.at("data");
        if (data.size() != n) {
          throw TransportError(endpoint, 200, "expected " + std::to_string(n) +
                                                  " embeddings, got " +
                                                  std::to_string(data.size()));
        }
        for (std::size_t i = 0; i < n; ++i) {
          const auto& item = data.at(i);
          std::size_t index = item.contains("index") ? item.at("index").get<std::size_t>() : i;
          if (index >= n) throw TransportError(endpoint, 200, "embedding index out of range");
          EmbeddingVector v{item.at("embedding").get<std::vector<double>>()};
          if (v.size() != dim_) throw DimensionMismatch(v.size(), dim_);
          out[start + index] = std::move(v);
        }
      } catch (const nlohmann::json::exception& e) {
        throw TransportError(endpoint, 200, std::string("unexpected response shape: ") + e.what());
      }
    }
    return out;
  }

 private:
  detail::HttpJsonClient client_;
  std::size_t dim_;
};

}  // namespace kgrag
