#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "irx/decimal.hpp"
#include "irx/promptkit.hpp"

namespace irx {

enum class Tier { Lightweight, Sota };
enum class EndpointKind { OpenAI, Anthropic, Gemini, Mock };

std::string_view to_string(Tier t);            // "lightweight" / "sota"
std::string_view to_string(EndpointKind k);    // "openai" / "anthropic" / "gemini" / "mock"
Tier parse_tier(std::string_view s);
EndpointKind parse_endpoint_kind(std::string_view s);

struct ModelProfile {
  std::string alias;
  std::string api_model_name;
  Tier tier = Tier::Lightweight;
  Usd input_price_per_million;
  Usd output_price_per_million;
  EndpointKind endpoint_kind = EndpointKind::Mock;
  // Whether the provider reports a server-side version fingerprint; when it
  // does not, the run date recorded with each exchange stands in for it.
  bool time_fingerprint = true;
  std::string base_url;     // empty: the dialect's public endpoint
  std::string api_key_env;  // empty: the gateway's per-dialect default
};

// Alias-keyed model table. Lookup of an unknown alias throws ConfigError.
class ModelRegistry {
 public:
  ModelRegistry() = default;
  explicit ModelRegistry(std::vector<ModelProfile> models);

  // The six evaluated models plus two mock models ("Mock A", "Mock B").
  static ModelRegistry defaults();
  // {"models": [{"alias", "api_model_name", "tier", "input_price",
  // "output_price", "endpoint", "time_fingerprint"?, "base_url"?,
  // "api_key_env"?}]}. Prices are decimal strings.
  static ModelRegistry from_json(const nlohmann::json& j);
  static ModelRegistry load(const std::string& path);
  nlohmann::json to_json() const;

  void add(ModelProfile m);
  const ModelProfile& find(std::string_view alias) const;
  bool contains(std::string_view alias) const;
  const std::vector<ModelProfile>& all() const { return models_; }

 private:
  std::vector<ModelProfile> models_;
};

struct GenerationSettings {
  double temperature = 0.0;
  int max_output_tokens = 1024;

  nlohmann::json to_json() const;
  std::string hash() const;  // SHA-256 of the canonical JSON form
};

struct LLMExchange {
  std::string prompt_hash;
  std::string model_alias;
  std::string api_model_name;
  std::string report_id;
  std::string strategy;
  std::string response_text;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  bool tokens_estimated = false;
  std::int64_t latency_ms = 0;
  int attempt_count = 1;
  bool from_cache = false;
  std::string timestamp;           // UTC, "YYYY-MM-DDTHH:MM:SSZ"
  std::string run_date;            // UTC date of the original call
  std::string server_fingerprint;  // empty when the provider gives none
  std::string cache_key;
};

// Price of a token count at a per-million price, exactly.
Usd token_cost(std::int64_t tokens, Usd price_per_million);
Usd cost(std::int64_t input_tokens, std::int64_t output_tokens, const ModelProfile& model);
Usd cost(const LLMExchange& exchange, const ModelProfile& model);

std::string cache_key(const PromptBundle& bundle, const ModelProfile& model, const GenerationSettings& settings);

// ---- HTTP -----------------------------------------------------------------

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

struct HttpResponse {
  int status = 0;  // 0: no response (connection failure, timeout)
  std::string body;
  std::string error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

// cpp-httplib client with TLS.
std::shared_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout = std::chrono::seconds(120));

// ---- Wire dialects --------------------------------------------------------

struct ProviderReply {
  std::string text;
  std::optional<std::int64_t> input_tokens;
  std::optional<std::int64_t> output_tokens;
  std::string fingerprint;
  std::optional<std::string> refusal;  // provider message when the request was refused
};

HttpRequest build_request(const ModelProfile& model, const PromptBundle& bundle,
                          const GenerationSettings& settings, const std::string& api_key);
// Throws TransportError when a 2xx body is not a well-formed reply.
ProviderReply parse_reply(EndpointKind kind, const std::string& body);

// ---- Cache ----------------------------------------------------------------

// One JSON record per key under <dir>/records/<key[0:2]>/<key>.json, written
// by atomic rename, plus an append-only <dir>/index.jsonl.
class ResponseCache {
 public:
  explicit ResponseCache(std::string dir);

  std::optional<LLMExchange> get(const std::string& key) const;
  void put(const LLMExchange& exchange, const PromptBundle& bundle, const GenerationSettings& settings);
  std::string record_path(const std::string& key) const;
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  std::mutex index_mutex_;
};

// ---- Gateway --------------------------------------------------------------

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  std::chrono::milliseconds max_delay{30000};
  bool jitter = true;
};

struct GatewayOptions {
  std::string cache_dir;  // empty: no cache
  std::string mock_dir;   // canned responses for the mock dialect
  bool replay_only = false;  // a cache miss is an error instead of a call
  RetryPolicy retry;
  int max_in_flight_per_provider = 4;
  std::chrono::milliseconds min_request_interval{0};
  std::map<EndpointKind, std::string> credential_env = {
      {EndpointKind::OpenAI, "OPENAI_API_KEY"},
      {EndpointKind::Anthropic, "ANTHROPIC_API_KEY"},
      {EndpointKind::Gemini, "GEMINI_API_KEY"}};
  std::function<void(std::chrono::milliseconds)> sleeper;  // default: sleep_for
  std::function<std::optional<std::string>(const std::string&)> env_lookup;  // default: getenv
  std::uint64_t jitter_seed = 0x5eed;
};

// The fixed answer the mock dialect returns when no canned file matches.
extern const std::string kMockDefaultResponse;

class Gateway {
 public:
  Gateway(ModelRegistry registry, GatewayOptions options, std::shared_ptr<HttpTransport> transport = nullptr);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Safe to call from several threads.
  LLMExchange invoke(const PromptBundle& bundle, std::string_view alias,
                     const GenerationSettings& settings = {});
  LLMExchange invoke(const PromptBundle& bundle, const ModelProfile& model,
                     const GenerationSettings& settings = {});

  const ModelRegistry& registry() const { return registry_; }
  // Backend calls made on cache misses (mock responses included).
  std::int64_t network_calls() const { return network_calls_.load(); }
  // HTTP requests sent, retries included.
  std::int64_t http_requests() const { return http_requests_.load(); }
  std::int64_t cache_hits() const { return cache_hits_.load(); }

 private:
  struct Limiter;
  Limiter& limiter(EndpointKind kind);
  LLMExchange call_backend(const PromptBundle& bundle, const ModelProfile& model,
                           const GenerationSettings& settings);
  LLMExchange call_mock(const PromptBundle& bundle, const ModelProfile& model);
  std::chrono::milliseconds backoff(int attempt);
  std::string credential(const ModelProfile& model) const;

  ModelRegistry registry_;
  GatewayOptions options_;
  std::shared_ptr<HttpTransport> transport_;
  std::unique_ptr<ResponseCache> cache_;
  std::map<EndpointKind, std::unique_ptr<Limiter>> limiters_;
  std::mutex limiter_mutex_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
  std::atomic<std::int64_t> network_calls_{0};
  std::atomic<std::int64_t> http_requests_{0};
  std::atomic<std::int64_t> cache_hits_{0};
};

nlohmann::json to_json(const LLMExchange& e);
LLMExchange exchange_from_json(const nlohmann::json& j);

}  // namespace irx
