#include "irx/gateway.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "irx/error.hpp"
#include "irx/hash.hpp"
#include "irx/text.hpp"

namespace irx {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(Tier t) { return t == Tier::Sota ? "sota" : "lightweight"; }

std::string_view to_string(EndpointKind k) {
  switch (k) {
    case EndpointKind::OpenAI: return "openai";
    case EndpointKind::Anthropic: return "anthropic";
    case EndpointKind::Gemini: return "gemini";
    case EndpointKind::Mock: return "mock";
  }
  return "?";
}

Tier parse_tier(std::string_view s) {
  auto l = text::lower(text::trim(s));
  if (l == "sota" || l == "s") return Tier::Sota;
  if (l == "lightweight" || l == "l") return Tier::Lightweight;
  throw ConfigError("unknown model tier: " + std::string(s));
}

EndpointKind parse_endpoint_kind(std::string_view s) {
  auto l = text::lower(text::trim(s));
  if (l == "openai") return EndpointKind::OpenAI;
  if (l == "anthropic") return EndpointKind::Anthropic;
  if (l == "gemini") return EndpointKind::Gemini;
  if (l == "mock") return EndpointKind::Mock;
  throw ConfigError("unknown endpoint kind: " + std::string(s));
}

// ---- registry ---------------------------------------------------------------

ModelRegistry::ModelRegistry(std::vector<ModelProfile> models) {
  for (auto& m : models) add(std::move(m));
}

void ModelRegistry::add(ModelProfile m) {
  if (m.alias.empty()) throw ConfigError("model alias must not be empty");
  if (contains(m.alias)) throw ConfigError("duplicate model alias: " + m.alias);
  if (m.input_price_per_million < Usd{} || m.output_price_per_million < Usd{})
    throw ConfigError("negative price for model " + m.alias);
  // Rejects prices that do not map to a whole number of picodollars per token.
  token_cost(1, m.input_price_per_million);
  token_cost(1, m.output_price_per_million);
  models_.push_back(std::move(m));
}

const ModelProfile& ModelRegistry::find(std::string_view alias) const {
  for (const auto& m : models_)
    if (m.alias == alias) return m;
  throw ConfigError("unknown model alias: " + std::string(alias));
}

bool ModelRegistry::contains(std::string_view alias) const {
  return std::any_of(models_.begin(), models_.end(), [&](const auto& m) { return m.alias == alias; });
}

ModelRegistry ModelRegistry::defaults() {
  auto m = [](std::string alias, std::string api, Tier tier, const char* in, const char* out, EndpointKind kind,
              bool fingerprint) {
    ModelProfile p;
    p.alias = std::move(alias);
    p.api_model_name = std::move(api);
    p.tier = tier;
    p.input_price_per_million = Usd::parse(in);
    p.output_price_per_million = Usd::parse(out);
    p.endpoint_kind = kind;
    p.time_fingerprint = fingerprint;
    return p;
  };
  using E = EndpointKind;
  return ModelRegistry({
      m("GPT 4o", "gpt-4o", Tier::Sota, "2.50", "10.00", E::OpenAI, false),
      m("GPT 3.5", "gpt-3.5-turbo", Tier::Lightweight, "0.50", "1.50", E::OpenAI, false),
      m("Claude Sonnet 4", "claude-sonnet-4-20250514", Tier::Sota, "3.00", "15.00", E::Anthropic, true),
      m("Claude 3.5", "claude-3-5-haiku-20241022", Tier::Lightweight, "0.80", "4.00", E::Anthropic, true),
      m("Gemini 2.5", "gemini-2.5-pro", Tier::Sota, "1.25", "10.00", E::Gemini, false),
      m("Gemini 2.0", "gemini-2.0-flash", Tier::Lightweight, "0.10", "0.40", E::Gemini, false),
      m("Mock A", "mock-a", Tier::Sota, "1.00", "4.00", E::Mock, true),
      m("Mock B", "mock-b", Tier::Lightweight, "0.20", "0.80", E::Mock, true),
  });
}

namespace {

Usd price_from_json(const json& v, const std::string& what) {
  if (v.is_string()) return Usd::parse(v.get<std::string>());
  if (v.is_number_integer()) return Usd::parse(v.dump());
  throw ConfigError(what + " must be a decimal string such as \"2.50\"");
}

}  // namespace

ModelRegistry ModelRegistry::from_json(const json& j) {
  if (!j.is_object() || !j.contains("models") || !j["models"].is_array())
    throw ConfigError("model config needs a \"models\" array");
  ModelRegistry r;
  for (const auto& e : j["models"]) {
    try {
      ModelProfile p;
      p.alias = e.at("alias").get<std::string>();
      p.api_model_name = e.at("api_model_name").get<std::string>();
      p.tier = parse_tier(e.at("tier").get<std::string>());
      p.input_price_per_million = price_from_json(e.at("input_price"), p.alias + " input_price");
      p.output_price_per_million = price_from_json(e.at("output_price"), p.alias + " output_price");
      p.endpoint_kind = parse_endpoint_kind(e.at("endpoint").get<std::string>());
      p.time_fingerprint = e.value("time_fingerprint", true);
      p.base_url = e.value("base_url", "");
      p.api_key_env = e.value("api_key_env", "");
      r.add(std::move(p));
    } catch (const json::exception& ex) {
      throw ConfigError(std::string("malformed model entry: ") + ex.what());
    } catch (const ValidationError& ex) {
      throw ConfigError(std::string("bad model price: ") + ex.what());
    }
  }
  return r;
}

ModelRegistry ModelRegistry::load(const std::string& path) {
  json j;
  try {
    j = json::parse(text::read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return from_json(j);
}

json ModelRegistry::to_json() const {
  json arr = json::array();
  for (const auto& m : models_) {
    json e = {{"alias", m.alias},
              {"api_model_name", m.api_model_name},
              {"tier", to_string(m.tier)},
              {"input_price", m.input_price_per_million.str()},
              {"output_price", m.output_price_per_million.str()},
              {"endpoint", to_string(m.endpoint_kind)},
              {"time_fingerprint", m.time_fingerprint}};
    if (!m.base_url.empty()) e["base_url"] = m.base_url;
    if (!m.api_key_env.empty()) e["api_key_env"] = m.api_key_env;
    arr.push_back(std::move(e));
  }
  return json{{"models", arr}};
}

// ---- settings, cost, keys -----------------------------------------------------

json GenerationSettings::to_json() const {
  return json{{"max_output_tokens", max_output_tokens}, {"temperature", temperature}};
}

std::string GenerationSettings::hash() const { return sha256_hex(to_json().dump()); }

Usd token_cost(std::int64_t tokens, Usd price_per_million) {
  if (tokens < 0) throw ValidationError("negative token count");
  if (price_per_million.picos() % 1'000'000 != 0)
    throw ValidationError("price " + price_per_million.str() + " per million tokens has more than six decimals");
  return Usd::from_picos(price_per_million.picos() / 1'000'000).times(tokens);
}

Usd cost(std::int64_t input_tokens, std::int64_t output_tokens, const ModelProfile& m) {
  return token_cost(input_tokens, m.input_price_per_million) + token_cost(output_tokens, m.output_price_per_million);
}

Usd cost(const LLMExchange& e, const ModelProfile& m) { return cost(e.input_tokens, e.output_tokens, m); }

std::string cache_key(const PromptBundle& bundle, const ModelProfile& model, const GenerationSettings& settings) {
  std::string material = model.api_model_name;
  material.push_back('\x1f');
  material += bundle.prompt_hash;
  material.push_back('\x1f');
  material += settings.hash();
  return sha256_hex(material);
}

// ---- exchange serialization ---------------------------------------------------

json to_json(const LLMExchange& e) {
  return json{{"cache_key", e.cache_key},
              {"prompt_hash", e.prompt_hash},
              {"model_alias", e.model_alias},
              {"api_model_name", e.api_model_name},
              {"report_id", e.report_id},
              {"strategy", e.strategy},
              {"response_text", e.response_text},
              {"usage", {{"input_tokens", e.input_tokens}, {"output_tokens", e.output_tokens}, {"estimated", e.tokens_estimated}}},
              {"latency_ms", e.latency_ms},
              {"attempt_count", e.attempt_count},
              {"from_cache", e.from_cache},
              {"timestamp", e.timestamp},
              {"run_date", e.run_date},
              {"server_fingerprint", e.server_fingerprint}};
}

LLMExchange exchange_from_json(const json& j) {
  LLMExchange e;
  e.cache_key = j.value("cache_key", "");
  e.prompt_hash = j.at("prompt_hash").get<std::string>();
  e.model_alias = j.value("model_alias", "");
  e.api_model_name = j.value("api_model_name", "");
  e.report_id = j.value("report_id", "");
  e.strategy = j.value("strategy", "");
  e.response_text = j.at("response_text").get<std::string>();
  const auto& u = j.at("usage");
  e.input_tokens = u.at("input_tokens").get<std::int64_t>();
  e.output_tokens = u.at("output_tokens").get<std::int64_t>();
  e.tokens_estimated = u.value("estimated", false);
  e.latency_ms = j.at("latency_ms").get<std::int64_t>();
  e.attempt_count = j.value("attempt_count", 1);
  e.from_cache = j.value("from_cache", false);
  e.timestamp = j.value("timestamp", "");
  e.run_date = j.value("run_date", "");
  e.server_fingerprint = j.value("server_fingerprint", "");
  return e;
}

// ---- wire dialects --------------------------------------------------------------

HttpRequest build_request(const ModelProfile& m, const PromptBundle& b, const GenerationSettings& s,
                          const std::string& api_key) {
  HttpRequest r;
  r.headers.emplace_back("Content-Type", "application/json");
  json body;
  switch (m.endpoint_kind) {
    case EndpointKind::OpenAI:
      r.url = m.base_url.empty() ? "https://api.openai.com/v1/chat/completions" : m.base_url;
      r.headers.emplace_back("Authorization", "Bearer " + api_key);
      body = {{"model", m.api_model_name},
              {"messages", json::array({{{"role", "system"}, {"content", b.system_prompt}},
                                        {{"role", "user"}, {"content", b.user_prompt}}})},
              {"temperature", s.temperature},
              {"max_tokens", s.max_output_tokens}};
      break;
    case EndpointKind::Anthropic:
      r.url = m.base_url.empty() ? "https://api.anthropic.com/v1/messages" : m.base_url;
      r.headers.emplace_back("x-api-key", api_key);
      r.headers.emplace_back("anthropic-version", "2023-06-01");
      body = {{"model", m.api_model_name},
              {"system", b.system_prompt},
              {"messages", json::array({{{"role", "user"}, {"content", b.user_prompt}}})},
              {"temperature", s.temperature},
              {"max_tokens", s.max_output_tokens}};
      break;
    case EndpointKind::Gemini:
      r.url = m.base_url.empty()
                  ? "https://generativelanguage.googleapis.com/v1beta/models/" + m.api_model_name + ":generateContent"
                  : m.base_url;
      r.headers.emplace_back("x-goog-api-key", api_key);
      body = {{"systemInstruction", {{"parts", json::array({{{"text", b.system_prompt}}})}}},
              {"contents", json::array({{{"role", "user"}, {"parts", json::array({{{"text", b.user_prompt}}})}}})},
              {"generationConfig", {{"temperature", s.temperature}, {"maxOutputTokens", s.max_output_tokens}}}};
      break;
    case EndpointKind::Mock:
      throw ConfigError("the mock dialect does not use HTTP");
  }
  r.body = body.dump();
  return r;
}

namespace {

std::optional<std::int64_t> opt_int(const json& j, const char* key) {
  if (j.is_object() && j.contains(key) && j[key].is_number_integer()) return j[key].get<std::int64_t>();
  return std::nullopt;
}

std::string opt_str(const json& j, const char* key) {
  if (j.is_object() && j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
  return {};
}

}  // namespace

ProviderReply parse_reply(EndpointKind kind, const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw TransportError("malformed provider reply", 200);
  ProviderReply r;
  switch (kind) {
    case EndpointKind::OpenAI: {
      if (j.contains("usage")) {
        r.input_tokens = opt_int(j["usage"], "prompt_tokens");
        r.output_tokens = opt_int(j["usage"], "completion_tokens");
      }
      r.fingerprint = opt_str(j, "system_fingerprint");
      if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
        throw TransportError("provider reply has no choices", 200);
      const auto& c = j["choices"][0];
      const auto& msg = c.value("message", json::object());
      if (msg.contains("refusal") && msg["refusal"].is_string()) r.refusal = msg["refusal"].get<std::string>();
      if (opt_str(c, "finish_reason") == "content_filter" && !r.refusal) r.refusal = "content_filter";
      r.text = opt_str(msg, "content");
      break;
    }
    case EndpointKind::Anthropic: {
      if (j.contains("usage")) {
        r.input_tokens = opt_int(j["usage"], "input_tokens");
        r.output_tokens = opt_int(j["usage"], "output_tokens");
      }
      r.fingerprint = opt_str(j, "model");
      if (j.contains("content") && j["content"].is_array())
        for (const auto& part : j["content"])
          if (opt_str(part, "type") == "text") r.text += opt_str(part, "text");
      if (opt_str(j, "stop_reason") == "refusal") r.refusal = r.text.empty() ? "refusal" : r.text;
      break;
    }
    case EndpointKind::Gemini: {
      if (j.contains("usageMetadata")) {
        const auto& u = j["usageMetadata"];
        r.input_tokens = opt_int(u, "promptTokenCount");
        auto out = opt_int(u, "candidatesTokenCount");
        auto thoughts = opt_int(u, "thoughtsTokenCount");  // billed as output
        if (out || thoughts) r.output_tokens = out.value_or(0) + thoughts.value_or(0);
      }
      r.fingerprint = opt_str(j, "modelVersion");
      if (j.contains("promptFeedback")) {
        auto reason = opt_str(j["promptFeedback"], "blockReason");
        if (!reason.empty()) r.refusal = "blocked: " + reason;
      }
      if (j.contains("candidates") && j["candidates"].is_array() && !j["candidates"].empty()) {
        const auto& c = j["candidates"][0];
        if (c.contains("content") && c["content"].contains("parts"))
          for (const auto& part : c["content"]["parts"])
            if (!part.value("thought", false)) r.text += opt_str(part, "text");
        static const std::vector<std::string> kBlocked = {"SAFETY", "RECITATION", "PROHIBITED_CONTENT", "BLOCKLIST",
                                                          "SPII"};
        auto reason = opt_str(c, "finishReason");
        if (std::find(kBlocked.begin(), kBlocked.end(), reason) != kBlocked.end()) r.refusal = "finish: " + reason;
      } else if (!r.refusal) {
        throw TransportError("provider reply has no candidates", 200);
      }
      break;
    }
    case EndpointKind::Mock:
      r.text = body;
      break;
  }
  return r;
}

// ---- cache -------------------------------------------------------------------------

ResponseCache::ResponseCache(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(fs::path(dir_) / "records", ec);
  if (ec) throw Error("cannot create cache directory " + dir_ + ": " + ec.message());
}

std::string ResponseCache::record_path(const std::string& key) const {
  return (fs::path(dir_) / "records" / key.substr(0, 2) / (key + ".json")).string();
}

std::optional<LLMExchange> ResponseCache::get(const std::string& key) const {
  auto path = record_path(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j = json::parse(content, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    spdlog::warn("ignoring unreadable cache record {}", path);
    return std::nullopt;
  }
  try {
    auto e = exchange_from_json(j);
    e.cache_key = key;
    e.from_cache = true;
    return e;
  } catch (const json::exception&) {
    spdlog::warn("ignoring malformed cache record {}", path);
    return std::nullopt;
  }
}

void ResponseCache::put(const LLMExchange& e, const PromptBundle& b, const GenerationSettings& s) {
  json rec = to_json(e);
  rec["from_cache"] = false;
  rec["settings"] = s.to_json();
  rec["request"] = {{"system_prompt", b.system_prompt}, {"user_prompt", b.user_prompt}};
  text::write_file_atomic(record_path(e.cache_key), rec.dump(2) + "\n");
  json idx = {{"key", e.cache_key},
              {"model_alias", e.model_alias},
              {"api_model_name", e.api_model_name},
              {"prompt_hash", e.prompt_hash},
              {"report_id", e.report_id},
              {"strategy", e.strategy},
              {"timestamp", e.timestamp}};
  std::lock_guard lock(index_mutex_);
  std::ofstream out(fs::path(dir_) / "index.jsonl", std::ios::app | std::ios::binary);
  out << idx.dump() << '\n';
}

// ---- gateway ---------------------------------------------------------------------------

const std::string kMockDefaultResponse =
    R"({"service_name": "Mock Service", "location": null, "service_category": "other", )"
    R"("start_time": "00:00:00", "end_time": "00:00:00", "timezone": "UTC", )"
    R"("user_symptom": "mock symptom", "user_symptom_category": ["OTHER"]})";

struct Gateway::Limiter {
  std::mutex m;
  std::condition_variable cv;
  int in_flight = 0;
  std::chrono::steady_clock::time_point next_start{};
};

namespace {

class LimiterSlot {
 public:
  LimiterSlot(std::mutex& m, std::condition_variable& cv, int& in_flight, int max,
              std::chrono::steady_clock::time_point& next_start, std::chrono::milliseconds interval)
      : m_(m), cv_(cv), in_flight_(in_flight) {
    std::unique_lock lock(m_);
    cv_.wait(lock, [&] { return in_flight_ < std::max(1, max); });
    ++in_flight_;
    auto now = std::chrono::steady_clock::now();
    auto start = std::max(now, next_start);
    next_start = start + interval;
    lock.unlock();
    if (start > now) std::this_thread::sleep_until(start);
  }
  ~LimiterSlot() {
    {
      std::lock_guard lock(m_);
      --in_flight_;
    }
    cv_.notify_one();
  }
  LimiterSlot(const LimiterSlot&) = delete;
  LimiterSlot& operator=(const LimiterSlot&) = delete;

 private:
  std::mutex& m_;
  std::condition_variable& cv_;
  int& in_flight_;
};

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool retryable(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

}  // namespace

Gateway::Gateway(ModelRegistry registry, GatewayOptions options, std::shared_ptr<HttpTransport> transport)
    : registry_(std::move(registry)),
      options_(std::move(options)),
      transport_(std::move(transport)),
      rng_(options_.jitter_seed) {
  if (!options_.cache_dir.empty()) cache_ = std::make_unique<ResponseCache>(options_.cache_dir);
  if (!options_.sleeper) options_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (!options_.env_lookup)
    options_.env_lookup = [](const std::string& name) -> std::optional<std::string> {
      const char* v = std::getenv(name.c_str());
      if (!v || !*v) return std::nullopt;
      return std::string(v);
    };
}

Gateway::~Gateway() = default;

Gateway::Limiter& Gateway::limiter(EndpointKind kind) {
  std::lock_guard lock(limiter_mutex_);
  auto& slot = limiters_[kind];
  if (!slot) slot = std::make_unique<Limiter>();
  return *slot;
}

std::chrono::milliseconds Gateway::backoff(int attempt) {
  auto d = options_.retry.base_delay.count() << std::min(attempt - 1, 20);
  d = std::min<std::int64_t>(d, options_.retry.max_delay.count());
  if (options_.retry.jitter && d > 0) {
    std::lock_guard lock(rng_mutex_);
    std::uniform_int_distribution<std::int64_t> dist(d / 2, d);
    d = dist(rng_);
  }
  return std::chrono::milliseconds(d);
}

std::string Gateway::credential(const ModelProfile& m) const {
  std::string name = m.api_key_env;
  if (name.empty()) {
    auto it = options_.credential_env.find(m.endpoint_kind);
    if (it == options_.credential_env.end())
      throw CredentialError("no credential variable configured for " + std::string(to_string(m.endpoint_kind)));
    name = it->second;
  }
  auto v = options_.env_lookup(name);
  if (!v) throw CredentialError("environment variable " + name + " is not set (needed by " + m.alias + ")");
  return *v;
}

LLMExchange Gateway::invoke(const PromptBundle& bundle, std::string_view alias, const GenerationSettings& settings) {
  return invoke(bundle, registry_.find(alias), settings);
}

LLMExchange Gateway::invoke(const PromptBundle& bundle, const ModelProfile& model, const GenerationSettings& settings) {
  if (settings.max_output_tokens <= 0) throw ConfigError("max_output_tokens must be positive");
  const auto key = cache_key(bundle, model, settings);
  if (cache_) {
    if (auto hit = cache_->get(key)) {
      ++cache_hits_;
      hit->model_alias = model.alias;
      return *hit;
    }
  }
  if (options_.replay_only)
    throw TransportError("replay-only run has no cached response for " + model.alias + " / " + bundle.report_id, 0);

  LLMExchange e = model.endpoint_kind == EndpointKind::Mock ? call_mock(bundle, model)
                                                            : call_backend(bundle, model, settings);
  e.cache_key = key;
  e.prompt_hash = bundle.prompt_hash;
  e.model_alias = model.alias;
  e.api_model_name = model.api_model_name;
  e.report_id = bundle.report_id;
  e.strategy = std::string(to_string(bundle.strategy));
  if (cache_) cache_->put(e, bundle, settings);
  return e;
}

LLMExchange Gateway::call_mock(const PromptBundle& bundle, const ModelProfile& model) {
  ++network_calls_;
  const auto started = std::chrono::system_clock::now();
  auto t0 = std::chrono::steady_clock::now();
  std::string response = kMockDefaultResponse;
  if (!options_.mock_dir.empty()) {
    fs::path root(options_.mock_dir);
    const std::string file = bundle.report_id + ".txt";
    const std::string strat(to_string(bundle.strategy));
    for (const auto& p : {root / model.api_model_name / strat / file, root / model.api_model_name / file, root / file,
                          root / model.api_model_name / "default.txt", root / "default.txt"}) {
      if (fs::is_regular_file(p)) {
        response = text::read_file(p.string());
        break;
      }
    }
  }
  if (text::starts_with(response, "!REFUSAL"))
    throw RefusalError(model.alias + " refused the request", std::string(text::trim(response.substr(8))));
  LLMExchange e;
  e.response_text = std::move(response);
  e.input_tokens = static_cast<std::int64_t>(bundle.estimated_input_tokens);
  e.output_tokens = static_cast<std::int64_t>(estimate_tokens(e.response_text));
  e.tokens_estimated = true;
  e.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  e.timestamp = utc_timestamp(started);
  e.run_date = e.timestamp.substr(0, 10);
  return e;
}

LLMExchange Gateway::call_backend(const PromptBundle& bundle, const ModelProfile& model,
                                  const GenerationSettings& settings) {
  const auto request = build_request(model, bundle, settings, credential(model));
  if (!transport_) throw ConfigError("no HTTP transport configured for " + model.alias);
  auto& lim = limiter(model.endpoint_kind);
  ++network_calls_;

  HttpResponse last;
  const int attempts = std::max(1, options_.retry.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    const auto started = std::chrono::system_clock::now();
    std::int64_t latency = 0;
    {
      LimiterSlot slot(lim.m, lim.cv, lim.in_flight, options_.max_in_flight_per_provider, lim.next_start,
                       options_.min_request_interval);
      ++http_requests_;
      auto t0 = std::chrono::steady_clock::now();
      last = transport_->post(request);
      latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    }
    if (last.status >= 200 && last.status < 300) {
      auto reply = parse_reply(model.endpoint_kind, last.body);
      if (reply.refusal) throw RefusalError(model.alias + " refused the request", *reply.refusal);
      LLMExchange e;
      e.response_text = std::move(reply.text);
      e.tokens_estimated = !reply.input_tokens || !reply.output_tokens;
      e.input_tokens = reply.input_tokens.value_or(static_cast<std::int64_t>(bundle.estimated_input_tokens));
      e.output_tokens = reply.output_tokens.value_or(static_cast<std::int64_t>(estimate_tokens(e.response_text)));
      e.latency_ms = latency;
      e.attempt_count = attempt;
      e.timestamp = utc_timestamp(started);
      e.run_date = e.timestamp.substr(0, 10);
      e.server_fingerprint = model.time_fingerprint ? reply.fingerprint : std::string();
      return e;
    }
    if (last.status == 401 || last.status == 403)
      throw CredentialError(model.alias + " rejected the credentials (HTTP " + std::to_string(last.status) + ")");
    if (!retryable(last.status)) break;
    if (attempt < attempts) {
      auto delay = backoff(attempt);
      spdlog::warn("{}: HTTP {} {}, retry {} in {} ms", model.alias, last.status, last.error, attempt, delay.count());
      options_.sleeper(delay);
    }
  }
  std::string detail = last.error.empty() ? last.body.substr(0, 200) : last.error;
  throw TransportError(model.alias + " request failed with status " + std::to_string(last.status) + ": " + detail,
                       last.status);
}

}  // namespace irx
