#include "accelmat/http_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "accelmat/errors.hpp"

namespace accelmat {

using nlohmann::json;

TokenBucket::TokenBucket(double capacity, double refill_per_sec)
    : capacity_(capacity),
      refill_per_sec_(refill_per_sec),
      tokens_(capacity),
      last_refill_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
    for (;;) {
        {
            std::lock_guard lock(mutex_);
            auto now = std::chrono::steady_clock::now();
            double elapsed = std::chrono::duration<double>(now - last_refill_).count();
            tokens_ = std::min(capacity_, tokens_ + elapsed * refill_per_sec_);
            last_refill_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

std::shared_ptr<TokenBucket> provider_rate_limiter(const std::string& provider, double capacity,
                                                   double refill_per_sec) {
    static std::mutex registry_mutex;
    static std::map<std::string, std::shared_ptr<TokenBucket>> registry;
    std::lock_guard lock(registry_mutex);
    auto it = registry.find(provider);
    if (it != registry.end()) return it->second;
    auto bucket = std::make_shared<TokenBucket>(capacity, refill_per_sec);
    registry.emplace(provider, bucket);
    return bucket;
}

namespace {

struct ParsedUrl {
    std::string scheme_host_port;
    std::string base_path;
};

ParsedUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    std::size_t path_start =
        scheme_end == std::string::npos ? url.find('/') : url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string default_base_url(const std::string& provider) {
    if (provider == "openai") return "https://api.openai.com";
    if (provider == "anthropic") return "https://api.anthropic.com";
    if (provider == "gemini") return "https://generativelanguage.googleapis.com";
    return "";
}

json shape_request(const std::string& provider, const ChatRequest& r) {
    if (provider == "anthropic") {
        json body = {{"model", r.model_id},
                     {"max_tokens", r.sampling.max_tokens},
                     {"temperature", r.sampling.temperature},
                     {"messages", json::array({{{"role", "user"}, {"content", r.user}}})}};
        if (r.system) body["system"] = *r.system;
        return body;
    }
    if (provider == "gemini") {
        json body = {{"contents", json::array({{{"role", "user"},
                                                {"parts", json::array({{{"text", r.user}}})}}})},
                     {"generationConfig",
                      {{"temperature", r.sampling.temperature},
                       {"maxOutputTokens", r.sampling.max_tokens}}}};
        if (r.system)
            body["systemInstruction"] = {{"parts", json::array({{{"text", *r.system}}})}};
        return body;
    }
    // openai and openai_compatible
    json messages = json::array();
    if (r.system) messages.push_back({{"role", "system"}, {"content", *r.system}});
    messages.push_back({{"role", "user"}, {"content", r.user}});
    json body = {{"model", r.model_id},
                 {"messages", std::move(messages)},
                 {"temperature", r.sampling.temperature},
                 {"max_tokens", r.sampling.max_tokens}};
    if (r.sampling.seed) body["seed"] = *r.sampling.seed;
    return body;
}

std::pair<std::string, bool> extract_text(const std::string& provider, const json& doc) {
    try {
        if (provider == "anthropic") {
            std::string text;
            for (const auto& block : doc.at("content"))
                if (block.value("type", "text") == "text") text += block.value("text", "");
            bool truncated = doc.value("stop_reason", "") == "max_tokens";
            return {text, truncated};
        }
        if (provider == "gemini") {
            const auto& cand = doc.at("candidates").at(0);
            std::string text;
            for (const auto& part : cand.at("content").at("parts")) text += part.value("text", "");
            bool truncated = cand.value("finishReason", "") == "MAX_TOKENS";
            return {text, truncated};
        }
        const auto& choice = doc.at("choices").at(0);
        std::string text = choice.at("message").value("content", "");
        bool truncated = choice.value("finish_reason", "") == "length";
        return {text, truncated};
    } catch (const json::exception& e) {
        throw TransportError(std::string("unexpected provider response shape: ") + e.what());
    }
}

}  // namespace

std::string HttpBackend::api_key_env_var(const std::string& provider) {
    std::string var = "ACCELMAT_API_KEY_";
    for (char c : provider) var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return var;
}

std::string HttpBackend::api_key_from_env(const std::string& provider) {
    const char* v = std::getenv(api_key_env_var(provider).c_str());
    return v ? v : "";
}

HttpBackend::HttpBackend(Options options) : options_(std::move(options)) {
    if (options_.provider.empty()) throw ConfigError("HttpBackend requires a provider name");
    if (options_.base_url.empty()) options_.base_url = default_base_url(options_.provider);
    if (options_.base_url.empty())
        throw ConfigError("no base_url known for provider \"" + options_.provider + "\"");
    if (options_.api_key.empty()) options_.api_key = api_key_from_env(options_.provider);
    if (options_.use_rate_limiter) limiter_ = provider_rate_limiter(options_.provider);
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
    if (limiter_) limiter_->acquire();

    const auto [host, base_path] = split_url(options_.base_url);
    httplib::Client client(host);
    client.set_connection_timeout(options_.timeout_sec);
    client.set_read_timeout(options_.timeout_sec);
    client.set_write_timeout(options_.timeout_sec);

    std::string path = options_.path;
    httplib::Headers headers;
    if (options_.provider == "anthropic") {
        if (path.empty()) path = "/v1/messages";
        headers.emplace("x-api-key", options_.api_key);
        headers.emplace("anthropic-version", "2023-06-01");
    } else if (options_.provider == "gemini") {
        if (path.empty())
            path = "/v1beta/models/" + request.model_id + ":generateContent";
        path += "?key=" + options_.api_key;
    } else {
        if (path.empty()) path = "/v1/chat/completions";
        headers.emplace("Authorization", "Bearer " + options_.api_key);
    }
    path = base_path + path;

    const json body = shape_request(options_.provider, request);

    auto start = std::chrono::steady_clock::now();
    httplib::Result result = client.Post(path, headers, body.dump(), "application/json");
    auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();

    if (!result) {
        if (result.error() == httplib::Error::ConnectionTimeout ||
            result.error() == httplib::Error::Read || result.error() == httplib::Error::Write)
            throw Timeout("request to " + options_.provider + " timed out");
        throw TransportError("request to " + options_.provider + " failed: " +
                             httplib::to_string(result.error()));
    }

    const int status = result->status;
    if (status == 401 || status == 403)
        throw AuthError("provider " + options_.provider + " rejected credentials (HTTP " +
                        std::to_string(status) + ")");
    if (status == 429)
        throw RateLimited("provider " + options_.provider + " rate limited the request");
    if (status == 408) throw Timeout("provider " + options_.provider + " returned HTTP 408");
    if (status < 200 || status >= 300)
        throw TransportError("provider " + options_.provider + " returned HTTP " +
                             std::to_string(status) + ": " + result->body.substr(0, 200));

    json doc;
    try {
        doc = json::parse(result->body);
    } catch (const json::parse_error& e) {
        throw TransportError(std::string("provider returned non-JSON body: ") + e.what());
    }

    auto [text, truncated] = extract_text(options_.provider, doc);
    ChatResponse response;
    response.text = std::move(text);
    response.provider = options_.provider;
    response.latency_ms = latency;
    response.truncated = truncated;
    return response;
}

}  // namespace accelmat
