#pragma once

#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>

#include "accelmat/llm_gateway.hpp"

namespace accelmat {

/// Blocking token bucket. One bucket per provider is shared by every backend
/// instance talking to that provider.
class TokenBucket {
public:
    TokenBucket(double capacity, double refill_per_sec);

    /// Blocks until a token is available, then consumes it.
    void acquire();

private:
    double capacity_;
    double refill_per_sec_;
    double tokens_;
    std::chrono::steady_clock::time_point last_refill_;
    std::mutex mutex_;
};

/// Process-wide bucket for a provider name.
std::shared_ptr<TokenBucket> provider_rate_limiter(const std::string& provider,
                                                   double capacity = 8.0,
                                                   double refill_per_sec = 4.0);

/// Generic JSON-over-HTTP chat-completion adapter. The paper's vendors are
/// presets of this one code path.
class HttpBackend : public Backend {
public:
    struct Options {
        std::string provider;        // "openai" | "anthropic" | "gemini" | "openai_compatible"
        std::string base_url;        // scheme://host[:port]; empty -> preset default
        std::string path;            // endpoint path override (openai_compatible)
        std::string api_key;         // empty -> read ACCELMAT_API_KEY_<PROVIDER>
        int timeout_sec = 120;
        bool use_rate_limiter = true;
    };

    explicit HttpBackend(Options options);

    ChatResponse complete(const ChatRequest& request) override;
    std::string name() const override { return "http:" + options_.provider; }

    /// Credential lookup: ACCELMAT_API_KEY_<PROVIDER> (provider upper-cased).
    static std::string api_key_env_var(const std::string& provider);
    static std::string api_key_from_env(const std::string& provider);

private:
    Options options_;
    std::shared_ptr<TokenBucket> limiter_;
};

}  // namespace accelmat
