#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace accelmat {

/// The seat a request fills in the pipeline. Concrete models are configuration.
enum class RoleTag {
    generator,
    critic_1,
    critic_2,
    critic_3,
    summarizer,
    evaluator,
    keyword_extractor,
    experts_finder,
};

const char* to_string(RoleTag tag);
RoleTag role_tag_from_string(const std::string& s);

/// Critic seat for a 0-based position (0 -> critic_1 ...). Positions beyond
/// the named seats are rejected at configuration time.
RoleTag critic_role(std::size_t position);

struct SamplingParams {
    double temperature = 0.0;
    int max_tokens = 8192;
    std::optional<std::int64_t> seed;
};

struct ChatRequest {
    RoleTag role_tag = RoleTag::generator;
    std::optional<std::string> system;
    std::string user;
    std::string model_id;
    SamplingParams sampling;
};

struct ChatResponse {
    std::string text;
    std::string provider;
    std::int64_t latency_ms = 0;
    bool truncated = false;
};

/// Stable hex digest of (role_tag, system, user, model_id). Pure function of
/// its inputs; sampling parameters deliberately excluded so a replay matches
/// regardless of temperature bookkeeping.
std::string fingerprint(const ChatRequest& request);

/// Abstract chat-completion provider. Implementations must be safe for
/// concurrent use by multiple in-flight requests.
class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

struct RetryPolicy {
    int max_retries = 3;  // additional attempts after the first
    std::chrono::milliseconds base_delay{250};
    std::chrono::milliseconds max_delay{8000};
    double multiplier = 2.0;

    /// Delay before retry #attempt (1-based). Non-decreasing until max_delay.
    std::chrono::milliseconds delay_before_retry(int attempt) const;
};

struct CallRecord {
    RoleTag role_tag = RoleTag::generator;
    std::string fingerprint;
    std::int64_t latency_ms = 0;
    int attempts = 1;
    std::size_t response_bytes = 0;
};

/// Thread-safe append-only log of every gateway call in a run.
class CallLog {
public:
    void append(CallRecord record);
    std::vector<CallRecord> snapshot() const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<CallRecord> records_;
};

/// Issues a request against a backend, retrying transient failures
/// (RateLimited, Timeout, TransportError) with exponential backoff up to the
/// policy's cap. AuthError and CassetteMiss are surfaced immediately. Every
/// completed call is appended to `log` when one is given.
ChatResponse complete(const ChatRequest& request, Backend& backend,
                      const RetryPolicy& policy = {}, CallLog* log = nullptr);

/// complete() against a live backend, additionally appending the exchange to
/// the cassette file at `cassette_path` so the session can be replayed.
ChatResponse record(const ChatRequest& request, Backend& live_backend,
                    const std::string& cassette_path, const RetryPolicy& policy = {},
                    CallLog* log = nullptr);

}  // namespace accelmat
