#include "accelmat/llm_gateway.hpp"

#include <array>
#include <thread>

#include "accelmat/errors.hpp"

namespace accelmat {

namespace {

constexpr std::array<const char*, 8> kRoleNames = {
    "generator",  "critic_1",  "critic_2",          "critic_3",
    "summarizer", "evaluator", "keyword_extractor", "experts_finder",
};

}  // namespace

const char* to_string(RoleTag tag) {
    return kRoleNames[static_cast<std::size_t>(tag)];
}

RoleTag role_tag_from_string(const std::string& s) {
    for (std::size_t i = 0; i < kRoleNames.size(); ++i)
        if (s == kRoleNames[i]) return static_cast<RoleTag>(i);
    throw ConfigError("unknown role tag: \"" + s + "\"");
}

RoleTag critic_role(std::size_t position) {
    switch (position) {
        case 0: return RoleTag::critic_1;
        case 1: return RoleTag::critic_2;
        case 2: return RoleTag::critic_3;
        default:
            throw ConfigError("critic seat " + std::to_string(position + 1) +
                              " exceeds the supported roster (3 seats)");
    }
}

std::string fingerprint(const ChatRequest& request) {
    // FNV-1a 64 over length-prefixed fields; std::hash is not stable across
    // builds and cassettes persist fingerprints on disk.
    std::uint64_t h = 14695981039346656037ULL;
    auto mix_byte = [&](unsigned char c) {
        h ^= c;
        h *= 1099511628211ULL;
    };
    auto mix = [&](const std::string& s) {
        std::uint64_t n = s.size();
        for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>((n >> (i * 8)) & 0xff));
        for (unsigned char c : s) mix_byte(c);
    };
    mix(to_string(request.role_tag));
    mix_byte(request.system.has_value() ? 1 : 0);
    mix(request.system.value_or(""));
    mix(request.user);
    mix(request.model_id);

    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

std::chrono::milliseconds RetryPolicy::delay_before_retry(int attempt) const {
    double d = static_cast<double>(base_delay.count());
    for (int i = 1; i < attempt; ++i) d *= multiplier;
    auto ms = std::chrono::milliseconds(static_cast<std::int64_t>(d));
    return ms > max_delay ? max_delay : ms;
}

void CallLog::append(CallRecord record) {
    std::lock_guard lock(mutex_);
    records_.push_back(std::move(record));
}

std::vector<CallRecord> CallLog::snapshot() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::size_t CallLog::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

namespace {

void validate(const ChatRequest& request) {
    if (request.user.empty()) throw EmptyField("chat request has empty user content");
    if (request.model_id.empty()) throw EmptyField("chat request has empty model_id");
    if (request.sampling.temperature < 0.0 || request.sampling.temperature > 2.0)
        throw ConfigError("temperature out of [0, 2]");
    if (request.sampling.max_tokens <= 0) throw ConfigError("max_tokens must be positive");
}

}  // namespace

ChatResponse complete(const ChatRequest& request, Backend& backend, const RetryPolicy& policy,
                      CallLog* log) {
    validate(request);

    int attempts = 0;
    for (;;) {
        ++attempts;
        try {
            ChatResponse response = backend.complete(request);
            if (log) {
                log->append({request.role_tag, fingerprint(request), response.latency_ms, attempts,
                             response.text.size()});
            }
            return response;
        } catch (const AuthError&) {
            throw;
        } catch (const CassetteMiss&) {
            throw;
        } catch (const RateLimited&) {
            if (attempts > policy.max_retries) throw;
        } catch (const Timeout&) {
            if (attempts > policy.max_retries) throw;
        } catch (const TransportError&) {
            if (attempts > policy.max_retries) throw;
        }
        std::this_thread::sleep_for(policy.delay_before_retry(attempts));
    }
}

}  // namespace accelmat
