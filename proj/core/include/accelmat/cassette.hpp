#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "accelmat/llm_gateway.hpp"

namespace accelmat {

enum class CassetteMode {
    replay_by_fingerprint,  // entries keyed by request fingerprint, each unique
    replay_by_sequence,     // entries consumed strictly in order, exactly once
};

struct CassetteEntry {
    std::string fingerprint;
    std::string role_tag;
    std::string response_text;
};

/// A stored request->response log. File format: JSON array of
/// {fingerprint, role_tag, response_text}.
class Cassette {
public:
    Cassette() = default;
    Cassette(std::vector<CassetteEntry> entries, CassetteMode mode);

    // Movable (the mutex starts fresh); moves happen before concurrent use.
    Cassette(Cassette&& other) noexcept
        : entries_(std::move(other.entries_)),
          by_fingerprint_(std::move(other.by_fingerprint_)),
          mode_(other.mode_),
          cursor_(other.cursor_) {}
    Cassette& operator=(Cassette&&) = delete;
    Cassette(const Cassette&) = delete;
    Cassette& operator=(const Cassette&) = delete;

    static Cassette load(const std::string& path, CassetteMode mode);

    /// Response for a request, per mode; throws CassetteMiss when no entry
    /// matches (fingerprint mode) or the tape is exhausted (sequence mode).
    std::string replay(const ChatRequest& request);

    CassetteMode mode() const { return mode_; }
    std::size_t size() const { return entries_.size(); }
    const std::vector<CassetteEntry>& entries() const { return entries_; }

private:
    std::vector<CassetteEntry> entries_;
    std::unordered_map<std::string, std::size_t> by_fingerprint_;
    CassetteMode mode_ = CassetteMode::replay_by_fingerprint;
    std::size_t cursor_ = 0;  // sequence mode
    std::mutex mutex_;        // sequence mode serializes consumption
};

/// Deterministic backend that answers from a cassette. Replayed responses
/// report latency 0 so traces stay byte-stable.
class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(Cassette cassette) : cassette_(std::move(cassette)) {}

    static std::shared_ptr<ReplayBackend> from_file(
        const std::string& path, CassetteMode mode = CassetteMode::replay_by_fingerprint);

    ChatResponse complete(const ChatRequest& request) override;
    std::string name() const override { return "replay"; }

private:
    Cassette cassette_;
};

/// Appends entries to a cassette file, creating it on first write. Loads any
/// existing entries so a session can extend a previous recording. Re-recording
/// an identical exchange is a no-op.
class CassetteWriter {
public:
    explicit CassetteWriter(std::string path);

    void append(const std::string& fingerprint, RoleTag role_tag, const std::string& response_text);
    std::size_t size() const;

private:
    void flush_locked();

    std::string path_;
    std::vector<CassetteEntry> entries_;
    mutable std::mutex mutex_;
};

/// Decorator that forwards to a live backend and records every exchange. The
/// writer may be shared by several decorators targeting one cassette file.
class RecordingBackend : public Backend {
public:
    RecordingBackend(std::shared_ptr<Backend> inner, std::string cassette_path)
        : inner_(std::move(inner)),
          writer_(std::make_shared<CassetteWriter>(std::move(cassette_path))) {}

    RecordingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<CassetteWriter> writer)
        : inner_(std::move(inner)), writer_(std::move(writer)) {}

    ChatResponse complete(const ChatRequest& request) override;
    std::string name() const override { return "record(" + inner_->name() + ")"; }

private:
    std::shared_ptr<Backend> inner_;
    std::shared_ptr<CassetteWriter> writer_;
};

}  // namespace accelmat
