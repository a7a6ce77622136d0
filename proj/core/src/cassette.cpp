#include "accelmat/cassette.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "accelmat/errors.hpp"

namespace accelmat {

using nlohmann::json;

namespace {

std::vector<CassetteEntry> read_entries(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open cassette file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("malformed cassette JSON: ") + e.what(), path);
    }
    if (!doc.is_array()) throw SchemaError("cassette must be a JSON array", path);

    std::vector<CassetteEntry> entries;
    std::size_t idx = 0;
    for (const auto& rec : doc) {
        ++idx;
        const std::string where = path + ", entry " + std::to_string(idx);
        if (!rec.is_object() || !rec.contains("fingerprint") || !rec.contains("response_text"))
            throw SchemaError("cassette entry needs fingerprint and response_text", where);
        CassetteEntry e;
        e.fingerprint = rec["fingerprint"].get<std::string>();
        e.role_tag = rec.value("role_tag", "");
        e.response_text = rec["response_text"].get<std::string>();
        entries.push_back(std::move(e));
    }
    return entries;
}

void write_entries(const std::string& path, const std::vector<CassetteEntry>& entries) {
    json doc = json::array();
    for (const auto& e : entries) {
        doc.push_back({{"fingerprint", e.fingerprint},
                       {"role_tag", e.role_tag},
                       {"response_text", e.response_text}});
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write cassette file: " + path);
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("failed writing cassette file: " + path);
}

}  // namespace

Cassette::Cassette(std::vector<CassetteEntry> entries, CassetteMode mode)
    : entries_(std::move(entries)), mode_(mode) {
    if (mode_ == CassetteMode::replay_by_fingerprint) {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            auto [it, inserted] = by_fingerprint_.emplace(entries_[i].fingerprint, i);
            if (!inserted)
                throw SchemaError("duplicate fingerprint in fingerprint-mode cassette: " +
                                      entries_[i].fingerprint,
                                  "entry " + std::to_string(i + 1));
        }
    }
}

Cassette Cassette::load(const std::string& path, CassetteMode mode) {
    return Cassette(read_entries(path), mode);
}

std::string Cassette::replay(const ChatRequest& request) {
    const std::string fp = accelmat::fingerprint(request);
    if (mode_ == CassetteMode::replay_by_fingerprint) {
        auto it = by_fingerprint_.find(fp);
        if (it == by_fingerprint_.end())
            throw CassetteMiss("no cassette entry for request", fp);
        return entries_[it->second].response_text;
    }
    std::lock_guard lock(mutex_);
    if (cursor_ >= entries_.size())
        throw CassetteMiss("sequence cassette exhausted after " + std::to_string(entries_.size()) +
                               " entries",
                           fp);
    return entries_[cursor_++].response_text;
}

std::shared_ptr<ReplayBackend> ReplayBackend::from_file(const std::string& path,
                                                        CassetteMode mode) {
    return std::make_shared<ReplayBackend>(Cassette::load(path, mode));
}

ChatResponse ReplayBackend::complete(const ChatRequest& request) {
    ChatResponse response;
    response.text = cassette_.replay(request);
    response.provider = "replay";
    response.latency_ms = 0;
    response.truncated = false;
    return response;
}

CassetteWriter::CassetteWriter(std::string path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_))
        entries_ = read_entries(path_);
}

void CassetteWriter::append(const std::string& fingerprint, RoleTag role_tag,
                            const std::string& response_text) {
    std::lock_guard lock(mutex_);
    for (const auto& e : entries_) {
        if (e.fingerprint == fingerprint && e.response_text == response_text) return;
    }
    entries_.push_back({fingerprint, to_string(role_tag), response_text});
    flush_locked();
}

std::size_t CassetteWriter::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

void CassetteWriter::flush_locked() {
    write_entries(path_, entries_);
}

ChatResponse RecordingBackend::complete(const ChatRequest& request) {
    ChatResponse response = inner_->complete(request);
    writer_->append(fingerprint(request), request.role_tag, response.text);
    return response;
}

ChatResponse record(const ChatRequest& request, Backend& live_backend,
                    const std::string& cassette_path, const RetryPolicy& policy, CallLog* log) {
    ChatResponse response = complete(request, live_backend, policy, log);
    CassetteWriter writer(cassette_path);
    writer.append(fingerprint(request), request.role_tag, response.text);
    return response;
}

}  // namespace accelmat
