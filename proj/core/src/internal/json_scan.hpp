#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace accelmat::internal {

/// Spans of top-level balanced {...} regions in raw text, honoring JSON string
/// quoting. Model output frequently wraps the payload in code fences or prose;
/// brace balancing ignores both.
inline std::vector<std::string> balanced_object_spans(const std::string& text) {
    std::vector<std::string> spans;
    int depth = 0;
    bool in_string = false, escaped = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"' && depth > 0) {
            in_string = true;
        } else if (c == '{') {
            if (depth == 0) start = i;
            ++depth;
        } else if (c == '}') {
            if (depth > 0 && --depth == 0) spans.push_back(text.substr(start, i - start + 1));
        }
    }
    return spans;
}

/// First span that parses as a JSON object, scanned left to right.
inline std::optional<nlohmann::json> first_json_object(const std::string& text) {
    for (const auto& span : balanced_object_spans(text)) {
        nlohmann::json doc = nlohmann::json::parse(span, nullptr, false);
        if (!doc.is_discarded() && doc.is_object()) return doc;
    }
    return std::nullopt;
}

/// Last span that parses as a JSON object; structured trailers live at the end.
inline std::optional<nlohmann::json> last_json_object(const std::string& text) {
    auto spans = balanced_object_spans(text);
    for (auto it = spans.rbegin(); it != spans.rend(); ++it) {
        nlohmann::json doc = nlohmann::json::parse(*it, nullptr, false);
        if (!doc.is_discarded() && doc.is_object()) return doc;
    }
    return std::nullopt;
}

}  // namespace accelmat::internal
