#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

namespace accelmat::internal {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline bool contains_ci(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) return false;
    auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                          [](unsigned char a, unsigned char b) {
                              return std::tolower(a) == std::tolower(b);
                          });
    return it != haystack.end();
}

/// Position of needle in haystack, case-insensitive, from `from`; npos if absent.
inline std::size_t find_ci(const std::string& haystack, const std::string& needle,
                           std::size_t from = 0) {
    if (needle.empty() || from > haystack.size()) return std::string::npos;
    auto it = std::search(haystack.begin() + static_cast<std::ptrdiff_t>(from), haystack.end(),
                          needle.begin(), needle.end(), [](unsigned char a, unsigned char b) {
                              return std::tolower(a) == std::tolower(b);
                          });
    if (it == haystack.end()) return std::string::npos;
    return static_cast<std::size_t>(it - haystack.begin());
}

/// Lower-cased, alphanumeric-only view of a key: "Suggestion_1" and
/// "Suggestion 1" both normalize to "suggestion1".
inline std::string normalize_key(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s)
        if (std::isalnum(c)) out += static_cast<char>(std::tolower(c));
    return out;
}

inline bool starts_with(const std::string& s, const std::string& prefix) {
    return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

/// Trims whitespace plus leading/trailing punctuation; used to normalize
/// verdict tokens like " yes. " or "NO!".
inline std::string strip_punct(const std::string& s) {
    auto is_noise = [](unsigned char c) {
        return std::isspace(c) || c == '.' || c == ',' || c == '!' || c == ';' || c == ':' ||
               c == '\'' || c == '"' || c == '(' || c == ')' || c == '[' || c == ']' || c == '*';
    };
    std::size_t b = 0, e = s.size();
    while (b < e && is_noise(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_noise(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace accelmat::internal
