#include "accelmat/agent_io.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>

#include "accelmat/errors.hpp"
#include "internal/json_scan.hpp"
#include "internal/text.hpp"

namespace accelmat {

using nlohmann::json;
using namespace internal;

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::yes: return "yes";
        case Verdict::no: return "no";
        default: return "unparseable";
    }
}

namespace {

Verdict normalize_verdict(const std::string& raw) {
    const std::string token = to_lower(strip_punct(raw));
    if (token == "yes") return Verdict::yes;
    if (token == "no") return Verdict::no;
    return Verdict::unparseable;
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

/// A labelled segment of free-form text: "<marker> <k>:" up to the next marker.
struct Segment {
    int index = 0;
    std::string body;
};

/// Scans for "suggestion <k>:" markers (underscores/spaces/quotes tolerated
/// between tokens). `lead_words` must immediately precede "suggestion", e.g.
/// {"feedback", "for"} to match critic transcripts.
std::vector<Segment> scan_segments(const std::string& text,
                                   const std::vector<std::string>& lead_words) {
    struct Marker {
        std::size_t start;      // first char of the marker phrase
        std::size_t body_from;  // char after the colon
        int index;
    };
    std::vector<Marker> markers;

    auto skip_fill = [&](std::size_t& p) {
        while (p < text.size() &&
               (text[p] == ' ' || text[p] == '_' || text[p] == '\t' || text[p] == '"' ||
                text[p] == '\''))
            ++p;
    };

    const std::string anchor = lead_words.empty() ? "suggestion" : lead_words.front();
    std::size_t pos = 0;
    while ((pos = find_ci(text, anchor, pos)) != std::string::npos) {
        const std::size_t start = pos;
        if (start > 0 && is_word_char(text[start - 1])) {  // mid-word hit
            ++pos;
            continue;
        }
        std::size_t p = start + anchor.size();
        bool ok = true;
        for (std::size_t w = 1; w < lead_words.size() && ok; ++w) {
            skip_fill(p);
            if (find_ci(text.substr(p, lead_words[w].size()), lead_words[w]) == 0)
                p += lead_words[w].size();
            else
                ok = false;
        }
        if (ok && !lead_words.empty()) {
            skip_fill(p);
            if (find_ci(text.substr(p, 10), "suggestion") == 0)
                p += 10;
            else
                ok = false;
        }
        if (ok) {
            skip_fill(p);
            std::size_t digits = p;
            while (digits < text.size() && std::isdigit(static_cast<unsigned char>(text[digits])))
                ++digits;
            if (digits > p) {
                int index = std::stoi(text.substr(p, digits - p));
                std::size_t q = digits;
                skip_fill(q);
                if (q < text.size() && text[q] == ':') {
                    markers.push_back({start, q + 1, index});
                    pos = q + 1;
                    continue;
                }
            }
        }
        ++pos;
    }

    std::vector<Segment> segments;
    for (std::size_t i = 0; i < markers.size(); ++i) {
        std::size_t end = (i + 1 < markers.size()) ? markers[i + 1].start : text.size();
        segments.push_back({markers[i].index, text.substr(markers[i].body_from,
                                                          end - markers[i].body_from)});
    }
    return segments;
}

/// Splits a segment on lines that open with one of the field labels
/// ("Materials:", "Methods:", ...), returning label -> value (value runs to
/// the next labelled line).
std::map<std::string, std::string> labelled_fields(const std::string& body,
                                                   const std::vector<std::string>& labels) {
    struct Hit {
        std::size_t line_start;
        std::size_t value_from;
        std::string label;
    };
    std::vector<Hit> hits;

    std::size_t line_start = 0;
    while (line_start <= body.size()) {
        std::size_t line_end = body.find('\n', line_start);
        if (line_end == std::string::npos) line_end = body.size();
        std::size_t p = line_start;
        while (p < line_end && (body[p] == ' ' || body[p] == '\t' || body[p] == '"')) ++p;
        for (const auto& label : labels) {
            if (find_ci(body.substr(p, label.size()), label) == 0) {
                std::size_t q = p + label.size();
                while (q < line_end && (body[q] == ' ' || body[q] == '"')) ++q;
                if (q < line_end && body[q] == ':') {
                    hits.push_back({line_start, q + 1, label});
                }
                break;
            }
        }
        if (line_end == body.size()) break;
        line_start = line_end + 1;
    }

    std::map<std::string, std::string> fields;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        std::size_t end = (i + 1 < hits.size()) ? hits[i + 1].line_start : body.size();
        if (!fields.count(hits[i].label))
            fields[hits[i].label] = trim(body.substr(hits[i].value_from, end - hits[i].value_from));
    }
    return fields;
}

std::optional<std::string> string_field(const json& obj, const std::string& key_prefix) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (starts_with(normalize_key(it.key()), key_prefix)) {
            if (it.value().is_string()) return it.value().get<std::string>();
            if (it.value().is_array()) {
                std::string joined;
                for (const auto& part : it.value())
                    if (part.is_string()) {
                        if (!joined.empty()) joined += "\n";
                        joined += part.get<std::string>();
                    }
                return joined;
            }
            return std::nullopt;
        }
    }
    return std::nullopt;
}

}  // namespace

HypothesisSet parse_hypotheses(const std::string& raw, int n, int cycle) {
    if (n < 1) throw ConfigError("parse_hypotheses needs n >= 1");

    std::size_t best_salvaged = 0;
    std::map<int, Hypothesis> found;

    auto consider = [&](int index, std::string materials, std::string methods,
                        std::string reasoning) {
        if (index < 1 || index > n) return;
        materials = trim(materials);
        methods = trim(methods);
        reasoning = trim(reasoning);
        if (materials.empty() || methods.empty() || reasoning.empty()) return;
        found.emplace(index, Hypothesis{index, std::move(materials), std::move(methods),
                                        std::move(reasoning)});
    };

    // JSON shape first; the prompt demands it.
    for (const auto& span : balanced_object_spans(raw)) {
        json doc = json::parse(span, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) continue;
        found.clear();
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            const std::string key = normalize_key(it.key());
            if (!starts_with(key, "suggestion")) continue;
            const std::string digits = key.substr(10);
            if (digits.empty() ||
                !std::all_of(digits.begin(), digits.end(),
                             [](unsigned char c) { return std::isdigit(c); }))
                continue;
            if (!it.value().is_object()) continue;
            auto materials = string_field(it.value(), "material");
            auto methods = string_field(it.value(), "method");
            auto reasoning = string_field(it.value(), "reason");
            consider(std::stoi(digits), materials.value_or(""), methods.value_or(""),
                     reasoning.value_or(""));
        }
        if (found.size() == static_cast<std::size_t>(n)) break;
        best_salvaged = std::max(best_salvaged, found.size());
    }

    // Labelled plain-text fallback.
    if (found.size() != static_cast<std::size_t>(n)) {
        found.clear();
        for (const auto& segment : scan_segments(raw, {})) {
            auto fields = labelled_fields(segment.body, {"materials", "methods", "reasoning"});
            consider(segment.index, fields.count("materials") ? fields["materials"] : "",
                     fields.count("methods") ? fields["methods"] : "",
                     fields.count("reasoning") ? fields["reasoning"] : "");
        }
    }

    if (found.size() != static_cast<std::size_t>(n)) {
        std::size_t salvaged = std::max(best_salvaged, found.size());
        throw ParseError("recovered " + std::to_string(salvaged) + " of " + std::to_string(n) +
                             " hypotheses",
                         salvaged);
    }

    HypothesisSet set;
    set.cycle = cycle;
    for (auto& [index, hypothesis] : found) set.items.push_back(std::move(hypothesis));
    return set;
}

CriticVerdictSet parse_critic_feedback(const std::string& raw, int n, RoleTag critic_id) {
    if (n < 1) throw ConfigError("parse_critic_feedback needs n >= 1");

    CriticVerdictSet out;
    out.critic_id = critic_id;

    std::map<int, CriticVerdict> found;
    std::string overall;
    bool structure_seen = false;

    auto consider = [&](int index, const std::string& verdict_text, std::string reasoning) {
        if (index < 1 || index > n) return;
        if (found.count(index)) return;
        found.emplace(index,
                      CriticVerdict{index, normalize_verdict(verdict_text), trim(reasoning)});
    };

    for (const auto& span : balanced_object_spans(raw)) {
        json doc = json::parse(span, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) continue;
        bool any = false;
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            const std::string key = normalize_key(it.key());
            if (starts_with(key, "overall")) {
                if (it.value().is_string()) {
                    overall = it.value().get<std::string>();
                } else if (it.value().is_array()) {
                    std::string joined;
                    for (const auto& part : it.value())
                        if (part.is_string()) {
                            if (!joined.empty()) joined += "\n";
                            joined += part.get<std::string>();
                        }
                    overall = joined;
                }
                continue;
            }
            if (!starts_with(key, "feedbackforsuggestion")) continue;
            const std::string digits = key.substr(std::string("feedbackforsuggestion").size());
            if (digits.empty() ||
                !std::all_of(digits.begin(), digits.end(),
                             [](unsigned char c) { return std::isdigit(c); }))
                continue;
            any = true;
            if (!it.value().is_object()) continue;
            auto verdict = string_field(it.value(), "meets");
            auto reasoning = string_field(it.value(), "reason");
            consider(std::stoi(digits), verdict.value_or(""), reasoning.value_or(""));
        }
        if (any) {
            structure_seen = true;
            break;
        }
    }

    if (!structure_seen) {
        auto segments = scan_segments(raw, {"feedback", "for"});
        for (const auto& segment : segments) {
            structure_seen = true;
            // The per-suggestion block ends where an overall-feedback header
            // opens a line.
            std::string body = segment.body;
            std::size_t overall_at = find_ci(body, "overall");
            while (overall_at != std::string::npos) {
                std::size_t bol = body.rfind('\n', overall_at);
                bol = (bol == std::string::npos) ? 0 : bol + 1;
                if (trim(body.substr(bol, overall_at - bol)).empty()) {
                    body = body.substr(0, bol);
                    break;
                }
                overall_at = find_ci(body, "overall", overall_at + 1);
            }

            std::string verdict_text;
            std::size_t meets_at = find_ci(body, "meets");
            if (meets_at != std::string::npos) {
                std::size_t line_end = body.find('\n', meets_at);
                if (line_end == std::string::npos) line_end = body.size();
                const std::string line = body.substr(meets_at, line_end - meets_at);
                std::size_t colon = line.rfind(':');
                if (colon != std::string::npos) verdict_text = line.substr(colon + 1);
            }
            auto fields = labelled_fields(body, {"reasoning"});
            consider(segment.index, verdict_text,
                     fields.count("reasoning") ? fields["reasoning"] : "");
        }
        if (structure_seen && overall.empty()) {
            std::size_t overall_at = find_ci(raw, "overall");
            while (overall_at != std::string::npos) {
                std::size_t line_end = raw.find('\n', overall_at);
                if (line_end == std::string::npos) line_end = raw.size();
                const std::string line = raw.substr(overall_at, line_end - overall_at);
                std::size_t colon = line.find(':');
                if (find_ci(line, "feedback") != std::string::npos && colon != std::string::npos) {
                    std::string rest = line.substr(colon + 1) + "\n" + raw.substr(line_end);
                    while (!rest.empty() && (rest.back() == '}' || std::isspace(static_cast<unsigned char>(rest.back()))))
                        rest.pop_back();
                    overall = trim(rest);
                    break;
                }
                overall_at = find_ci(raw, "overall", overall_at + 1);
            }
        }
    }

    if (!structure_seen)
        throw ParseError("no per-suggestion feedback structure recognized", 0);

    for (int i = 1; i <= n; ++i) {
        auto it = found.find(i);
        if (it != found.end())
            out.verdicts.push_back(it->second);
        else
            out.verdicts.push_back({i, Verdict::unparseable, ""});
    }
    out.overall_feedback = trim(overall);
    return out;
}

std::vector<std::string> parse_experts_list(const std::string& raw) {
    std::vector<std::string> names;
    for (const auto& part : split(raw, ',')) {
        std::string name = trim(part);
        while (!name.empty() && (name.back() == '.' || name.back() == '"')) name.pop_back();
        while (!name.empty() && name.front() == '"') name.erase(name.begin());
        name = trim(name);
        if (!name.empty()) names.push_back(name);
    }
    if (names.size() < 3 || names.size() > 7)
        throw ParseError("expected 3..7 expert names, got " + std::to_string(names.size()),
                         names.size());
    return names;
}

FeedbackSummary parse_summary(const std::string& raw) {
    std::string text = trim(raw);
    if (text.empty()) throw ParseError("summarizer returned empty text", 0);
    return {std::move(text)};
}

nlohmann::json hypotheses_to_json(const HypothesisSet& set) {
    json doc = json::object();
    for (const auto& h : set.items) {
        doc["Suggestion_" + std::to_string(h.index)] = {
            {"Materials", h.materials}, {"Methods", h.methods}, {"Reasoning", h.reasoning}};
    }
    return doc;
}

std::string hypotheses_to_prompt_text(const HypothesisSet& set) {
    std::string out;
    for (const auto& h : set.items) {
        out += "Suggestion " + std::to_string(h.index) + ":\n";
        out += "Materials: " + h.materials + "\n";
        out += "Methods: " + h.methods + "\n";
        out += "Reasoning: " + h.reasoning + "\n\n";
    }
    if (!out.empty()) out.pop_back();  // single trailing newline
    return out;
}

}  // namespace accelmat
