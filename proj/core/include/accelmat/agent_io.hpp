#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "accelmat/llm_gateway.hpp"

namespace accelmat {

struct Hypothesis {
    int index = 0;  // 1-based
    std::string materials;
    std::string methods;
    std::string reasoning;

    bool operator==(const Hypothesis&) const = default;
};

/// One generation cycle's suggestions, ordered by index.
struct HypothesisSet {
    int cycle = 0;
    std::vector<Hypothesis> items;

    bool operator==(const HypothesisSet&) const = default;
};

enum class Verdict { yes, no, unparseable };

const char* to_string(Verdict v);

struct CriticVerdict {
    int index = 0;
    Verdict meets = Verdict::unparseable;
    std::string reasoning;
};

struct CriticVerdictSet {
    RoleTag critic_id = RoleTag::critic_1;
    std::vector<CriticVerdict> verdicts;  // exactly one per hypothesis index
    std::string overall_feedback;
};

struct FeedbackSummary {
    std::string text;
};

/// Parses generator output into exactly n hypotheses. Accepts the JSON shape
/// the prompt demands (with lenient key spelling) as well as the labelled
/// plain-text layout models fall back to. Throws ParseError with the salvage
/// count when fewer than n complete entries can be recovered.
HypothesisSet parse_hypotheses(const std::string& raw, int n, int cycle);

/// Parses critic output into one verdict per index 1..n. YES/NO are matched
/// case-insensitively with punctuation tolerated; anything else is an explicit
/// `unparseable` verdict. Throws ParseError only when no per-suggestion
/// structure is recoverable at all.
CriticVerdictSet parse_critic_feedback(const std::string& raw, int n, RoleTag critic_id);

/// Splits a comma-separated experts list; 3..7 names accepted.
std::vector<std::string> parse_experts_list(const std::string& raw);

/// Whole response, trimmed; rejects empty.
FeedbackSummary parse_summary(const std::string& raw);

/// Canonical JSON shape: {"Suggestion_1": {"Materials": ..., "Methods": ...,
/// "Reasoning": ...}, ...}. Reparses to an equal set.
nlohmann::json hypotheses_to_json(const HypothesisSet& set);

/// Labelled plain-text layout used when embedding a set into a prompt.
std::string hypotheses_to_prompt_text(const HypothesisSet& set);

}  // namespace accelmat
