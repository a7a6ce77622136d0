#include "accelmat/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "accelmat/errors.hpp"
#include "internal/json_scan.hpp"
#include "internal/text.hpp"

namespace accelmat {

using nlohmann::json;
using namespace internal;

double quality_mean(const QualityScore& s) {
    return (s.alignment + s.plausibility + s.novelty + s.testability + s.feasibility + s.impact) /
           6.0;
}

double closeness_mean(const ClosenessScore& s) {
    return (s.concept_overlap + s.property_overlap + s.keyword_matching) / 3.0;
}

namespace {

template <typename Score, typename MeanFn>
std::vector<int> rank_impl(const std::vector<Score>& scores, MeanFn mean) {
    std::vector<std::pair<double, int>> keyed;
    for (const auto& s : scores) keyed.push_back({mean(s), s.index});
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<int> out;
    for (const auto& [m, index] : keyed) out.push_back(index);
    return out;
}

}  // namespace

std::vector<int> rank_by_mean(const std::vector<ClosenessScore>& scores) {
    return rank_impl(scores, closeness_mean);
}

std::vector<int> rank_by_mean(const std::vector<QualityScore>& scores) {
    return rank_impl(scores, quality_mean);
}

const std::vector<RubricCriterion>& closeness_criteria() {
    static const std::vector<RubricCriterion> criteria = {
        {"Concept Overlap", "Concept_Overlap"},
        {"Property Overlap", "Property_Overlap"},
        {"Keyword Matching", "Keyword_Matching"},
    };
    return criteria;
}

const std::vector<RubricCriterion>& quality_criteria() {
    static const std::vector<RubricCriterion> criteria = {
        {"Alignment with Research Objectives and Constraints", "Alignment"},
        {"Scientific Plausibility", "Scientific_Plausibility"},
        {"Innovation and Novelty", "Innovation_and_Novelty"},
        {"Testability", "Testability"},
        {"Feasibility and Scalability", "Feasibility_and_Scalability"},
        {"Impact Potential", "Impact_Potential"},
    };
    return criteria;
}

namespace {

void check_range(int value, int index, const std::string& criterion) {
    if (value < 1 || value > 5)
        throw ScoreParseError("score " + std::to_string(value) + " for suggestion " +
                                  std::to_string(index) + " criterion \"" + criterion +
                                  "\" outside [1,5]",
                              index, criterion);
}

/// Positions of "Suggestion <k>" mentions that head a segment (no colon
/// required: final rankings list bare "Suggestion 7" lines).
struct Mention {
    std::size_t start;
    std::size_t body_from;
    int index;
};

std::vector<Mention> suggestion_mentions(const std::string& text) {
    std::vector<Mention> mentions;
    std::size_t pos = 0;
    while ((pos = find_ci(text, "suggestion", pos)) != std::string::npos) {
        const std::size_t start = pos;
        if (start > 0 && std::isalnum(static_cast<unsigned char>(text[start - 1]))) {
            ++pos;
            continue;
        }
        std::size_t p = start + 10;
        while (p < text.size() && (text[p] == ' ' || text[p] == '_' || text[p] == '#')) ++p;
        std::size_t digits = p;
        while (digits < text.size() && std::isdigit(static_cast<unsigned char>(text[digits])))
            ++digits;
        if (digits > p) {
            int index = std::stoi(text.substr(p, digits - p));
            std::size_t body = digits;
            if (body < text.size() && text[body] == ':') ++body;
            mentions.push_back({start, body, index});
            pos = digits;
        } else {
            ++pos;
        }
    }
    return mentions;
}

/// Reads an integer score right after a criterion-name occurrence, accepting
/// "(N - Label)", ": N", ": Score: N" and "Score: N (Label)" forms.
std::optional<int> score_after(const std::string& text, std::size_t pos) {
    std::size_t p = pos;
    auto skip_sep = [&] {
        while (p < text.size() && (text[p] == ' ' || text[p] == ':' || text[p] == '\t' ||
                                   text[p] == '*' || text[p] == '-'))
            ++p;
    };
    skip_sep();
    if (find_ci(text.substr(p, 5), "score") == 0) {
        p += 5;
        skip_sep();
    }
    if (p < text.size() && text[p] == '(') {
        ++p;
        skip_sep();
    }
    if (p >= text.size() || !std::isdigit(static_cast<unsigned char>(text[p])))
        return std::nullopt;
    std::size_t digits = p;
    while (digits < text.size() && std::isdigit(static_cast<unsigned char>(text[digits])))
        ++digits;
    // Reject decimals and multi-char run-ons like years.
    if (digits < text.size() && text[digits] == '.' &&
        digits + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[digits + 1])))
        return std::nullopt;
    if (digits - p > 2) return std::nullopt;
    return std::stoi(text.substr(p, digits - p));
}

std::map<int, std::map<std::string, int>> scores_from_trailer(
    const std::string& raw, const std::vector<RubricCriterion>& criteria) {
    std::map<int, std::map<std::string, int>> result;
    auto spans = balanced_object_spans(raw);
    for (auto it = spans.rbegin(); it != spans.rend(); ++it) {
        json doc = json::parse(*it, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) continue;
        const json* scores = nullptr;
        for (auto field = doc.begin(); field != doc.end(); ++field)
            if (normalize_key(field.key()) == "scores" && field.value().is_array())
                scores = &field.value();
        if (!scores) continue;

        for (const auto& entry : *scores) {
            if (!entry.is_object()) continue;
            int index = -1;
            std::map<std::string, int> values;
            for (auto field = entry.begin(); field != entry.end(); ++field) {
                const std::string key = normalize_key(field.key());
                if (key == "suggestion" || key == "index") {
                    if (field.value().is_number_integer()) index = field.value().get<int>();
                    else if (field.value().is_string()) {
                        const std::string digits = normalize_key(field.value().get<std::string>());
                        std::string numeric;
                        for (char c : digits)
                            if (std::isdigit(static_cast<unsigned char>(c))) numeric += c;
                        if (!numeric.empty()) index = std::stoi(numeric);
                    }
                    continue;
                }
                for (const auto& criterion : criteria) {
                    if (key == normalize_key(criterion.json_key) ||
                        key == normalize_key(criterion.prose_name)) {
                        if (field.value().is_number_integer()) {
                            values[criterion.prose_name] = field.value().get<int>();
                        } else if (field.value().is_string()) {
                            const std::string text = field.value().get<std::string>();
                            if (!text.empty() &&
                                std::all_of(text.begin(), text.end(), [](unsigned char c) {
                                    return std::isdigit(c);
                                }))
                                values[criterion.prose_name] = std::stoi(text);
                        }
                        break;
                    }
                }
            }
            if (index >= 1 && !values.empty()) {
                for (const auto& [criterion, value] : values) {
                    check_range(value, index, criterion);
                    result[index][criterion] = value;
                }
            }
        }
        if (!result.empty()) return result;
    }
    return result;
}

}  // namespace

std::map<int, std::map<std::string, int>> extract_rubric_scores(
    const std::string& raw, const std::vector<RubricCriterion>& criteria) {
    auto from_trailer = scores_from_trailer(raw, criteria);
    if (!from_trailer.empty()) return from_trailer;

    std::map<int, std::map<std::string, int>> result;
    const auto mentions = suggestion_mentions(raw);
    for (std::size_t m = 0; m < mentions.size(); ++m) {
        const std::size_t end = (m + 1 < mentions.size()) ? mentions[m + 1].start : raw.size();
        const std::string segment = raw.substr(mentions[m].body_from,
                                               end - mentions[m].body_from);
        for (const auto& criterion : criteria) {
            std::optional<int> best;
            std::size_t pos = 0;
            while ((pos = find_ci(segment, criterion.prose_name, pos)) != std::string::npos) {
                if (auto score = score_after(segment, pos + criterion.prose_name.size()))
                    best = score;  // last occurrence in the segment wins
                pos += criterion.prose_name.size();
            }
            if (best) {
                check_range(*best, mentions[m].index, criterion.prose_name);
                result[mentions[m].index][criterion.prose_name] = *best;
            }
        }
    }
    return result;
}

std::map<int, std::string> extract_rationales(const std::string& raw) {
    std::map<int, std::string> rationales;
    const auto mentions = suggestion_mentions(raw);
    for (std::size_t m = 0; m < mentions.size(); ++m) {
        const std::size_t end = (m + 1 < mentions.size()) ? mentions[m + 1].start : raw.size();
        std::string body = trim(raw.substr(mentions[m].body_from, end - mentions[m].body_from));
        if (!body.empty() && !rationales.count(mentions[m].index))
            rationales[mentions[m].index] = std::move(body);
    }
    return rationales;
}

std::vector<ClosenessScore> parse_closeness_scores(const std::string& raw,
                                                   const std::vector<int>& indices) {
    const auto scores = extract_rubric_scores(raw, closeness_criteria());
    auto rationales = extract_rationales(raw);
    std::vector<ClosenessScore> out;
    for (int index : indices) {
        auto it = scores.find(index);
        for (const auto& criterion : closeness_criteria())
            if (it == scores.end() || !it->second.count(criterion.prose_name))
                throw ScoreParseError("no score for suggestion " + std::to_string(index) +
                                          " criterion \"" + criterion.prose_name + "\"",
                                      index, criterion.prose_name);
        ClosenessScore s;
        s.index = index;
        s.concept_overlap = it->second.at("Concept Overlap");
        s.property_overlap = it->second.at("Property Overlap");
        s.keyword_matching = it->second.at("Keyword Matching");
        s.rationale = rationales.count(index) ? rationales[index] : "";
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<QualityScore> parse_quality_scores(const std::string& raw,
                                               const std::vector<int>& indices) {
    const auto scores = extract_rubric_scores(raw, quality_criteria());
    auto rationales = extract_rationales(raw);
    std::vector<QualityScore> out;
    for (int index : indices) {
        auto it = scores.find(index);
        for (const auto& criterion : quality_criteria())
            if (it == scores.end() || !it->second.count(criterion.prose_name))
                throw ScoreParseError("no score for suggestion " + std::to_string(index) +
                                          " criterion \"" + criterion.prose_name + "\"",
                                      index, criterion.prose_name);
        QualityScore s;
        s.index = index;
        s.alignment = it->second.at("Alignment with Research Objectives and Constraints");
        s.plausibility = it->second.at("Scientific Plausibility");
        s.novelty = it->second.at("Innovation and Novelty");
        s.testability = it->second.at("Testability");
        s.feasibility = it->second.at("Feasibility and Scalability");
        s.impact = it->second.at("Impact Potential");
        s.rationale = rationales.count(index) ? rationales[index] : "";
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

std::vector<int> item_indices(const HypothesisSet& set) {
    std::vector<int> indices;
    for (const auto& h : set.items) indices.push_back(h.index);
    return indices;
}

std::string call_evaluator(const SeatBinding& evaluator, const std::string& prompt,
                           const RetryPolicy& retry, CallLog* log) {
    ChatRequest request;
    request.role_tag = RoleTag::evaluator;
    request.user = prompt;
    request.model_id = evaluator.model_id;
    request.sampling = evaluator.sampling;
    return complete(request, *evaluator.backend, retry, log).text;
}

}  // namespace

std::vector<ClosenessScore> evaluate_closeness(const DesignTask& task,
                                               const HypothesisSet& hypotheses,
                                               const SeatBinding& evaluator, const PromptKit& kit,
                                               const EvalOptions& options,
                                               const RetryPolicy& retry, CallLog* log) {
    const std::string prompt =
        kit.render_eval_prompt(EvalKind::closeness, task, hypotheses, !options.paper_faithful);
    const auto indices = item_indices(hypotheses);
    std::string raw = call_evaluator(evaluator, prompt, retry, log);
    try {
        return parse_closeness_scores(raw, indices);
    } catch (const ScoreParseError&) {
        raw = call_evaluator(evaluator, prompt, retry, log);  // one automatic re-request
        return parse_closeness_scores(raw, indices);
    }
}

std::vector<QualityScore> evaluate_quality(const DesignTask& task,
                                           const HypothesisSet& hypotheses,
                                           const SeatBinding& evaluator, const PromptKit& kit,
                                           const EvalOptions& options, const RetryPolicy& retry,
                                           CallLog* log) {
    const std::string prompt =
        kit.render_eval_prompt(EvalKind::quality, task, hypotheses, !options.paper_faithful);
    const auto indices = item_indices(hypotheses);
    std::string raw = call_evaluator(evaluator, prompt, retry, log);
    try {
        return parse_quality_scores(raw, indices);
    } catch (const ScoreParseError&) {
        raw = call_evaluator(evaluator, prompt, retry, log);
        return parse_quality_scores(raw, indices);
    }
}

const char* to_string(EvalScope scope) {
    return scope == EvalScope::all_final ? "all_final" : "agreed_only";
}

EvalScope eval_scope_from_string(const std::string& s) {
    if (s == "all_final") return EvalScope::all_final;
    if (s == "agreed_only") return EvalScope::agreed_only;
    throw ConfigError("unknown evaluation scope: \"" + s + "\"");
}

AggregateReport aggregate(const std::vector<ScoreCard>& cards, EvalScope scope) {
    if (cards.empty()) throw EmptyPool("no scorecards to aggregate");

    // Integer sums keep the report exactly permutation-invariant.
    std::map<std::string, long long> sums;
    std::map<std::string, std::size_t> counts;
    long long closeness_sum = 0, quality_sum = 0;
    std::size_t closeness_count = 0, quality_count = 0;

    struct TaskAcc {
        long long closeness_sum = 0, quality_sum = 0;
        std::size_t closeness_scores = 0, quality_scores = 0;
        std::size_t closeness_hyps = 0, quality_hyps = 0;
    };
    std::map<std::string, TaskAcc> per_task;

    AggregateReport report;
    for (const auto& card : cards) {
        auto selected = [&](int index) {
            if (scope == EvalScope::all_final) return true;
            return std::find(card.agreed_indices.begin(), card.agreed_indices.end(), index) !=
                   card.agreed_indices.end();
        };
        TaskAcc& acc = per_task[card.task_id];
        for (const auto& s : card.closeness) {
            if (!selected(s.index)) continue;
            const std::pair<const char*, int> values[] = {
                {"concept_overlap", s.concept_overlap},
                {"property_overlap", s.property_overlap},
                {"keyword_matching", s.keyword_matching}};
            for (const auto& [key, value] : values) {
                sums[key] += value;
                ++counts[key];
                closeness_sum += value;
                ++closeness_count;
                acc.closeness_sum += value;
                ++acc.closeness_scores;
            }
            ++report.closeness_hypotheses;
            ++acc.closeness_hyps;
        }
        for (const auto& s : card.quality) {
            if (!selected(s.index)) continue;
            const std::pair<const char*, int> values[] = {
                {"alignment", s.alignment},   {"plausibility", s.plausibility},
                {"novelty", s.novelty},       {"testability", s.testability},
                {"feasibility", s.feasibility}, {"impact", s.impact}};
            for (const auto& [key, value] : values) {
                sums[key] += value;
                ++counts[key];
                quality_sum += value;
                ++quality_count;
                acc.quality_sum += value;
                ++acc.quality_scores;
            }
            ++report.quality_hypotheses;
            ++acc.quality_hyps;
        }
    }

    if (closeness_count + quality_count == 0)
        throw EmptyPool("scope selection left nothing to aggregate");

    for (const auto& [key, sum] : sums) {
        report.criterion_means[key] = static_cast<double>(sum) / static_cast<double>(counts[key]);
        report.criterion_counts[key] = counts[key];
    }
    if (closeness_count > 0)
        report.closeness_percent =
            100.0 * (static_cast<double>(closeness_sum) / static_cast<double>(closeness_count)) /
            5.0;
    if (quality_count > 0)
        report.quality_percent =
            100.0 * (static_cast<double>(quality_sum) / static_cast<double>(quality_count)) / 5.0;

    for (const auto& [task_id, acc] : per_task) {
        if (acc.closeness_scores + acc.quality_scores == 0) continue;
        AggregateReport::TaskRow row;
        row.task_id = task_id;
        if (acc.closeness_scores > 0)
            row.closeness_percent = 100.0 *
                                    (static_cast<double>(acc.closeness_sum) /
                                     static_cast<double>(acc.closeness_scores)) /
                                    5.0;
        if (acc.quality_scores > 0)
            row.quality_percent = 100.0 *
                                  (static_cast<double>(acc.quality_sum) /
                                   static_cast<double>(acc.quality_scores)) /
                                  5.0;
        row.closeness_hypotheses = acc.closeness_hyps;
        row.quality_hypotheses = acc.quality_hyps;
        report.per_task.push_back(std::move(row));
    }
    return report;
}

std::vector<AgreementRow> agreement_stats(const std::vector<RunTrace>& traces) {
    std::vector<AgreementRow> rows;
    if (traces.empty()) return rows;

    const int n = traces.front().config.n_suggestions;
    for (const auto& trace : traces)
        if (trace.config.n_suggestions != n)
            throw ArityMismatch("traces disagree on n_suggestions (" + std::to_string(n) +
                                " vs " + std::to_string(trace.config.n_suggestions) + ")");

    const PipelineMode order[] = {PipelineMode::baseline_no_feedback, PipelineMode::feedback,
                                  PipelineMode::feedback_kg};
    for (PipelineMode mode : order) {
        long long sum = 0;
        std::size_t count = 0;
        for (const auto& trace : traces) {
            if (trace.config.mode != mode) continue;
            sum += static_cast<long long>(trace.final_agreed.agreed_indices.size());
            ++count;
        }
        if (count > 0)
            rows.push_back({to_string(mode),
                            static_cast<double>(sum) / static_cast<double>(count), n, count});
    }
    return rows;
}

}  // namespace accelmat
