#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "accelmat/agent_io.hpp"
#include "accelmat/dataset.hpp"
#include "accelmat/orchestrator.hpp"
#include "accelmat/prompt_kit.hpp"

namespace accelmat {

struct ClosenessScore {
    int index = 0;
    int concept_overlap = 0;
    int property_overlap = 0;
    int keyword_matching = 0;
    std::string rationale;

    bool operator==(const ClosenessScore&) const = default;
};

struct QualityScore {
    int index = 0;
    int alignment = 0;
    int plausibility = 0;
    int novelty = 0;
    int testability = 0;
    int feasibility = 0;
    int impact = 0;
    std::string rationale;

    bool operator==(const QualityScore&) const = default;
};

/// Unweighted average of the six criterion scores.
double quality_mean(const QualityScore& score);

/// Mean of the three closeness criteria.
double closeness_mean(const ClosenessScore& score);

/// Suggestion indices ordered best-first by mean score; rankings are derived
/// locally from the scores, never parsed from judge prose. Ties break on the
/// lower index.
std::vector<int> rank_by_mean(const std::vector<ClosenessScore>& scores);
std::vector<int> rank_by_mean(const std::vector<QualityScore>& scores);

/// A rubric criterion as it appears in judge prose and in the structured
/// trailer's JSON keys.
struct RubricCriterion {
    std::string prose_name;
    std::string json_key;
};

const std::vector<RubricCriterion>& closeness_criteria();
const std::vector<RubricCriterion>& quality_criteria();

/// Pulls per-suggestion criterion scores out of a judge response. The trailing
/// JSON score block wins when present; otherwise prose patterns are scanned
/// ("<criterion> (N - Label)", "<criterion>: N", "<criterion>: Score: N"),
/// the last occurrence per suggestion/criterion winning so final rankings
/// override earlier mentions. Scores outside [1,5] raise ScoreParseError.
std::map<int, std::map<std::string, int>> extract_rubric_scores(
    const std::string& raw, const std::vector<RubricCriterion>& criteria);

/// Per-suggestion prose segments keyed by suggestion number (rationales).
std::map<int, std::string> extract_rationales(const std::string& raw);

std::vector<ClosenessScore> parse_closeness_scores(const std::string& raw,
                                                   const std::vector<int>& indices);
std::vector<QualityScore> parse_quality_scores(const std::string& raw,
                                               const std::vector<int>& indices);

struct EvalOptions {
    bool paper_faithful = false;  // drop the structured trailer, prose parse only
};

std::vector<ClosenessScore> evaluate_closeness(const DesignTask& task,
                                               const HypothesisSet& hypotheses,
                                               const SeatBinding& evaluator,
                                               const PromptKit& kit, const EvalOptions& options,
                                               const RetryPolicy& retry = {},
                                               CallLog* log = nullptr);

std::vector<QualityScore> evaluate_quality(const DesignTask& task,
                                           const HypothesisSet& hypotheses,
                                           const SeatBinding& evaluator, const PromptKit& kit,
                                           const EvalOptions& options,
                                           const RetryPolicy& retry = {}, CallLog* log = nullptr);

enum class EvalScope { all_final, agreed_only };

const char* to_string(EvalScope scope);
EvalScope eval_scope_from_string(const std::string& s);

/// One task+mode's evaluation results plus the agreement snapshot needed to
/// slice by scope.
struct ScoreCard {
    std::string task_id;
    std::string mode;
    int n_suggestions = 20;
    std::vector<int> agreed_indices;
    std::vector<ClosenessScore> closeness;
    std::vector<QualityScore> quality;
};

struct AggregateReport {
    std::map<std::string, double> criterion_means;       // canonical criterion key -> mean (1..5)
    std::map<std::string, std::size_t> criterion_counts;
    double closeness_percent = 0.0;  // 100 * pooled mean / 5
    double quality_percent = 0.0;
    std::size_t closeness_hypotheses = 0;
    std::size_t quality_hypotheses = 0;

    struct TaskRow {
        std::string task_id;
        double closeness_percent = 0.0;
        double quality_percent = 0.0;
        std::size_t closeness_hypotheses = 0;
        std::size_t quality_hypotheses = 0;
    };
    std::vector<TaskRow> per_task;
};

/// Pools every criterion score across the scope-selected hypotheses of every
/// card. EmptyPool when nothing survives selection.
AggregateReport aggregate(const std::vector<ScoreCard>& cards, EvalScope scope);

struct AgreementRow {
    std::string mode;
    double mean_agreed = 0.0;
    int n_suggestions = 0;
    std::size_t traces = 0;
};

/// Per-mode mean of |final_agreed| out of N. Traces must share N.
std::vector<AgreementRow> agreement_stats(const std::vector<RunTrace>& traces);

}  // namespace accelmat
