#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "accelmat/agent_io.hpp"
#include "accelmat/consensus.hpp"
#include "accelmat/dataset.hpp"
#include "accelmat/errors.hpp"
#include "accelmat/knowledge_graph.hpp"
#include "accelmat/llm_gateway.hpp"
#include "accelmat/prompt_kit.hpp"

namespace accelmat {

enum class PipelineMode { baseline_no_feedback, feedback, feedback_kg };

/// check_then_refine gates refinement on the current cycle's consensus (the
/// figure's flow); refine_then_check critiques, summarizes, refines and only
/// then tests the pre-refinement consensus (the pseudocode's literal order).
enum class LoopOrder { check_then_refine, refine_then_check };

enum class FinalFilter { agreed_only, full_set };

const char* to_string(PipelineMode mode);
PipelineMode pipeline_mode_from_string(const std::string& s);
const char* to_string(LoopOrder order);
LoopOrder loop_order_from_string(const std::string& s);
const char* to_string(FinalFilter filter);
FinalFilter final_filter_from_string(const std::string& s);

struct PipelineConfig {
    PipelineMode mode = PipelineMode::feedback;
    int n_suggestions = 20;
    int max_cycles = 5;  // refinement budget
    LoopOrder loop_order = LoopOrder::check_then_refine;
    std::optional<FinalFilter> final_filter;  // unset -> mode default
    int critic_count = 3;
    int kg_top_k = 10;
    int generation_retries = 2;  // regeneration attempts on parse failure
    bool critic_reask_on_unparseable = true;

    /// Baseline forces agreed_only; feedback modes default to full_set.
    FinalFilter effective_final_filter() const;
    void validate() const;
};

/// Backend + model a seat is bound to.
struct SeatBinding {
    std::shared_ptr<Backend> backend;
    std::string model_id;
    SamplingParams sampling;
};

struct AgentRoster {
    SeatBinding experts_finder;
    SeatBinding generator;
    std::vector<SeatBinding> critics;
    SeatBinding summarizer;
    SeatBinding evaluator;
    SeatBinding keyword_extractor;
};

/// One critique(-summarize-refine) iteration as recorded in the trace.
/// `verdicts` is empty only for a terminal refined set that was never
/// critiqued (refine_then_check stopping on the pre-refinement consensus).
struct CycleRecord {
    int cycle = 0;
    HypothesisSet hypotheses;
    std::vector<CriticVerdictSet> verdicts;
    std::optional<ConsensusResult> consensus;
    std::optional<std::string> summary;
};

struct TraceError {
    int cycle = -1;
    std::string seat;
    std::string message;
};

/// Complete, replayable record of one pipeline run.
struct RunTrace {
    std::string task_id;
    PipelineConfig config;
    std::vector<std::string> experts;
    std::string system_prompt;
    std::vector<std::string> kg_keywords;
    std::string kg_context;
    std::vector<CycleRecord> history;
    HypothesisSet final_set;
    ConsensusResult final_agreed;
    std::string stop_reason;  // unanimous | budget_exhausted | baseline_single_pass | error
    std::vector<CallRecord> calls;
    std::vector<TraceError> errors;
    std::string started_at;   // wall clock; excluded from determinism checks
    std::string finished_at;
};

/// Failure that carries the partially populated trace (errors recorded).
class PipelineError : public Error {
public:
    PipelineError(const std::string& message, RunTrace partial)
        : Error(message), partial_(std::move(partial)) {}

    const RunTrace& partial_trace() const { return partial_; }

private:
    RunTrace partial_;
};

RunTrace run_pipeline(const DesignTask& task, const PipelineConfig& config,
                      const AgentRoster& roster, const KGStore* kg_store = nullptr,
                      const RetryPolicy& retry = {}, const PromptKit* kit = nullptr);

struct BatchResult {
    std::string task_id;
    std::optional<RunTrace> trace;  // partial on failure
    std::string error;              // empty on success

    bool ok() const { return error.empty(); }
};

/// Runs every task through the pipeline on a bounded worker pool. Per-task
/// failures are isolated; results come back in task order.
std::vector<BatchResult> run_batch(const std::vector<DesignTask>& tasks,
                                   const PipelineConfig& config,
                                   const std::function<AgentRoster(const DesignTask&)>& roster_for,
                                   const KGStore* kg_store, int parallelism,
                                   const RetryPolicy& retry = {});

}  // namespace accelmat
