#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "accelmat/agent_io.hpp"
#include "accelmat/dataset.hpp"

namespace accelmat {

enum class TemplateName {
    experts_finder,
    generation_baseline,
    generation_with_feedback,
    generation_with_kg,
    critic,
    summarizer,
    eval_closeness,
    eval_quality,
};

const char* to_string(TemplateName name);

enum class GenerationMode { baseline, feedback, kg };
enum class EvalKind { closeness, quality };

/// Renders the pipeline's prompt templates. Template bodies are the verbatim
/// prompt texts (bundled copies compiled in; an asset directory with one UTF-8
/// file per template name may override them). Placeholders use {{name}}.
class PromptKit {
public:
    /// Compiled-in template bodies.
    PromptKit();

    /// Loads <name>.txt for every template from `asset_dir`.
    explicit PromptKit(const std::string& asset_dir);

    const std::string& body(TemplateName name) const;

    std::string render_experts_prompt(const std::string& goal) const;

    /// Cycle-0 prompts use the baseline or KG form; refinement prompts
    /// (prior_set and feedback_summary both given) wrap the same base and
    /// append the prior suggestions and the summarized critic feedback.
    std::string render_generation_prompt(
        const DesignTask& task, GenerationMode mode, int n,
        const std::optional<std::string>& kg_context = std::nullopt,
        const HypothesisSet* prior_set = nullptr,
        const std::optional<std::string>& feedback_summary = std::nullopt) const;

    std::string render_critic_prompt(const DesignTask& task, const HypothesisSet& hypotheses,
                                     int n = 0) const;

    /// One feedback text per configured critic seat; ArityMismatch otherwise.
    std::string render_summarizer_prompt(const std::vector<std::string>& feedbacks,
                                         std::size_t configured_critics = 3) const;

    /// Closeness embeds the rubric plus the task's ground truth; quality embeds
    /// the six-criterion rubric and no ground truth. `structured_trailer`
    /// appends the machine-readable score-block instruction (dropped by
    /// paper-faithful runs).
    std::string render_eval_prompt(EvalKind kind, const DesignTask& task,
                                   const HypothesisSet& hypotheses,
                                   bool structured_trailer = true) const;

    /// "You are an innovative <experts, comma-joined> capable of doing
    /// impactful materials discovery and design."
    static std::string build_system_prompt(const std::vector<std::string>& experts);

    /// Numbered constraint block: "1) ...\n2) ..."
    static std::string format_constraints(const std::vector<std::string>& constraints);

private:
    void validate_templates() const;

    std::map<TemplateName, std::string> bodies_;
};

/// Instruction appended to evaluation prompts requesting a trailing JSON score
/// block; exposed so the parser and tests agree on the contract.
std::string structured_score_trailer(EvalKind kind);

}  // namespace accelmat
