#include "accelmat/prompt_kit.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "accelmat/errors.hpp"
#include "internal/text.hpp"
#include "prompt_templates.hpp"

namespace accelmat {

using internal::trim;

namespace {

constexpr std::array<TemplateName, 8> kAllTemplates = {
    TemplateName::experts_finder,     TemplateName::generation_baseline,
    TemplateName::generation_with_feedback, TemplateName::generation_with_kg,
    TemplateName::critic,             TemplateName::summarizer,
    TemplateName::eval_closeness,     TemplateName::eval_quality,
};

const std::vector<std::string>& declared_placeholders(TemplateName name) {
    static const std::map<TemplateName, std::vector<std::string>> declared = {
        {TemplateName::experts_finder, {"goal"}},
        {TemplateName::generation_baseline, {"goal", "constraints", "n", "json_skeleton"}},
        {TemplateName::generation_with_feedback,
         {"base_prompt", "prior_suggestions", "feedback_summary"}},
        {TemplateName::generation_with_kg,
         {"goal", "constraints", "kg_context", "n", "json_skeleton"}},
        {TemplateName::critic,
         {"goal_statement", "constraint_list", "generated_suggestions", "feedback_skeleton"}},
        {TemplateName::summarizer, {"critic_feedback_blocks"}},
        {TemplateName::eval_closeness,
         {"ground_truth_materials", "ground_truth_methods", "goal", "constraints", "hypotheses"}},
        {TemplateName::eval_quality, {"goal", "constraints", "hypotheses"}},
    };
    return declared.at(name);
}

std::vector<std::string> placeholders_in(const std::string& body) {
    std::vector<std::string> found;
    std::size_t pos = 0;
    while ((pos = body.find("{{", pos)) != std::string::npos) {
        std::size_t end = body.find("}}", pos + 2);
        if (end == std::string::npos) {
            found.push_back(body.substr(pos));  // dangling opener, reported by caller
            break;
        }
        found.push_back(body.substr(pos + 2, end - pos - 2));
        pos = end + 2;
    }
    return found;
}

std::string substitute(std::string body,
                       const std::vector<std::pair<std::string, std::string>>& values) {
    for (const auto& [key, value] : values) {
        const std::string token = "{{" + key + "}}";
        std::size_t pos = body.find(token);
        if (pos == std::string::npos)
            throw ConfigError("template is missing placeholder {{" + key + "}}");
        body.replace(pos, token.size(), value);
    }
    return body;
}

const std::string kMaterialsMethodsLine =
    "    Materials: \"Give a comprehensive and detailed description of list of materials, along "
    "with their names and properties which achieve help the goal and satisfy all constraints\" "
    "Methods: \"Give detailed description of novel, innovative methods or techniques needed to "
    "develop the materials suggested\"\n";

std::string suggestion_block(int k, bool closing_variant) {
    std::string block = "Suggestion_" + std::to_string(k) + ":\n{\n";
    block += kMaterialsMethodsLine;
    if (closing_variant)
        block += "    Reasoning:\"Give a detailed reasoning for the suggestion\n}";
    else
        block += "    Reasoning: \"Give a detailed reasoning for the suggestion\"\n},";
    return block;
}

std::string make_json_skeleton(int n) {
    std::string out = "{\n";
    if (n == 1) {
        out += "Suggestion_1:\n{\n";
        out += kMaterialsMethodsLine;
        out += "    Reasoning: \"Give a detailed reasoning for the suggestion\"\n}\n    }";
        return out;
    }
    out += suggestion_block(1, false) + "\n";
    if (n > 2) out += "    ⋮\n";
    out += suggestion_block(n, true) + "\n    }";
    return out;
}

std::string feedback_entry(int k, bool trailing_comma) {
    std::string block = "\"Feedback_for_suggestion_" + std::to_string(k) + "\": \n{\n";
    block +=
        "            \"Meets_the_goal_statement_and_satisfies_all_constraints_strictly\": "
        "\"YES/NO\",\n";
    block += "            \"Reasoning\": \" \"\n}";
    if (trailing_comma) block += ",";
    return block;
}

std::string make_feedback_skeleton(int n) {
    std::string out = "{\n";
    if (n == 1) {
        out += feedback_entry(1, true) + "\n";
    } else {
        out += feedback_entry(1, false) + "\n";
        if (n > 2) out += "        ⋮\n";
        out += feedback_entry(n, true) + "\n";
    }
    out +=
        "\"Overall_Feedback_for_improvement_for_future_suggestion_generation\": (list of points "
        "in a single line)\n\n}";
    return out;
}

}  // namespace

const char* to_string(TemplateName name) {
    switch (name) {
        case TemplateName::experts_finder: return "experts_finder";
        case TemplateName::generation_baseline: return "generation_baseline";
        case TemplateName::generation_with_feedback: return "generation_with_feedback";
        case TemplateName::generation_with_kg: return "generation_with_kg";
        case TemplateName::critic: return "critic";
        case TemplateName::summarizer: return "summarizer";
        case TemplateName::eval_closeness: return "eval_closeness";
        case TemplateName::eval_quality: return "eval_quality";
    }
    return "?";
}

PromptKit::PromptKit() {
    for (TemplateName name : kAllTemplates) bodies_[name] = internal::builtin_template(name);
    validate_templates();
}

PromptKit::PromptKit(const std::string& asset_dir) {
    for (TemplateName name : kAllTemplates) {
        const std::string path = asset_dir + "/" + to_string(name) + ".txt";
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open template file: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        bodies_[name] = buf.str();
    }
    validate_templates();
}

void PromptKit::validate_templates() const {
    for (const auto& [name, body] : bodies_) {
        std::map<std::string, int> counts;
        for (const auto& token : placeholders_in(body)) ++counts[token];
        const auto& declared = declared_placeholders(name);
        for (const auto& key : declared) {
            auto it = counts.find(key);
            if (it == counts.end())
                throw ConfigError(std::string("template ") + to_string(name) +
                                  " lacks placeholder {{" + key + "}}");
            if (it->second != 1)
                throw ConfigError(std::string("template ") + to_string(name) + " placeholder {{" +
                                  key + "}} must appear exactly once");
            counts.erase(it);
        }
        if (!counts.empty())
            throw ConfigError(std::string("template ") + to_string(name) +
                              " has undeclared placeholder {{" + counts.begin()->first + "}}");
    }
}

const std::string& PromptKit::body(TemplateName name) const {
    return bodies_.at(name);
}

std::string PromptKit::format_constraints(const std::vector<std::string>& constraints) {
    std::string out;
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        if (i) out += "\n";
        out += std::to_string(i + 1) + ") " + constraints[i];
    }
    return out;
}

std::string PromptKit::build_system_prompt(const std::vector<std::string>& experts) {
    if (experts.empty()) throw EmptyField("experts list is empty");
    std::string joined;
    for (std::size_t i = 0; i < experts.size(); ++i) {
        if (i) joined += ", ";
        joined += experts[i];
    }
    return "You are an innovative " + joined +
           " capable of doing impactful materials discovery and design.";
}

std::string PromptKit::render_experts_prompt(const std::string& goal) const {
    if (trim(goal).empty()) throw EmptyField("goal is empty");
    return substitute(body(TemplateName::experts_finder), {{"goal", goal}});
}

std::string PromptKit::render_generation_prompt(
    const DesignTask& task, GenerationMode mode, int n,
    const std::optional<std::string>& kg_context, const HypothesisSet* prior_set,
    const std::optional<std::string>& feedback_summary) const {
    if (trim(task.goal).empty()) throw EmptyField("goal is empty");
    if (task.constraints.empty()) throw EmptyField("constraints are empty");
    for (const auto& c : task.constraints)
        if (trim(c).empty()) throw EmptyField("constraint entry is empty");
    if (n < 1) throw ConfigError("suggestion count must be >= 1");
    if (mode == GenerationMode::kg && !kg_context)
        throw MissingContext("kg mode requires a knowledge-graph context block");
    if ((prior_set != nullptr) != feedback_summary.has_value())
        throw MissingContext("refinement needs both the prior set and the feedback summary");

    const TemplateName base_name = (mode == GenerationMode::kg)
                                       ? TemplateName::generation_with_kg
                                       : TemplateName::generation_baseline;
    std::vector<std::pair<std::string, std::string>> values = {
        {"goal", task.goal},
        {"constraints", format_constraints(task.constraints)},
        {"n", std::to_string(n)},
        {"json_skeleton", make_json_skeleton(n)},
    };
    if (mode == GenerationMode::kg) values.push_back({"kg_context", *kg_context});
    std::string base = substitute(body(base_name), values);

    if (!prior_set) return base;
    return substitute(body(TemplateName::generation_with_feedback),
                      {{"base_prompt", base},
                       {"prior_suggestions", hypotheses_to_prompt_text(*prior_set)},
                       {"feedback_summary", *feedback_summary}});
}

std::string PromptKit::render_critic_prompt(const DesignTask& task,
                                            const HypothesisSet& hypotheses, int n) const {
    if (hypotheses.items.empty()) throw EmptyField("hypothesis set is empty");
    if (trim(task.goal).empty()) throw EmptyField("goal is empty");
    if (n <= 0) n = static_cast<int>(hypotheses.items.size());
    return substitute(body(TemplateName::critic),
                      {{"goal_statement", task.goal},
                       {"constraint_list", format_constraints(task.constraints)},
                       {"generated_suggestions", hypotheses_to_prompt_text(hypotheses)},
                       {"feedback_skeleton", make_feedback_skeleton(n)}});
}

std::string PromptKit::render_summarizer_prompt(const std::vector<std::string>& feedbacks,
                                                std::size_t configured_critics) const {
    if (feedbacks.size() != configured_critics)
        throw ArityMismatch("expected " + std::to_string(configured_critics) +
                            " critic feedback texts, got " + std::to_string(feedbacks.size()));
    std::string blocks;
    for (std::size_t i = 0; i < feedbacks.size(); ++i) {
        if (i) blocks += "\n\n";
        blocks += "Critic_" + std::to_string(i + 1) + " feedback: \n" + feedbacks[i];
    }
    return substitute(body(TemplateName::summarizer), {{"critic_feedback_blocks", blocks}});
}

std::string structured_score_trailer(EvalKind kind) {
    if (kind == EvalKind::closeness) {
        return "After the detailed evaluation and ranking, append one final machine-readable JSON "
               "object on its own lines, in exactly this format:\n"
               "{\"Scores\": [{\"Suggestion\": 1, \"Concept_Overlap\": 1, \"Property_Overlap\": 1, "
               "\"Keyword_Matching\": 1}]}\n"
               "Include one entry per suggested hypothesis, using its suggestion number and your "
               "integer scores from 1 to 5.";
    }
    return "After the detailed evaluation and ranking, append one final machine-readable JSON "
           "object on its own lines, in exactly this format:\n"
           "{\"Scores\": [{\"Suggestion\": 1, \"Alignment\": 1, \"Scientific_Plausibility\": 1, "
           "\"Innovation_and_Novelty\": 1, \"Testability\": 1, \"Feasibility_and_Scalability\": 1, "
           "\"Impact_Potential\": 1}]}\n"
           "Include one entry per suggested hypothesis, using its suggestion number and your "
           "integer scores from 1 to 5.";
}

std::string PromptKit::render_eval_prompt(EvalKind kind, const DesignTask& task,
                                          const HypothesisSet& hypotheses,
                                          bool structured_trailer) const {
    if (hypotheses.items.empty()) throw EmptyField("hypothesis set is empty");
    std::string rendered;
    if (kind == EvalKind::closeness) {
        if (!task.ground_truth)
            throw MissingGroundTruth("task \"" + task.id +
                                     "\" has no ground truth; closeness needs one");
        rendered = substitute(body(TemplateName::eval_closeness),
                              {{"ground_truth_materials", task.ground_truth->materials},
                               {"ground_truth_methods", task.ground_truth->methods},
                               {"goal", task.goal},
                               {"constraints", format_constraints(task.constraints)},
                               {"hypotheses", hypotheses_to_prompt_text(hypotheses)}});
    } else {
        rendered = substitute(body(TemplateName::eval_quality),
                              {{"goal", task.goal},
                               {"constraints", format_constraints(task.constraints)},
                               {"hypotheses", hypotheses_to_prompt_text(hypotheses)}});
    }
    if (structured_trailer) rendered += "\n" + structured_score_trailer(kind);
    return rendered;
}

}  // namespace accelmat
