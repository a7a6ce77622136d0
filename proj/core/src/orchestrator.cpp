#include "accelmat/orchestrator.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <thread>

#include "internal/text.hpp"

namespace accelmat {

const char* to_string(PipelineMode mode) {
    switch (mode) {
        case PipelineMode::baseline_no_feedback: return "baseline_no_feedback";
        case PipelineMode::feedback: return "feedback";
        default: return "feedback_kg";
    }
}

PipelineMode pipeline_mode_from_string(const std::string& s) {
    if (s == "baseline_no_feedback" || s == "baseline") return PipelineMode::baseline_no_feedback;
    if (s == "feedback") return PipelineMode::feedback;
    if (s == "feedback_kg") return PipelineMode::feedback_kg;
    throw ConfigError("unknown pipeline mode: \"" + s + "\"");
}

const char* to_string(LoopOrder order) {
    return order == LoopOrder::check_then_refine ? "check_then_refine" : "refine_then_check";
}

LoopOrder loop_order_from_string(const std::string& s) {
    if (s == "check_then_refine") return LoopOrder::check_then_refine;
    if (s == "refine_then_check") return LoopOrder::refine_then_check;
    throw ConfigError("unknown loop order: \"" + s + "\"");
}

const char* to_string(FinalFilter filter) {
    return filter == FinalFilter::agreed_only ? "agreed_only" : "full_set";
}

FinalFilter final_filter_from_string(const std::string& s) {
    if (s == "agreed_only") return FinalFilter::agreed_only;
    if (s == "full_set") return FinalFilter::full_set;
    throw ConfigError("unknown final filter: \"" + s + "\"");
}

FinalFilter PipelineConfig::effective_final_filter() const {
    if (mode == PipelineMode::baseline_no_feedback) return FinalFilter::agreed_only;
    return final_filter.value_or(FinalFilter::full_set);
}

void PipelineConfig::validate() const {
    if (n_suggestions < 1) throw ConfigError("n_suggestions must be >= 1");
    if (max_cycles < 0) throw ConfigError("max_cycles must be >= 0");
    if (critic_count < 1) throw ConfigError("critic_count must be >= 1");
    if (kg_top_k < 1) throw ConfigError("kg_top_k must be >= 1");
    if (generation_retries < 0) throw ConfigError("generation_retries must be >= 0");
}

namespace {

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

HypothesisSet filter_agreed(const HypothesisSet& set, const ConsensusResult& agreed) {
    HypothesisSet out;
    out.cycle = set.cycle;
    for (const auto& h : set.items)
        for (int idx : agreed.agreed_indices)
            if (h.index == idx) {
                out.items.push_back(h);
                break;
            }
    return out;
}

std::size_t count_unparseable(const CriticVerdictSet& set) {
    std::size_t n = 0;
    for (const auto& v : set.verdicts)
        if (v.meets == Verdict::unparseable) ++n;
    return n;
}

CriticVerdictSet all_unparseable(RoleTag critic, int n) {
    CriticVerdictSet set;
    set.critic_id = critic;
    for (int i = 1; i <= n; ++i) set.verdicts.push_back({i, Verdict::unparseable, ""});
    return set;
}

struct CriticPassResult {
    std::vector<CriticVerdictSet> verdicts;
    std::vector<std::string> raw_texts;
};

class Runner {
public:
    Runner(const DesignTask& task, const PipelineConfig& config, const AgentRoster& roster,
           const KGStore* kg_store, const RetryPolicy& retry, const PromptKit& kit)
        : task_(task), config_(config), roster_(roster), kg_store_(kg_store), retry_(retry),
          kit_(kit) {}

    RunTrace run() {
        trace_.task_id = task_.id;
        trace_.config = config_;
        trace_.config.final_filter = config_.effective_final_filter();
        trace_.started_at = now_iso8601();
        try {
            config_.validate();
            if (config_.mode == PipelineMode::feedback_kg && kg_store_ == nullptr)
                throw ConfigError("feedback_kg mode requires a knowledge-graph store");
            if (roster_.critics.size() < static_cast<std::size_t>(config_.critic_count))
                throw ConfigError("roster binds " + std::to_string(roster_.critics.size()) +
                                  " critics, config needs " + std::to_string(config_.critic_count));
            execute();
        } catch (const Error& e) {
            trace_.errors.push_back({cycle_, seat_, e.what()});
            trace_.stop_reason = "error";
            finish();
            throw PipelineError(e.what(), trace_);
        }
        finish();
        return trace_;
    }

private:
    void finish() {
        trace_.finished_at = now_iso8601();
        trace_.calls = log_.snapshot();
    }

    std::string call_seat(const SeatBinding& seat, RoleTag tag,
                          const std::optional<std::string>& system, const std::string& user,
                          CallLog* local = nullptr) {
        ChatRequest request{tag, system, user, seat.model_id, seat.sampling};
        return complete(request, *seat.backend, retry_, local ? local : &log_).text;
    }

    void execute() {
        seat_ = "experts_finder";
        const std::string experts_raw = call_seat(roster_.experts_finder, RoleTag::experts_finder,
                                                  std::nullopt,
                                                  kit_.render_experts_prompt(task_.goal));
        trace_.experts = parse_experts_list(experts_raw);
        trace_.system_prompt = PromptKit::build_system_prompt(trace_.experts);

        if (config_.mode == PipelineMode::feedback_kg) {
            seat_ = "keyword_extractor";
            trace_.kg_keywords =
                extract_keywords(task_, *roster_.keyword_extractor.backend,
                                 roster_.keyword_extractor.model_id, retry_, &log_);
            trace_.kg_context =
                format_context(query(*kg_store_, trace_.kg_keywords, config_.kg_top_k));
        }

        cycle_ = 0;
        HypothesisSet current = generate(0, nullptr, std::nullopt);

        if (config_.mode == PipelineMode::baseline_no_feedback) {
            run_baseline(current);
        } else if (config_.loop_order == LoopOrder::check_then_refine) {
            run_check_then_refine(current);
        } else {
            run_refine_then_check(current);
        }
    }

    void run_baseline(const HypothesisSet& set) {
        auto pass = critic_pass(set);
        ConsensusResult agreed = consensus(pass.verdicts, config_.n_suggestions);
        trace_.history.push_back({0, set, pass.verdicts, agreed, std::nullopt});
        trace_.final_agreed = agreed;
        trace_.final_set = filter_agreed(set, agreed);  // filter forced to agreed_only
        trace_.stop_reason = "baseline_single_pass";
    }

    void run_check_then_refine(HypothesisSet current) {
        int refinements = 0;
        for (;;) {
            cycle_ = current.cycle;
            auto pass = critic_pass(current);
            ConsensusResult agreed = consensus(pass.verdicts, config_.n_suggestions);
            CycleRecord record{current.cycle, current, pass.verdicts, agreed, std::nullopt};

            if (agreed.unanimous || refinements == config_.max_cycles) {
                trace_.history.push_back(std::move(record));
                trace_.final_agreed = agreed;
                trace_.stop_reason = agreed.unanimous ? "unanimous" : "budget_exhausted";
                break;
            }
            const std::string summary = summarize(pass.raw_texts);
            record.summary = summary;
            trace_.history.push_back(std::move(record));
            current = generate(current.cycle + 1, &trace_.history.back().hypotheses, summary);
            ++refinements;
        }
        finalize_from(trace_.history.back().hypotheses);
    }

    void run_refine_then_check(HypothesisSet current) {
        int refinements = 0;
        for (;;) {
            cycle_ = current.cycle;
            auto pass = critic_pass(current);
            ConsensusResult agreed = consensus(pass.verdicts, config_.n_suggestions);
            CycleRecord record{current.cycle, current, pass.verdicts, agreed, std::nullopt};

            const bool initial = current.cycle == 0;
            if ((initial && agreed.unanimous) || refinements == config_.max_cycles) {
                trace_.history.push_back(std::move(record));
                trace_.final_agreed = agreed;
                trace_.stop_reason = agreed.unanimous ? "unanimous" : "budget_exhausted";
                finalize_from(trace_.history.back().hypotheses);
                return;
            }

            const std::string summary = summarize(pass.raw_texts);
            record.summary = summary;
            trace_.history.push_back(std::move(record));
            HypothesisSet refined =
                generate(current.cycle + 1, &trace_.history.back().hypotheses, summary);
            ++refinements;

            if (agreed.unanimous) {
                // Pseudocode order: the refined set ships without a critique of
                // its own once the pre-refinement consensus is unanimous.
                trace_.history.push_back(
                    {refined.cycle, refined, {}, std::nullopt, std::nullopt});
                trace_.final_agreed = agreed;
                trace_.stop_reason = "unanimous";
                finalize_from(refined);
                return;
            }
            current = std::move(refined);
        }
    }

    void finalize_from(const HypothesisSet& last) {
        if (trace_.config.final_filter == FinalFilter::agreed_only)
            trace_.final_set = filter_agreed(last, trace_.final_agreed);
        else
            trace_.final_set = last;
    }

    HypothesisSet generate(int cycle, const HypothesisSet* prior,
                           const std::optional<std::string>& summary) {
        cycle_ = cycle;
        seat_ = "generator";
        const GenerationMode gmode = config_.mode == PipelineMode::feedback_kg
                                         ? GenerationMode::kg
                                         : GenerationMode::baseline;
        std::optional<std::string> kg_ctx;
        if (config_.mode == PipelineMode::feedback_kg) kg_ctx = trace_.kg_context;
        const std::string prompt = kit_.render_generation_prompt(
            task_, gmode, config_.n_suggestions, kg_ctx, prior, summary);

        std::string last_reason;
        for (int attempt = 0; attempt <= config_.generation_retries; ++attempt) {
            const std::string raw =
                call_seat(roster_.generator, RoleTag::generator, trace_.system_prompt, prompt);
            try {
                return parse_hypotheses(raw, config_.n_suggestions, cycle);
            } catch (const ParseError& e) {
                last_reason = e.reason();
            }
        }
        throw BudgetExhausted("generator output unparseable after " +
                              std::to_string(config_.generation_retries + 1) + " attempts: " +
                              last_reason);
    }

    CriticPassResult critic_pass(const HypothesisSet& set) {
        seat_ = "critics";
        const std::string prompt = kit_.render_critic_prompt(task_, set, config_.n_suggestions);
        const int n = config_.n_suggestions;

        struct Outcome {
            CriticVerdictSet verdicts;
            std::string raw_text;
            std::vector<CallRecord> calls;
            std::string flag;
            std::exception_ptr fatal;
        };
        std::vector<Outcome> outcomes(static_cast<std::size_t>(config_.critic_count));

        // Fan out one thread per critic seat; the cycle barrier is the join.
        std::vector<std::thread> threads;
        for (int i = 0; i < config_.critic_count; ++i) {
            threads.emplace_back([&, i] {
                Outcome& out = outcomes[static_cast<std::size_t>(i)];
                CallLog local;
                const RoleTag tag = critic_role(static_cast<std::size_t>(i));
                const SeatBinding& seat = roster_.critics[static_cast<std::size_t>(i)];
                try {
                    out.raw_text = call_seat(seat, tag, std::nullopt, prompt, &local);
                    bool have_first = false;
                    CriticVerdictSet first;
                    try {
                        first = parse_critic_feedback(out.raw_text, n, tag);
                        have_first = true;
                    } catch (const ParseError& e) {
                        out.flag = e.reason();
                    }
                    const bool retry_needed =
                        config_.critic_reask_on_unparseable &&
                        (!have_first || count_unparseable(first) > 0);
                    if (retry_needed) {
                        const std::string raw2 = call_seat(seat, tag, std::nullopt, prompt, &local);
                        try {
                            CriticVerdictSet second = parse_critic_feedback(raw2, n, tag);
                            if (!have_first ||
                                count_unparseable(second) < count_unparseable(first)) {
                                first = std::move(second);
                                out.raw_text = raw2;
                                have_first = true;
                            }
                        } catch (const ParseError&) {
                        }
                    }
                    if (have_first) {
                        out.verdicts = std::move(first);
                        if (count_unparseable(out.verdicts) > 0 && out.flag.empty())
                            out.flag = std::to_string(count_unparseable(out.verdicts)) +
                                       " verdict(s) unparseable, counted as not agreed";
                    } else {
                        out.verdicts = all_unparseable(tag, n);
                        out.flag = "critic output unparseable, all verdicts counted as not "
                                   "agreed: " + out.flag;
                    }
                } catch (...) {
                    out.fatal = std::current_exception();
                }
                out.calls = local.snapshot();
            });
        }
        for (auto& t : threads) t.join();

        // Merge per-seat call records in roster order to keep traces stable.
        for (const auto& out : outcomes)
            for (const auto& record : out.calls) log_.append(record);

        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            if (outcomes[i].fatal) {
                seat_ = to_string(critic_role(i));
                std::rethrow_exception(outcomes[i].fatal);
            }
        }

        CriticPassResult result;
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            if (!outcomes[i].flag.empty())
                trace_.errors.push_back({cycle_, to_string(critic_role(i)), outcomes[i].flag});
            result.verdicts.push_back(std::move(outcomes[i].verdicts));
            result.raw_texts.push_back(std::move(outcomes[i].raw_text));
        }
        return result;
    }

    std::string summarize(const std::vector<std::string>& critic_raw_texts) {
        seat_ = "summarizer";
        const std::string prompt = kit_.render_summarizer_prompt(
            critic_raw_texts, static_cast<std::size_t>(config_.critic_count));
        const std::string raw =
            call_seat(roster_.summarizer, RoleTag::summarizer, std::nullopt, prompt);
        return parse_summary(raw).text;
    }

    const DesignTask& task_;
    const PipelineConfig& config_;
    const AgentRoster& roster_;
    const KGStore* kg_store_;
    const RetryPolicy& retry_;
    const PromptKit& kit_;
    RunTrace trace_;
    CallLog log_;
    int cycle_ = -1;
    std::string seat_ = "setup";
};

}  // namespace

RunTrace run_pipeline(const DesignTask& task, const PipelineConfig& config,
                      const AgentRoster& roster, const KGStore* kg_store,
                      const RetryPolicy& retry, const PromptKit* kit) {
    static const PromptKit default_kit;
    Runner runner(task, config, roster, kg_store, retry, kit ? *kit : default_kit);
    return runner.run();
}

std::vector<BatchResult> run_batch(const std::vector<DesignTask>& tasks,
                                   const PipelineConfig& config,
                                   const std::function<AgentRoster(const DesignTask&)>& roster_for,
                                   const KGStore* kg_store, int parallelism,
                                   const RetryPolicy& retry) {
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    std::vector<BatchResult> results(tasks.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const DesignTask& task = tasks[i];
            try {
                AgentRoster roster = roster_for(task);
                results[i] = {task.id, run_pipeline(task, config, roster, kg_store, retry), ""};
            } catch (const PipelineError& e) {
                results[i] = {task.id, e.partial_trace(), e.what()};
            } catch (const std::exception& e) {
                results[i] = {task.id, std::nullopt, e.what()};
            }
        }
    };

    const std::size_t pool =
        std::min(static_cast<std::size_t>(parallelism), std::max<std::size_t>(tasks.size(), 1));
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < pool; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    return results;
}

}  // namespace accelmat
