#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "accelmat/cassette.hpp"
#include "accelmat/dataset.hpp"
#include "accelmat/errors.hpp"
#include "accelmat/evaluation.hpp"
#include "accelmat/http_backend.hpp"
#include "accelmat/knowledge_graph.hpp"
#include "accelmat/orchestrator.hpp"
#include "accelmat/report.hpp"
#include "accelmat/trace_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace accelmat;

namespace {

struct SeatSpec {
    std::string provider = "openai";
    std::string model_id = "gpt-4o";
};

/// Paper-preset seat bindings; every value is overridable via the config file.
struct RunnerConfig {
    PipelineConfig pipeline;
    SeatSpec experts_finder{"openai", "gpt-4o"};
    SeatSpec generator{"openai", "gpt-4o"};
    std::vector<SeatSpec> critic_seats = {{"openai", "gpt-4o"},
                                          {"anthropic", "claude-3-5-sonnet"},
                                          {"gemini", "gemini-1.5-flash"}};
    SeatSpec summarizer{"openai", "gpt-4o"};
    SeatSpec evaluator{"openai", "o1-preview"};
    SeatSpec keyword_extractor{"openai", "gpt-4o"};
    EvalScope scope = EvalScope::all_final;
    bool paper_faithful = false;
};

SeatSpec seat_from_json(const json& j, const SeatSpec& fallback) {
    SeatSpec spec = fallback;
    if (j.contains("provider")) spec.provider = j["provider"].get<std::string>();
    if (j.contains("model_id")) spec.model_id = j["model_id"].get<std::string>();
    return spec;
}

RunnerConfig load_runner_config(const std::string& path) {
    RunnerConfig config;
    if (path.empty()) return config;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("malformed config JSON: ") + e.what(), path);
    }
    if (doc.contains("mode"))
        config.pipeline.mode = pipeline_mode_from_string(doc["mode"].get<std::string>());
    if (doc.contains("n_suggestions")) config.pipeline.n_suggestions = doc["n_suggestions"];
    if (doc.contains("max_cycles")) config.pipeline.max_cycles = doc["max_cycles"];
    if (doc.contains("loop_order"))
        config.pipeline.loop_order = loop_order_from_string(doc["loop_order"].get<std::string>());
    if (doc.contains("final_filter"))
        config.pipeline.final_filter =
            final_filter_from_string(doc["final_filter"].get<std::string>());
    if (doc.contains("critic_count")) config.pipeline.critic_count = doc["critic_count"];
    if (doc.contains("kg_top_k")) config.pipeline.kg_top_k = doc["kg_top_k"];
    if (doc.contains("generation_retries"))
        config.pipeline.generation_retries = doc["generation_retries"];
    if (doc.contains("scope")) config.scope = eval_scope_from_string(doc["scope"].get<std::string>());
    if (doc.contains("paper_faithful")) config.paper_faithful = doc["paper_faithful"];
    if (doc.contains("experts_finder"))
        config.experts_finder = seat_from_json(doc["experts_finder"], config.experts_finder);
    if (doc.contains("generator"))
        config.generator = seat_from_json(doc["generator"], config.generator);
    if (doc.contains("summarizer"))
        config.summarizer = seat_from_json(doc["summarizer"], config.summarizer);
    if (doc.contains("evaluator"))
        config.evaluator = seat_from_json(doc["evaluator"], config.evaluator);
    if (doc.contains("keyword_extractor"))
        config.keyword_extractor =
            seat_from_json(doc["keyword_extractor"], config.keyword_extractor);
    if (doc.contains("critic_seats")) {
        config.critic_seats.clear();
        for (const auto& seat : doc["critic_seats"])
            config.critic_seats.push_back(seat_from_json(seat, SeatSpec{}));
    }
    return config;
}

std::string cassette_path(const std::string& dir, const std::string& task_id, PipelineMode mode) {
    return (fs::path(dir) / (task_id + "." + to_string(mode) + ".cassette.json")).string();
}

/// Live backends cached per provider so the rate limiter is shared.
class BackendPool {
public:
    std::shared_ptr<Backend> live(const std::string& provider) {
        auto it = cache_.find(provider);
        if (it != cache_.end()) return it->second;
        HttpBackend::Options options;
        options.provider = provider;
        auto backend = std::make_shared<HttpBackend>(options);
        cache_.emplace(provider, backend);
        return backend;
    }

private:
    std::map<std::string, std::shared_ptr<Backend>> cache_;
};

struct BackendSelection {
    std::string kind = "replay";  // live | record | replay
    std::string cassette_dir;
};

AgentRoster make_roster(const DesignTask& task, const RunnerConfig& config,
                        const BackendSelection& selection, BackendPool& pool) {
    auto bind = [&](const SeatSpec& spec,
                    const std::shared_ptr<Backend>& backend) -> SeatBinding {
        return {backend, spec.model_id, {}};
    };

    AgentRoster roster;
    if (selection.kind == "replay") {
        auto backend = ReplayBackend::from_file(
            cassette_path(selection.cassette_dir, task.id, config.pipeline.mode));
        roster.experts_finder = bind(config.experts_finder, backend);
        roster.generator = bind(config.generator, backend);
        for (const auto& seat : config.critic_seats) roster.critics.push_back(bind(seat, backend));
        roster.summarizer = bind(config.summarizer, backend);
        roster.evaluator = bind(config.evaluator, backend);
        roster.keyword_extractor = bind(config.keyword_extractor, backend);
        return roster;
    }

    std::shared_ptr<CassetteWriter> writer;
    if (selection.kind == "record")
        writer = std::make_shared<CassetteWriter>(
            cassette_path(selection.cassette_dir, task.id, config.pipeline.mode));

    auto backend_for = [&](const SeatSpec& spec) -> std::shared_ptr<Backend> {
        auto live = pool.live(spec.provider);
        if (writer) return std::make_shared<RecordingBackend>(live, writer);
        return live;
    };
    roster.experts_finder = bind(config.experts_finder, backend_for(config.experts_finder));
    roster.generator = bind(config.generator, backend_for(config.generator));
    for (const auto& seat : config.critic_seats)
        roster.critics.push_back(bind(seat, backend_for(seat)));
    roster.summarizer = bind(config.summarizer, backend_for(config.summarizer));
    roster.evaluator = bind(config.evaluator, backend_for(config.evaluator));
    roster.keyword_extractor = bind(config.keyword_extractor, backend_for(config.keyword_extractor));
    return roster;
}

HypothesisSet scoped_selection(const RunTrace& trace, EvalScope scope) {
    if (scope == EvalScope::all_final) return trace.final_set;
    HypothesisSet out;
    out.cycle = trace.final_set.cycle;
    for (const auto& h : trace.final_set.items)
        for (int idx : trace.final_agreed.agreed_indices)
            if (h.index == idx) {
                out.items.push_back(h);
                break;
            }
    return out;
}

int cmd_run(const std::string& dataset_path, const std::string& out_dir,
            const RunnerConfig& config, const BackendSelection& selection,
            const std::string& kg_snapshot, int parallelism) {
    auto tasks = load_tasks(dataset_path);
    config.pipeline.validate();
    if ((selection.kind == "replay" || selection.kind == "record") &&
        selection.cassette_dir.empty())
        throw ConfigError(selection.kind + " backend needs --cassettes");
    if (selection.kind == "record") fs::create_directories(selection.cassette_dir);

    KGStore store;
    const KGStore* store_ptr = nullptr;
    if (config.pipeline.mode == PipelineMode::feedback_kg) {
        if (kg_snapshot.empty()) throw ConfigError("feedback_kg mode needs --kg-snapshot");
        store = KGStore::ingest(kg_snapshot);
        store_ptr = &store;
    }

    BackendPool pool;
    auto roster_for = [&](const DesignTask& task) {
        return make_roster(task, config, selection, pool);
    };
    auto results = run_batch(tasks, config.pipeline, roster_for, store_ptr, parallelism);

    std::size_t failures = 0;
    for (const auto& result : results) {
        if (result.trace) write_trace(*result.trace, out_dir);
        if (!result.ok()) {
            ++failures;
            std::cerr << "task " << result.task_id << " failed: " << result.error << "\n";
        }
    }
    std::cout << results.size() - failures << "/" << results.size() << " tasks succeeded; traces in "
              << out_dir << "\n";
    return failures == 0 ? 0 : 1;
}

int cmd_evaluate(const std::string& traces_dir, const std::string& dataset_path,
                 const std::string& kind, const std::string& out_dir, const RunnerConfig& config,
                 const BackendSelection& selection) {
    auto tasks = load_tasks(dataset_path);
    std::map<std::string, const DesignTask*> by_id;
    for (const auto& task : tasks) by_id[task.id] = &task;

    auto traces = load_traces(traces_dir);
    if ((selection.kind == "replay" || selection.kind == "record") &&
        selection.cassette_dir.empty())
        throw ConfigError(selection.kind + " backend needs --cassettes");

    PromptKit kit;
    BackendPool pool;
    EvalOptions options{config.paper_faithful};
    std::size_t failures = 0, evaluated = 0;

    for (const auto& trace : traces) {
        auto it = by_id.find(trace.task_id);
        if (it == by_id.end()) {
            std::cerr << "trace " << trace.task_id << ": task not in dataset\n";
            ++failures;
            continue;
        }
        const DesignTask& task = *it->second;
        try {
            RunnerConfig trace_config = config;
            trace_config.pipeline.mode = trace.config.mode;
            AgentRoster roster = make_roster(task, trace_config, selection, pool);

            HypothesisSet selection_set = scoped_selection(trace, config.scope);
            ScoreCard card;
            card.task_id = trace.task_id;
            card.mode = to_string(trace.config.mode);
            card.n_suggestions = trace.config.n_suggestions;
            card.agreed_indices = trace.final_agreed.agreed_indices;
            if (selection_set.items.empty()) {
                std::cerr << "trace " << trace.task_id << " (" << card.mode
                          << "): scope selected no hypotheses, skipping\n";
            } else {
                if (kind == "closeness" || kind == "both")
                    card.closeness =
                        evaluate_closeness(task, selection_set, roster.evaluator, kit, options);
                if (kind == "quality" || kind == "both")
                    card.quality =
                        evaluate_quality(task, selection_set, roster.evaluator, kit, options);
                ++evaluated;
            }
            write_score_card(card, out_dir);
        } catch (const Error& e) {
            std::cerr << "trace " << trace.task_id << " (" << to_string(trace.config.mode)
                      << ") evaluation failed: " << e.what() << "\n";
            ++failures;
        }
    }
    std::cout << evaluated << " trace(s) evaluated; score files in " << out_dir << "\n";
    return failures == 0 ? 0 : 1;
}

int cmd_report(const std::string& in_dir, const std::string& out_dir, EvalScope scope) {
    auto traces = load_traces(in_dir);
    auto cards = load_score_cards(in_dir);

    std::map<std::string, std::vector<ScoreCard>> cards_by_mode;
    for (const auto& card : cards) cards_by_mode[card.mode].push_back(card);

    std::map<std::string, AggregateReport> by_mode;
    for (const auto& [mode, mode_cards] : cards_by_mode) {
        try {
            by_mode.emplace(mode, aggregate(mode_cards, scope));
        } catch (const EmptyPool&) {
            // mode evaluated but scope selected nothing; omit from the report
        }
    }

    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "report.csv", std::ios::binary | std::ios::trunc);
        out << report_csv(by_mode);
    }
    auto agreement = agreement_stats(traces);
    {
        std::ofstream out(fs::path(out_dir) / "agreement.csv", std::ios::binary | std::ios::trunc);
        out << agreement_csv(agreement);
    }
    {
        std::ofstream out(fs::path(out_dir) / "report.svg", std::ios::binary | std::ios::trunc);
        out << report_svg(by_mode);
    }

    for (const auto& row : agreement)
        std::cout << row.mode << ": " << row.mean_agreed << "/" << row.n_suggestions << "\n";
    for (const auto& [mode, report] : by_mode) {
        if (report.closeness_hypotheses > 0)
            std::cout << mode << " closeness: " << report.closeness_percent << "%\n";
        if (report.quality_hypotheses > 0)
            std::cout << mode << " quality: " << report.quality_percent << "%\n";
    }
    std::cout << "report files in " << out_dir << "\n";
    return 0;
}

int cmd_dataset_validate(const std::string& path, bool require_ground_truth) {
    auto tasks = load_tasks(path);
    std::size_t findings = 0;
    for (const auto& task : tasks) {
        auto report = validate_task(task, require_ground_truth);
        for (const auto& finding : report.findings) {
            std::cout << task.id << ": " << finding.field << ": " << finding.message << "\n";
            ++findings;
        }
    }
    std::cout << tasks.size() << " task(s), " << findings << " finding(s)\n";
    return findings == 0 ? 0 : 1;
}

int cmd_kg_ingest(const std::string& path) {
    KGStore store = KGStore::ingest(path);
    std::cout << "entities: " << store.entities().size() << ", edges: " << store.edges().size()
              << "\n";
    return 0;
}

int cmd_kg_query(const std::string& snapshot, const std::string& keywords_csv, int top_k) {
    KGStore store = KGStore::ingest(snapshot);
    auto keywords = parse_keywords(keywords_csv);
    KGContext context = query(store, keywords, top_k);
    std::cout << format_context(context);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AccelMat hypothesis-generation pipeline"};
    app.require_subcommand(1);

    std::string config_path, dataset_path, out_dir, traces_dir, kg_snapshot;
    std::string mode_flag, loop_order_flag, final_filter_flag, scope_flag, kind = "both";
    int n_flag = 0, max_cycles_flag = -1, parallelism = 1, top_k = 10;
    bool require_gt = false, paper_faithful = false;
    BackendSelection selection;

    auto add_backend_opts = [&](CLI::App* cmd) {
        cmd->add_option("--backend", selection.kind, "live | record | replay")
            ->check(CLI::IsMember({"live", "record", "replay"}))
            ->default_val("replay");
        cmd->add_option("--cassettes", selection.cassette_dir,
                        "cassette directory (record/replay)");
        cmd->add_option("--config", config_path, "pipeline config JSON");
    };
    auto add_override_opts = [&](CLI::App* cmd) {
        cmd->add_option("--mode", mode_flag, "baseline_no_feedback | feedback | feedback_kg");
        cmd->add_option("--n", n_flag, "suggestions per cycle");
        cmd->add_option("--max-cycles", max_cycles_flag, "refinement budget");
        cmd->add_option("--loop-order", loop_order_flag, "check_then_refine | refine_then_check");
        cmd->add_option("--final-filter", final_filter_flag, "agreed_only | full_set");
    };

    auto* run = app.add_subcommand("run", "execute the pipeline over a dataset");
    run->add_option("--dataset", dataset_path, "dataset JSONL")->required();
    run->add_option("--out", out_dir, "output directory for traces")->required();
    run->add_option("--kg-snapshot", kg_snapshot, "knowledge-graph TSV (feedback_kg mode)");
    run->add_option("--parallelism", parallelism, "worker pool size")->check(CLI::PositiveNumber);
    add_backend_opts(run);
    add_override_opts(run);

    auto* evaluate = app.add_subcommand("evaluate", "judge trace hypotheses");
    evaluate->add_option("--traces", traces_dir, "directory with trace files")->required();
    evaluate->add_option("--dataset", dataset_path, "dataset JSONL")->required();
    evaluate->add_option("--kind", kind, "closeness | quality | both")
        ->check(CLI::IsMember({"closeness", "quality", "both"}));
    evaluate->add_option("--out", out_dir, "output directory for score files");
    evaluate->add_option("--scope", scope_flag, "all_final | agreed_only");
    evaluate->add_flag("--paper-faithful", paper_faithful,
                       "verbatim prompts without the structured score trailer");
    add_backend_opts(evaluate);

    auto* report = app.add_subcommand("report", "aggregate scores and agreement stats");
    std::string report_dir;
    report->add_option("dir", report_dir, "directory with traces and score files")->required();
    report->add_option("--out", out_dir, "output directory (default: input dir)");
    report->add_option("--scope", scope_flag, "all_final | agreed_only");

    auto* dataset_cmd = app.add_subcommand("dataset", "dataset utilities");
    auto* validate = dataset_cmd->add_subcommand("validate", "check dataset invariants");
    std::string validate_path;
    validate->add_option("path", validate_path, "dataset JSONL")->required();
    validate->add_flag("--require-ground-truth", require_gt,
                       "demand ground truth on every task");

    auto* kg = app.add_subcommand("kg", "knowledge-graph utilities");
    auto* ingest = kg->add_subcommand("ingest", "validate a TSV snapshot");
    std::string ingest_path;
    ingest->add_option("tsv", ingest_path, "snapshot TSV")->required();
    auto* kg_query_cmd = kg->add_subcommand("query", "keyword retrieval against a snapshot");
    std::string query_snapshot, query_keywords;
    kg_query_cmd->add_option("--snapshot", query_snapshot, "snapshot TSV")->required();
    kg_query_cmd->add_option("--keywords", query_keywords, "comma-separated keywords")->required();
    kg_query_cmd->add_option("--top-k", top_k, "entries per context list");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        RunnerConfig config = load_runner_config(config_path);
        if (!mode_flag.empty()) config.pipeline.mode = pipeline_mode_from_string(mode_flag);
        if (run->count("--n")) config.pipeline.n_suggestions = n_flag;
        if (run->count("--max-cycles")) config.pipeline.max_cycles = max_cycles_flag;
        if (!loop_order_flag.empty())
            config.pipeline.loop_order = loop_order_from_string(loop_order_flag);
        if (!final_filter_flag.empty())
            config.pipeline.final_filter = final_filter_from_string(final_filter_flag);
        if (!scope_flag.empty()) config.scope = eval_scope_from_string(scope_flag);
        if (paper_faithful) config.paper_faithful = true;

        if (run->parsed())
            return cmd_run(dataset_path, out_dir, config, selection, kg_snapshot, parallelism);
        if (evaluate->parsed())
            return cmd_evaluate(traces_dir, dataset_path, kind,
                                out_dir.empty() ? traces_dir : out_dir, config, selection);
        if (report->parsed())
            return cmd_report(report_dir, out_dir.empty() ? report_dir : out_dir, config.scope);
        if (dataset_cmd->parsed() && validate->parsed())
            return cmd_dataset_validate(validate_path, require_gt);
        if (kg->parsed() && ingest->parsed()) return cmd_kg_ingest(ingest_path);
        if (kg->parsed() && kg_query_cmd->parsed())
            return cmd_kg_query(query_snapshot, query_keywords, top_k);
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
