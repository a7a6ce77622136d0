#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "accelmat/cassette.hpp"
#include "accelmat/consensus.hpp"
#include "accelmat/errors.hpp"
#include "accelmat/orchestrator.hpp"
#include "accelmat/trace_io.hpp"
#include "support/scripted_backend.hpp"

using namespace accelmat;
using namespace accelmat::testing;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = ACCELMAT_FIXTURES_DIR;

DesignTask coating_task() {
    return load_tasks(kFixtures + "/tasks/coating_task.jsonl").at(0);
}

std::size_t calls_to(const RunTrace& trace, RoleTag tag) {
    std::size_t count = 0;
    for (const auto& call : trace.calls)
        if (call.role_tag == tag) ++count;
    return count;
}

PipelineConfig config_for(PipelineMode mode, int n = 20, int max_cycles = 5) {
    PipelineConfig config;
    config.mode = mode;
    config.n_suggestions = n;
    config.max_cycles = max_cycles;
    return config;
}

}  // namespace

TEST_CASE("feedback mode stops immediately on a unanimous first cycle") {
    auto backend = std::make_shared<ScriptedBackend>(unanimous_at(20, 0));
    auto trace = run_pipeline(coating_task(), config_for(PipelineMode::feedback),
                              scripted_roster(backend));
    CHECK(trace.history.size() == 1);
    CHECK(trace.stop_reason == "unanimous");
    CHECK(trace.final_agreed.unanimous);
    CHECK(calls_to(trace, RoleTag::summarizer) == 0);
    CHECK(calls_to(trace, RoleTag::generator) == 1);
    CHECK(trace.final_set.items.size() == 20);
    CHECK(trace.experts.size() == 5);
    CHECK(trace.system_prompt.find("You are an innovative") == 0);
}

TEST_CASE("unanimity at cycle 3 runs exactly three refinements") {
    auto backend = std::make_shared<ScriptedBackend>(unanimous_at(20, 3));
    auto trace = run_pipeline(coating_task(), config_for(PipelineMode::feedback),
                              scripted_roster(backend));
    CHECK(trace.history.size() == 4);  // cycle 0 + 3 refinements
    CHECK(trace.stop_reason == "unanimous");
    CHECK(calls_to(trace, RoleTag::summarizer) == 3);
    CHECK(calls_to(trace, RoleTag::generator) == 4);
    CHECK(calls_to(trace, RoleTag::critic_1) == 4);
    // summaries recorded on non-terminal cycles only
    for (std::size_t i = 0; i + 1 < trace.history.size(); ++i)
        CHECK(trace.history[i].summary.has_value());
    CHECK_FALSE(trace.history.back().summary.has_value());
}

TEST_CASE("no unanimity within the budget exhausts max_cycles") {
    auto backend = std::make_shared<ScriptedBackend>(never_unanimous(20, 10));
    auto trace = run_pipeline(coating_task(), config_for(PipelineMode::feedback, 20, 5),
                              scripted_roster(backend));
    CHECK(trace.history.size() == 6);
    CHECK(trace.stop_reason == "budget_exhausted");
    CHECK_FALSE(trace.final_agreed.unanimous);
    CHECK(calls_to(trace, RoleTag::summarizer) == 5);
    CHECK(calls_to(trace, RoleTag::generator) == 6);
    CHECK(trace.final_set.items.size() == 20);  // full_set default in feedback mode
}

TEST_CASE("baseline mode: one critic pass, agreed subset, no summarizer") {
    VerdictPlan plan = never_unanimous(20, 1);  // critic 0 rejects suggestion 1 of generation 0
    auto backend = std::make_shared<ScriptedBackend>(plan);
    auto trace = run_pipeline(coating_task(), config_for(PipelineMode::baseline_no_feedback),
                              scripted_roster(backend));
    CHECK(trace.history.size() == 1);
    CHECK(trace.stop_reason == "baseline_single_pass");
    CHECK(calls_to(trace, RoleTag::summarizer) == 0);
    CHECK(calls_to(trace, RoleTag::generator) == 1);
    CHECK(trace.config.final_filter == FinalFilter::agreed_only);
    CHECK(trace.final_set.items.size() == 19);
    for (const auto& h : trace.final_set.items) CHECK(h.index != 1);
}

TEST_CASE("baseline mode never consults the knowledge graph") {
    auto backend = std::make_shared<ScriptedBackend>(unanimous_at(20, 0));
    auto trace = run_pipeline(coating_task(), config_for(PipelineMode::baseline_no_feedback),
                              scripted_roster(backend));
    CHECK(calls_to(trace, RoleTag::keyword_extractor) == 0);
    CHECK(trace.kg_context.empty());
}

TEST_CASE("feedback_kg mode extracts keywords and builds the context block") {
    auto store = KGStore::ingest(kFixtures + "/kg/snapshot.tsv");
    auto backend = std::make_shared<ScriptedBackend>(unanimous_at(20, 0));
    auto trace = run_pipeline(coating_task(), config_for(PipelineMode::feedback_kg),
                              scripted_roster(backend), &store);
    CHECK(calls_to(trace, RoleTag::keyword_extractor) == 1);
    CHECK(trace.kg_keywords ==
          std::vector<std::string>{"corrosion", "coating", "offshore", "self-healing"});
    CHECK(trace.kg_context.find("Suggested Materials: ") != std::string::npos);
    CHECK(trace.kg_context.find("Aluminum") != std::string::npos);

    CHECK_THROWS_AS(run_pipeline(coating_task(), config_for(PipelineMode::feedback_kg),
                                 scripted_roster(backend), nullptr),
                    PipelineError);
}

TEST_CASE("refine_then_check refines once more after a late unanimous critique") {
    // generation 0 not unanimous, generation 1 unanimous
    auto backend = std::make_shared<ScriptedBackend>(unanimous_at(20, 1));
    auto config = config_for(PipelineMode::feedback);
    config.loop_order = LoopOrder::refine_then_check;
    auto trace = run_pipeline(coating_task(), config, scripted_roster(backend));

    // cycle0 (critiqued) + cycle1 (critiqued, unanimous) + cycle2 (refined, shipped untested)
    CHECK(trace.history.size() == 3);
    CHECK(trace.stop_reason == "unanimous");
    CHECK(trace.history[1].consensus.has_value());
    CHECK(trace.history[1].consensus->unanimous);
    CHECK(trace.history.back().verdicts.empty());
    CHECK_FALSE(trace.history.back().consensus.has_value());
    CHECK(calls_to(trace, RoleTag::critic_1) == 2);
    CHECK(calls_to(trace, RoleTag::generator) == 3);
    CHECK(calls_to(trace, RoleTag::summarizer) == 2);
    CHECK(trace.final_set == trace.history.back().hypotheses);
}

TEST_CASE("refine_then_check honors the pre-loop unanimity return") {
    auto backend = std::make_shared<ScriptedBackend>(unanimous_at(20, 0));
    auto config = config_for(PipelineMode::feedback);
    config.loop_order = LoopOrder::refine_then_check;
    auto trace = run_pipeline(coating_task(), config, scripted_roster(backend));
    CHECK(trace.history.size() == 1);
    CHECK(calls_to(trace, RoleTag::summarizer) == 0);
}

TEST_CASE("loop bounds hold over random scripted plans in both orders") {
    std::mt19937_64 rng(4242);
    for (int iter = 0; iter < 40; ++iter) {
        const int n = 1 + static_cast<int>(rng() % 20);
        const int max_cycles = static_cast<int>(rng() % 6);
        VerdictPlan plan;
        plan.n = n;
        const int planned = static_cast<int>(rng() % 8);
        for (int g = 0; g < planned; ++g) {
            std::vector<std::vector<bool>> per_critic(
                3, std::vector<bool>(static_cast<std::size_t>(n), true));
            for (int c = 0; c < 3; ++c)
                for (int i = 0; i < n; ++i) per_critic[c][i] = rng() % 4 != 0;
            plan.generations.push_back(std::move(per_critic));
        }
        auto backend = std::make_shared<ScriptedBackend>(plan);
        auto config = config_for(PipelineMode::feedback, n, max_cycles);
        config.loop_order = (rng() % 2) ? LoopOrder::check_then_refine
                                        : LoopOrder::refine_then_check;
        auto trace = run_pipeline(coating_task(), config, scripted_roster(backend));

        CHECK(calls_to(trace, RoleTag::generator) <= static_cast<std::size_t>(1 + max_cycles));
        CHECK(calls_to(trace, RoleTag::summarizer) <= static_cast<std::size_t>(max_cycles));
        CHECK(calls_to(trace, RoleTag::critic_1) <= static_cast<std::size_t>(1 + max_cycles));
        CHECK(trace.history.size() <= static_cast<std::size_t>(max_cycles) + 1);

        // agreement accounting: recompute final_agreed from stored verdicts
        for (auto it = trace.history.rbegin(); it != trace.history.rend(); ++it) {
            if (it->verdicts.empty()) continue;
            CHECK(consensus(it->verdicts, n) == trace.final_agreed);
            break;
        }
    }
}

TEST_CASE("early stop soundness: nothing generated after a unanimous cycle") {
    for (int cycle = 0; cycle <= 3; ++cycle) {
        auto backend = std::make_shared<ScriptedBackend>(unanimous_at(20, cycle));
        auto trace = run_pipeline(coating_task(), config_for(PipelineMode::feedback),
                                  scripted_roster(backend));
        CHECK(trace.history.size() == static_cast<std::size_t>(cycle) + 1);
        CHECK(calls_to(trace, RoleTag::generator) == static_cast<std::size_t>(cycle) + 1);
    }
}

namespace {

/// Backend whose generator output is never parseable.
class BrokenGeneratorBackend : public ScriptedBackend {
public:
    BrokenGeneratorBackend() : ScriptedBackend(unanimous_at(20, 0)) {}
    ChatResponse complete(const ChatRequest& request) override {
        if (request.role_tag == RoleTag::generator)
            return {"I cannot answer in JSON today.", "scripted", 0, false};
        return ScriptedBackend::complete(request);
    }
};

/// Backend whose second critic talks prose instead of the schema.
class MumblingCriticBackend : public ScriptedBackend {
public:
    MumblingCriticBackend() : ScriptedBackend(unanimous_at(20, 0)) {}
    ChatResponse complete(const ChatRequest& request) override {
        if (request.role_tag == RoleTag::critic_2)
            return {"These all look wonderful to me, carry on.", "scripted", 0, false};
        return ScriptedBackend::complete(request);
    }
};

}  // namespace

TEST_CASE("generator parse failure aborts after the regeneration budget") {
    auto backend = std::make_shared<BrokenGeneratorBackend>();
    auto config = config_for(PipelineMode::feedback);
    config.generation_retries = 2;
    try {
        run_pipeline(coating_task(), config, scripted_roster(backend));
        FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
        const auto& trace = e.partial_trace();
        REQUIRE_FALSE(trace.errors.empty());
        CHECK(trace.errors[0].seat == "generator");
        CHECK(trace.errors[0].cycle == 0);
        CHECK(trace.stop_reason == "error");
        // 1 + R attempts
        std::size_t generator_calls = 0;
        for (const auto& call : trace.calls)
            if (call.role_tag == RoleTag::generator) ++generator_calls;
        CHECK(generator_calls == 3);
    }
}

TEST_CASE("an unparseable critic is conservative, flagged, and non-fatal") {
    auto backend = std::make_shared<MumblingCriticBackend>();
    auto config = config_for(PipelineMode::baseline_no_feedback);
    auto trace = run_pipeline(coating_task(), config, scripted_roster(backend));
    // critic_2 re-asked once, then counted as all-unparseable
    CHECK(calls_to(trace, RoleTag::critic_2) == 2);
    CHECK(trace.final_agreed.agreed_indices.empty());
    bool flagged = false;
    for (const auto& e : trace.errors)
        if (e.seat == "critic_2") flagged = true;
    CHECK(flagged);
    const auto& verdicts = trace.history[0].verdicts;
    REQUIRE(verdicts.size() == 3);
    for (const auto& v : verdicts[1].verdicts) CHECK(v.meets == Verdict::unparseable);
}

TEST_CASE("batch ordering and parallelism do not change results") {
    auto tasks = load_tasks(kFixtures + "/tasks/batch5.jsonl");
    tasks.resize(3);
    auto roster_for = [](const DesignTask&) {
        return scripted_roster(std::make_shared<ScriptedBackend>(unanimous_at(8, 1)));
    };
    PipelineConfig config = config_for(PipelineMode::feedback, 8, 3);

    auto serial = run_batch(tasks, config, roster_for, nullptr, 1);
    auto parallel = run_batch(tasks, config, roster_for, nullptr, 3);
    REQUIRE(serial.size() == 3);
    REQUIRE(parallel.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        REQUIRE(serial[i].ok());
        REQUIRE(parallel[i].ok());
        CHECK(serial[i].task_id == tasks[i].id);
        auto a = trace_to_json(*serial[i].trace);
        auto b = trace_to_json(*parallel[i].trace);
        a.erase("timing");
        b.erase("timing");
        CHECK(a.dump() == b.dump());
    }
}

TEST_CASE("a benchmark-sized batch yields one trace per task") {
    std::vector<DesignTask> tasks;
    for (int i = 0; i < 50; ++i)
        tasks.push_back({"bench-" + std::to_string(i), "goal " + std::to_string(i),
                         {"constraint"}, std::nullopt, std::nullopt});
    auto roster_for = [](const DesignTask&) {
        return scripted_roster(std::make_shared<ScriptedBackend>(unanimous_at(4, 0)));
    };
    auto results = run_batch(tasks, config_for(PipelineMode::feedback, 4, 1), roster_for,
                             nullptr, 4);
    REQUIRE(results.size() == 50);
    for (std::size_t i = 0; i < results.size(); ++i) {
        REQUIRE(results[i].ok());
        CHECK(results[i].task_id == tasks[i].id);
        CHECK(results[i].trace->final_set.items.size() == 4);
    }
}

TEST_CASE("one poisoned task never aborts the batch") {
    auto tasks = load_tasks(kFixtures + "/tasks/batch5.jsonl");
    tasks.resize(3);
    auto roster_for = [&](const DesignTask& task) {
        if (task.id == "t2") {
            // empty cassette: every request misses
            auto empty = std::make_shared<ReplayBackend>(
                Cassette({}, CassetteMode::replay_by_fingerprint));
            return scripted_roster(empty);
        }
        return scripted_roster(std::make_shared<ScriptedBackend>(unanimous_at(8, 0)));
    };
    auto results = run_batch(tasks, config_for(PipelineMode::feedback, 8, 2), roster_for,
                             nullptr, 2);
    REQUIRE(results.size() == 3);
    CHECK(results[0].ok());
    CHECK_FALSE(results[1].ok());
    CHECK(results[1].error.find("fingerprint") != std::string::npos);
    CHECK(results[2].ok());
}

TEST_CASE("trace serialization round-trips") {
    auto backend = std::make_shared<ScriptedBackend>(unanimous_at(6, 1));
    auto trace = run_pipeline(coating_task(), config_for(PipelineMode::feedback, 6, 2),
                              scripted_roster(backend));
    auto doc = trace_to_json(trace);
    auto reloaded = trace_from_json(doc);
    CHECK(trace_to_json(reloaded).dump(2) == doc.dump(2));

    const auto dir = fs::temp_directory_path() / "accelmat_trace_io_test";
    fs::remove_all(dir);
    auto path = write_trace(trace, dir.string());
    CHECK(fs::path(path).filename().string() == "matdesign-001.feedback.trace.json");
    auto from_disk = load_trace(path);
    CHECK(trace_to_json(from_disk).dump() == doc.dump());
    CHECK(load_traces(dir.string()).size() == 1);
    fs::remove_all(dir);
}

TEST_CASE("config validation and defaults") {
    PipelineConfig config;
    CHECK(config.effective_final_filter() == FinalFilter::full_set);
    config.mode = PipelineMode::baseline_no_feedback;
    config.final_filter = FinalFilter::full_set;  // forced back to agreed_only
    CHECK(config.effective_final_filter() == FinalFilter::agreed_only);

    PipelineConfig bad;
    bad.n_suggestions = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = PipelineConfig{};
    bad.max_cycles = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS(run_batch({}, PipelineConfig{}, [](const DesignTask&) { return AgentRoster{}; },
                              nullptr, 0),
                    ConfigError);
}
