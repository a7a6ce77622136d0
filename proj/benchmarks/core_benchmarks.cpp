#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "accelmat/agent_io.hpp"
#include "accelmat/consensus.hpp"
#include "accelmat/knowledge_graph.hpp"
#include "accelmat/llm_gateway.hpp"
#include "accelmat/prompt_kit.hpp"

using namespace accelmat;

namespace {

std::string generator_payload(int n) {
    nlohmann::json doc = nlohmann::json::object();
    for (int k = 1; k <= n; ++k) {
        doc["Suggestion_" + std::to_string(k)] = {
            {"Materials", "polyurethane matrix with encapsulated healing agent variant " +
                              std::to_string(k)},
            {"Methods", "disperse capsules, spray apply, cure at ambient conditions"},
            {"Reasoning", "water-triggered single-component chemistry with repeated releases"}};
    }
    return "Here are the suggestions:\n```json\n" + doc.dump(2) + "\n```\nDone.";
}

KGStore synthetic_store(int materials, int properties) {
    KGStore store;
    std::mt19937_64 rng(1);
    const char* words[] = {"oxide", "resin", "alloy", "fiber", "salt", "gel"};
    for (int i = 0; i < materials; ++i)
        store.add_entity({"mat-" + std::to_string(i), EntityKind::material,
                          std::string(words[i % 6]) + " based corrosion resistant compound"});
    for (int i = 0; i < properties; ++i)
        store.add_entity({"prop-" + std::to_string(i), EntityKind::property,
                          std::string(words[(i + 3) % 6]) + " related behaviour"});
    for (int i = 0; i < materials; ++i)
        store.add_edge({"mat-" + std::to_string(i), Relation::has_property,
                        "prop-" + std::to_string(i % properties)});
    return store;
}

void BM_ParseHypotheses(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const std::string payload = generator_payload(n);
    for (auto _ : state) {
        auto set = parse_hypotheses(payload, n, 0);
        benchmark::DoNotOptimize(set);
    }
}
BENCHMARK(BM_ParseHypotheses)->Arg(5)->Arg(20)->Arg(50);

void BM_Consensus(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::mt19937_64 rng(7);
    std::vector<CriticVerdictSet> sets;
    for (int c = 0; c < 3; ++c) {
        CriticVerdictSet set;
        set.critic_id = critic_role(static_cast<std::size_t>(c));
        for (int i = 1; i <= n; ++i)
            set.verdicts.push_back({i, rng() % 4 ? Verdict::yes : Verdict::no, ""});
        sets.push_back(std::move(set));
    }
    for (auto _ : state) {
        auto result = consensus(sets, n);
        benchmark::DoNotOptimize(result);
    }
}
BENCHMARK(BM_Consensus)->Arg(20)->Arg(200);

void BM_KGQuery(benchmark::State& state) {
    auto store = synthetic_store(static_cast<int>(state.range(0)), 40);
    const std::vector<std::string> keywords = {"corrosion", "resin", "salt"};
    for (auto _ : state) {
        auto ctx = query(store, keywords, 10);
        benchmark::DoNotOptimize(ctx);
    }
}
BENCHMARK(BM_KGQuery)->Arg(50)->Arg(500);

void BM_Fingerprint(benchmark::State& state) {
    ChatRequest request;
    request.role_tag = RoleTag::generator;
    request.system = "You are an innovative materials scientist.";
    request.user = generator_payload(20);
    request.model_id = "gpt-4o";
    for (auto _ : state) {
        auto fp = fingerprint(request);
        benchmark::DoNotOptimize(fp);
    }
}
BENCHMARK(BM_Fingerprint);

void BM_RenderGenerationPrompt(benchmark::State& state) {
    PromptKit kit;
    DesignTask task;
    task.id = "bench";
    task.goal = "Develop a scalable self-healing coating for offshore structures.";
    for (int i = 0; i < 5; ++i)
        task.constraints.push_back("Constraint number " + std::to_string(i + 1) +
                                   " about processing and durability.");
    for (auto _ : state) {
        auto prompt = kit.render_generation_prompt(task, GenerationMode::baseline, 20);
        benchmark::DoNotOptimize(prompt);
    }
}
BENCHMARK(BM_RenderGenerationPrompt);

}  // namespace

BENCHMARK_MAIN();
