#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "accelmat/cassette.hpp"
#include "accelmat/evaluation.hpp"
#include "accelmat/orchestrator.hpp"
#include "accelmat/trace_io.hpp"
#include "support/scripted_backend.hpp"

using namespace accelmat;
using namespace accelmat::testing;
namespace fs = std::filesystem;

namespace {

const std::string kCli = ACCELMAT_CLI_PATH;
const std::string kFixtures = ACCELMAT_FIXTURES_DIR;

struct CommandResult {
    int exit_code = -1;
    std::string output;
};

CommandResult run_command(const std::string& args) {
    const std::string command = kCli + " " + args + " 2>&1";
    std::array<char, 4096> buffer{};
    std::string output;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buffer.data(), buffer.size(), pipe)) output += buffer.data();
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, output};
}

/// Records the exchanges the CLI will need into per-task cassettes by driving
/// the pipeline through a recording wrapper around the scripted backend.
void record_cassettes(const std::vector<DesignTask>& tasks, const PipelineConfig& config,
                      const std::string& dir) {
    fs::create_directories(dir);
    for (const auto& task : tasks) {
        const std::string path =
            dir + "/" + task.id + "." + to_string(config.mode) + ".cassette.json";
        auto writer = std::make_shared<CassetteWriter>(path);
        auto scripted = std::make_shared<ScriptedBackend>(unanimous_at(config.n_suggestions, 1));
        auto recording = std::make_shared<RecordingBackend>(scripted, writer);
        auto trace = run_pipeline(task, config, scripted_roster(recording));

        // record the evaluator exchanges the `evaluate` subcommand will replay
        PromptKit kit;
        SeatBinding evaluator{recording, "scripted-model", {}};
        evaluate_closeness(task, trace.final_set, evaluator, kit, EvalOptions{});
        evaluate_quality(task, trace.final_set, evaluator, kit, EvalOptions{});
    }
}

std::string write_config(const fs::path& dir) {
    const std::string path = (dir / "config.json").string();
    nlohmann::json seats = {{"provider", "openai"}, {"model_id", "scripted-model"}};
    nlohmann::json doc = {
        {"mode", "feedback"},
        {"n_suggestions", 6},
        {"max_cycles", 3},
        {"experts_finder", seats},
        {"generator", seats},
        {"summarizer", seats},
        {"evaluator", seats},
        {"keyword_extractor", seats},
        {"critic_seats", nlohmann::json::array({seats, seats, seats})},
    };
    std::ofstream out(path);
    out << doc.dump(2);
    return path;
}

}  // namespace

TEST_CASE("unknown flag exits 2 with usage text") {
    auto result = run_command("--definitely-not-a-flag");
    CHECK(result.exit_code == 2);
    auto help = run_command("run --dataset");
    CHECK(help.exit_code == 2);
}

TEST_CASE("help exits 0") {
    auto result = run_command("--help");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("run") != std::string::npos);
    CHECK(result.output.find("evaluate") != std::string::npos);
    CHECK(result.output.find("report") != std::string::npos);
}

TEST_CASE("dataset validate") {
    auto ok = run_command("dataset validate " + kFixtures +
                          "/tasks/coating_task.jsonl --require-ground-truth");
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.find("0 finding(s)") != std::string::npos);

    auto missing = run_command("dataset validate /nonexistent.jsonl");
    CHECK(missing.exit_code == 1);
}

TEST_CASE("kg ingest and query") {
    auto ingest = run_command("kg ingest " + kFixtures + "/kg/snapshot.tsv");
    CHECK(ingest.exit_code == 0);
    CHECK(ingest.output.find("entities:") != std::string::npos);

    auto query = run_command("kg query --snapshot " + kFixtures +
                             "/kg/snapshot.tsv --keywords corrosion --top-k 5");
    CHECK(query.exit_code == 0);
    CHECK(query.output.find("Suggested Materials: ") != std::string::npos);
    CHECK(query.output.find("Aluminum:") != std::string::npos);
}

TEST_CASE("run, evaluate and report over replay cassettes") {
    const auto work = fs::temp_directory_path() / "accelmat_cli_test";
    fs::remove_all(work);
    fs::create_directories(work);
    const std::string cassettes = (work / "cassettes").string();
    const std::string out = (work / "out").string();
    const std::string config_path = write_config(work);

    auto tasks = load_tasks(kFixtures + "/tasks/batch5.jsonl");
    tasks.resize(2);
    PipelineConfig config;
    config.mode = PipelineMode::feedback;
    config.n_suggestions = 6;
    config.max_cycles = 3;
    record_cassettes(tasks, config, cassettes);

    // two-task dataset file for the CLI
    const std::string dataset = (work / "two.jsonl").string();
    {
        std::ifstream in(kFixtures + "/tasks/batch5.jsonl");
        std::ofstream cut(dataset);
        std::string line;
        for (int i = 0; i < 2 && std::getline(in, line); ++i) cut << line << "\n";
    }

    auto run = run_command("run --dataset " + dataset + " --out " + out +
                           " --backend replay --cassettes " + cassettes + " --config " +
                           config_path);
    INFO(run.output);
    CHECK(run.exit_code == 0);
    CHECK(fs::exists(fs::path(out) / "t1.feedback.trace.json"));
    CHECK(fs::exists(fs::path(out) / "t2.feedback.trace.json"));

    auto trace = load_trace((fs::path(out) / "t1.feedback.trace.json").string());
    CHECK(trace.config.n_suggestions == 6);       // config file applied
    CHECK(trace.config.max_cycles == 3);
    CHECK(trace.stop_reason == "unanimous");

    auto evaluate = run_command("evaluate --traces " + out + " --dataset " + dataset +
                                " --backend replay --cassettes " + cassettes + " --config " +
                                config_path);
    INFO(evaluate.output);
    CHECK(evaluate.exit_code == 0);
    CHECK(fs::exists(fs::path(out) / "t1.scores.json"));

    auto report = run_command("report " + out);
    INFO(report.output);
    CHECK(report.exit_code == 0);
    CHECK(fs::exists(fs::path(out) / "report.csv"));
    CHECK(fs::exists(fs::path(out) / "agreement.csv"));
    CHECK(fs::exists(fs::path(out) / "report.svg"));
    CHECK(report.output.find("feedback: 6/6") != std::string::npos);

    // report idempotence: byte-identical CSV on re-run
    std::ifstream first(fs::path(out) / "report.csv");
    std::string csv1((std::istreambuf_iterator<char>(first)), {});
    auto report2 = run_command("report " + out);
    CHECK(report2.exit_code == 0);
    std::ifstream second(fs::path(out) / "report.csv");
    std::string csv2((std::istreambuf_iterator<char>(second)), {});
    CHECK(csv1 == csv2);

    // flag overrides config file: --max-cycles beats config.json
    const std::string out2 = (work / "out2").string();
    auto flagged = run_command("run --dataset " + dataset + " --out " + out2 +
                               " --backend replay --cassettes " + cassettes + " --config " +
                               config_path + " --max-cycles 2");
    INFO(flagged.output);
    CHECK(flagged.exit_code == 0);
    auto flagged_trace = load_trace((fs::path(out2) / "t1.feedback.trace.json").string());
    CHECK(flagged_trace.config.max_cycles == 2);

    // --mode beats the config file's mode
    PipelineConfig baseline_config;
    baseline_config.mode = PipelineMode::baseline_no_feedback;
    baseline_config.n_suggestions = 6;
    baseline_config.max_cycles = 3;
    record_cassettes(tasks, baseline_config, cassettes);
    const std::string out_baseline = (work / "out_baseline").string();
    auto moded = run_command("run --dataset " + dataset + " --out " + out_baseline +
                             " --backend replay --cassettes " + cassettes + " --config " +
                             config_path + " --mode baseline_no_feedback");
    INFO(moded.output);
    CHECK(moded.exit_code == 0);
    auto baseline_trace =
        load_trace((fs::path(out_baseline) / "t1.baseline_no_feedback.trace.json").string());
    CHECK(baseline_trace.config.mode == PipelineMode::baseline_no_feedback);
    CHECK(baseline_trace.config.final_filter == FinalFilter::agreed_only);

    // a missing cassette is an isolated task failure -> exit 1
    const std::string dataset3 = (work / "three.jsonl").string();
    {
        std::ifstream in(kFixtures + "/tasks/batch5.jsonl");
        std::ofstream cut(dataset3);
        std::string line;
        for (int i = 0; i < 3 && std::getline(in, line); ++i) cut << line << "\n";
    }
    auto partial = run_command("run --dataset " + dataset3 + " --out " + (work / "out3").string() +
                               " --backend replay --cassettes " + cassettes + " --config " +
                               config_path);
    CHECK(partial.exit_code == 1);
    CHECK(partial.output.find("2/3 tasks succeeded") != std::string::npos);

    fs::remove_all(work);
}
