#include "accelmat/trace_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "accelmat/errors.hpp"

namespace accelmat {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json config_to_json(const PipelineConfig& c) {
    return {{"mode", to_string(c.mode)},
            {"n_suggestions", c.n_suggestions},
            {"max_cycles", c.max_cycles},
            {"loop_order", to_string(c.loop_order)},
            {"final_filter", to_string(c.effective_final_filter())},
            {"critic_count", c.critic_count},
            {"kg_top_k", c.kg_top_k},
            {"generation_retries", c.generation_retries},
            {"critic_reask_on_unparseable", c.critic_reask_on_unparseable}};
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    c.mode = pipeline_mode_from_string(j.at("mode").get<std::string>());
    c.n_suggestions = j.value("n_suggestions", 20);
    c.max_cycles = j.value("max_cycles", 5);
    c.loop_order = loop_order_from_string(j.value("loop_order", "check_then_refine"));
    if (j.contains("final_filter"))
        c.final_filter = final_filter_from_string(j["final_filter"].get<std::string>());
    c.critic_count = j.value("critic_count", 3);
    c.kg_top_k = j.value("kg_top_k", 10);
    c.generation_retries = j.value("generation_retries", 2);
    c.critic_reask_on_unparseable = j.value("critic_reask_on_unparseable", true);
    return c;
}

json verdict_set_to_json(const CriticVerdictSet& set) {
    json verdicts = json::array();
    for (const auto& v : set.verdicts)
        verdicts.push_back(
            {{"index", v.index}, {"meets", to_string(v.meets)}, {"reasoning", v.reasoning}});
    return {{"critic_id", to_string(set.critic_id)},
            {"verdicts", std::move(verdicts)},
            {"overall_feedback", set.overall_feedback}};
}

CriticVerdictSet verdict_set_from_json(const json& j) {
    CriticVerdictSet set;
    set.critic_id = role_tag_from_string(j.at("critic_id").get<std::string>());
    set.overall_feedback = j.value("overall_feedback", "");
    for (const auto& v : j.at("verdicts")) {
        const std::string meets = v.at("meets").get<std::string>();
        Verdict verdict = meets == "yes"  ? Verdict::yes
                          : meets == "no" ? Verdict::no
                                          : Verdict::unparseable;
        set.verdicts.push_back({v.at("index").get<int>(), verdict, v.value("reasoning", "")});
    }
    return set;
}

json consensus_to_json(const ConsensusResult& c) {
    return {{"agreed_indices", c.agreed_indices},
            {"per_critic_yes_counts", c.per_critic_yes_counts},
            {"unanimous", c.unanimous}};
}

ConsensusResult consensus_from_json(const json& j) {
    ConsensusResult c;
    c.agreed_indices = j.at("agreed_indices").get<std::vector<int>>();
    c.per_critic_yes_counts = j.at("per_critic_yes_counts").get<std::vector<int>>();
    c.unanimous = j.at("unanimous").get<bool>();
    return c;
}

}  // namespace

json hypothesis_set_to_json(const HypothesisSet& set) {
    json items = json::array();
    for (const auto& h : set.items)
        items.push_back({{"index", h.index},
                         {"materials", h.materials},
                         {"methods", h.methods},
                         {"reasoning", h.reasoning}});
    return {{"cycle", set.cycle}, {"items", std::move(items)}};
}

HypothesisSet hypothesis_set_from_json(const json& doc) {
    HypothesisSet set;
    set.cycle = doc.at("cycle").get<int>();
    for (const auto& item : doc.at("items"))
        set.items.push_back({item.at("index").get<int>(), item.at("materials").get<std::string>(),
                             item.at("methods").get<std::string>(),
                             item.at("reasoning").get<std::string>()});
    return set;
}

json trace_to_json(const RunTrace& trace) {
    json history = json::array();
    for (const auto& record : trace.history) {
        json cycle = {{"cycle", record.cycle},
                      {"hypotheses", hypothesis_set_to_json(record.hypotheses)}};
        json verdicts = json::array();
        for (const auto& set : record.verdicts) verdicts.push_back(verdict_set_to_json(set));
        cycle["verdicts"] = std::move(verdicts);
        if (record.consensus) cycle["consensus"] = consensus_to_json(*record.consensus);
        if (record.summary) cycle["summary"] = *record.summary;
        history.push_back(std::move(cycle));
    }

    json calls = json::array();
    for (const auto& call : trace.calls)
        calls.push_back({{"seat", to_string(call.role_tag)},
                         {"fingerprint", call.fingerprint},
                         {"latency_ms", call.latency_ms},
                         {"attempts", call.attempts},
                         {"response_bytes", call.response_bytes}});

    json errors = json::array();
    for (const auto& e : trace.errors)
        errors.push_back({{"cycle", e.cycle}, {"seat", e.seat}, {"message", e.message}});

    return {{"task_id", trace.task_id},
            {"mode", to_string(trace.config.mode)},
            {"config", config_to_json(trace.config)},
            {"experts", trace.experts},
            {"system_prompt", trace.system_prompt},
            {"kg_keywords", trace.kg_keywords},
            {"kg_context", trace.kg_context},
            {"history", std::move(history)},
            {"final_set", hypothesis_set_to_json(trace.final_set)},
            {"final_agreed", consensus_to_json(trace.final_agreed)},
            {"stop_reason", trace.stop_reason},
            {"calls", std::move(calls)},
            {"errors", std::move(errors)},
            {"timing", {{"started_at", trace.started_at}, {"finished_at", trace.finished_at}}}};
}

RunTrace trace_from_json(const json& doc) {
    RunTrace trace;
    trace.task_id = doc.at("task_id").get<std::string>();
    trace.config = config_from_json(doc.at("config"));
    trace.experts = doc.value("experts", std::vector<std::string>{});
    trace.system_prompt = doc.value("system_prompt", "");
    trace.kg_keywords = doc.value("kg_keywords", std::vector<std::string>{});
    trace.kg_context = doc.value("kg_context", "");
    for (const auto& cycle : doc.at("history")) {
        CycleRecord record;
        record.cycle = cycle.at("cycle").get<int>();
        record.hypotheses = hypothesis_set_from_json(cycle.at("hypotheses"));
        for (const auto& set : cycle.at("verdicts"))
            record.verdicts.push_back(verdict_set_from_json(set));
        if (cycle.contains("consensus")) record.consensus = consensus_from_json(cycle["consensus"]);
        if (cycle.contains("summary")) record.summary = cycle["summary"].get<std::string>();
        trace.history.push_back(std::move(record));
    }
    trace.final_set = hypothesis_set_from_json(doc.at("final_set"));
    trace.final_agreed = consensus_from_json(doc.at("final_agreed"));
    trace.stop_reason = doc.value("stop_reason", "");
    if (doc.contains("calls")) {
        for (const auto& call : doc["calls"]) {
            CallRecord record;
            record.role_tag = role_tag_from_string(call.at("seat").get<std::string>());
            record.fingerprint = call.at("fingerprint").get<std::string>();
            record.latency_ms = call.value("latency_ms", 0);
            record.attempts = call.value("attempts", 1);
            record.response_bytes = call.value("response_bytes", 0);
            trace.calls.push_back(std::move(record));
        }
    }
    if (doc.contains("errors")) {
        for (const auto& e : doc["errors"])
            trace.errors.push_back({e.value("cycle", -1), e.value("seat", ""),
                                    e.value("message", "")});
    }
    if (doc.contains("timing")) {
        trace.started_at = doc["timing"].value("started_at", "");
        trace.finished_at = doc["timing"].value("finished_at", "");
    }
    return trace;
}

std::string trace_filename(const std::string& task_id, PipelineMode mode) {
    return task_id + "." + to_string(mode) + ".trace.json";
}

std::string write_trace(const RunTrace& trace, const std::string& dir) {
    fs::create_directories(dir);
    const std::string path =
        (fs::path(dir) / trace_filename(trace.task_id, trace.config.mode)).string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write trace file: " + path);
    out << trace_to_json(trace).dump(2) << "\n";
    if (!out) throw IoError("failed writing trace file: " + path);
    return path;
}

RunTrace load_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open trace file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("malformed trace JSON: ") + e.what(), path);
    }
    return trace_from_json(doc);
}

std::vector<RunTrace> load_traces(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.size() > 11 &&
            name.substr(name.size() - 11) == ".trace.json")
            paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    std::vector<RunTrace> traces;
    for (const auto& path : paths) traces.push_back(load_trace(path));
    return traces;
}

}  // namespace accelmat
