#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "accelmat/orchestrator.hpp"

namespace accelmat {

nlohmann::json trace_to_json(const RunTrace& trace);
RunTrace trace_from_json(const nlohmann::json& doc);

/// `<task_id>.<mode>.trace.json`
std::string trace_filename(const std::string& task_id, PipelineMode mode);

/// Writes the trace into `dir` under its canonical filename; returns the path.
std::string write_trace(const RunTrace& trace, const std::string& dir);

RunTrace load_trace(const std::string& path);

/// Every *.trace.json under `dir` (sorted by filename).
std::vector<RunTrace> load_traces(const std::string& dir);

nlohmann::json hypothesis_set_to_json(const HypothesisSet& set);
HypothesisSet hypothesis_set_from_json(const nlohmann::json& doc);

}  // namespace accelmat
