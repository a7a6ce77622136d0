#pragma once

#include <optional>
#include <string>
#include <vector>

namespace accelmat {

struct GroundTruth {
    std::string materials;
    std::string methods;
};

struct SourceMeta {
    std::string title;
    std::string journal;
    std::optional<std::string> published;  // ISO-8601 calendar date
};

/// One benchmark instance: a design goal, the constraints steering the
/// hypotheses, and (optionally) the reference materials/methods used for
/// closeness scoring.
struct DesignTask {
    std::string id;
    std::string goal;
    std::vector<std::string> constraints;
    std::optional<GroundTruth> ground_truth;
    std::optional<SourceMeta> source;
};

struct ValidationFinding {
    std::string field;
    std::string message;
};

struct ValidationReport {
    std::string task_id;
    std::vector<ValidationFinding> findings;

    bool ok() const { return findings.empty(); }
};

/// Loads tasks from a JSON Lines file (one task object per line); a file
/// holding a single JSON array of task objects is also accepted.
/// Throws IoError / SchemaError with a line or record locator.
std::vector<DesignTask> load_tasks(const std::string& path);

/// Parses tasks from in-memory text, same formats as load_tasks.
std::vector<DesignTask> parse_tasks(const std::string& text, const std::string& origin = "<memory>");

/// Serializes tasks back to JSON Lines. Round-trips through load_tasks.
std::string serialize_tasks(const std::vector<DesignTask>& tasks);

/// Checks a single task against the schema invariants. Ground-truth presence
/// is only demanded when require_ground_truth is set (closeness evaluation).
ValidationReport validate_task(const DesignTask& task, bool require_ground_truth = false);

/// True iff s parses as a YYYY-MM-DD calendar date (leap years respected).
bool is_iso_date(const std::string& s);

}  // namespace accelmat
