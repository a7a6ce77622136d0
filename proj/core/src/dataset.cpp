#include "accelmat/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "accelmat/errors.hpp"

namespace accelmat {

using nlohmann::json;

namespace {

std::string trim_copy(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string require_string(const json& j, const char* field, const std::string& where) {
    if (!j.contains(field)) throw SchemaError(std::string("missing field \"") + field + "\"", where);
    if (!j[field].is_string()) throw SchemaError(std::string("field \"") + field + "\" must be a string", where);
    return j[field].get<std::string>();
}

DesignTask task_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw SchemaError("task record must be a JSON object", where);

    DesignTask t;
    t.id = require_string(j, "id", where);
    if (trim_copy(t.id).empty()) throw SchemaError("field \"id\" is empty", where);

    t.goal = require_string(j, "goal", where);
    if (trim_copy(t.goal).empty()) throw SchemaError("field \"goal\" is empty", where);

    if (!j.contains("constraints") || !j["constraints"].is_array())
        throw SchemaError("field \"constraints\" must be an array of strings", where);
    for (const auto& c : j["constraints"]) {
        if (!c.is_string()) throw SchemaError("constraints entries must be strings", where);
        t.constraints.push_back(c.get<std::string>());
    }
    if (t.constraints.empty()) throw SchemaError("field \"constraints\" is empty", where);
    for (std::size_t i = 0; i < t.constraints.size(); ++i) {
        if (trim_copy(t.constraints[i]).empty())
            throw SchemaError("constraints[" + std::to_string(i) + "] is empty", where);
    }

    if (j.contains("ground_truth") && !j["ground_truth"].is_null()) {
        const auto& g = j["ground_truth"];
        if (!g.is_object()) throw SchemaError("field \"ground_truth\" must be an object", where);
        GroundTruth gt;
        gt.materials = require_string(g, "materials", where);
        gt.methods = require_string(g, "methods", where);
        t.ground_truth = std::move(gt);
    }

    if (j.contains("source") && !j["source"].is_null()) {
        const auto& s = j["source"];
        if (!s.is_object()) throw SchemaError("field \"source\" must be an object", where);
        SourceMeta m;
        if (s.contains("title")) m.title = s["title"].get<std::string>();
        if (s.contains("journal")) m.journal = s["journal"].get<std::string>();
        if (s.contains("published") && !s["published"].is_null()) {
            std::string d = s["published"].get<std::string>();
            if (!is_iso_date(d))
                throw SchemaError("source.published is not a calendar date: \"" + d + "\"", where);
            m.published = std::move(d);
        }
        t.source = std::move(m);
    }
    return t;
}

json task_to_json(const DesignTask& t) {
    json j;
    j["id"] = t.id;
    j["goal"] = t.goal;
    j["constraints"] = t.constraints;
    if (t.ground_truth) {
        j["ground_truth"] = {{"materials", t.ground_truth->materials},
                             {"methods", t.ground_truth->methods}};
    }
    if (t.source) {
        json s;
        s["title"] = t.source->title;
        s["journal"] = t.source->journal;
        if (t.source->published) s["published"] = *t.source->published;
        j["source"] = std::move(s);
    }
    return j;
}

void check_unique_ids(const std::vector<DesignTask>& tasks, const std::string& origin) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!seen.insert(tasks[i].id).second)
            throw SchemaError("duplicate task id \"" + tasks[i].id + "\"",
                              origin + ", record " + std::to_string(i + 1));
    }
}

}  // namespace

bool is_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    int y = std::stoi(s.substr(0, 4));
    int m = std::stoi(s.substr(5, 2));
    int d = std::stoi(s.substr(8, 2));
    if (m < 1 || m > 12 || d < 1) return false;
    static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int limit = days[m - 1];
    bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    if (m == 2 && leap) limit = 29;
    return d <= limit;
}

std::vector<DesignTask> parse_tasks(const std::string& text, const std::string& origin) {
    std::vector<DesignTask> tasks;

    const std::string trimmed = trim_copy(text);
    if (!trimmed.empty() && trimmed.front() == '[') {
        json arr;
        try {
            arr = json::parse(trimmed);
        } catch (const json::parse_error& e) {
            throw SchemaError(std::string("malformed JSON array: ") + e.what(), origin);
        }
        if (!arr.is_array()) throw SchemaError("top-level JSON value must be an array", origin);
        std::size_t idx = 0;
        for (const auto& rec : arr) {
            ++idx;
            tasks.push_back(task_from_json(rec, origin + ", record " + std::to_string(idx)));
        }
        check_unique_ids(tasks, origin);
        return tasks;
    }

    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim_copy(line).empty()) continue;
        const std::string where = origin + ", line " + std::to_string(lineno);
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw SchemaError(std::string("malformed JSON: ") + e.what(), where);
        }
        tasks.push_back(task_from_json(rec, where));
    }
    check_unique_ids(tasks, origin);
    return tasks;
}

std::vector<DesignTask> load_tasks(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading dataset file: " + path);
    return parse_tasks(buf.str(), path);
}

std::string serialize_tasks(const std::vector<DesignTask>& tasks) {
    std::ostringstream out;
    for (const auto& t : tasks) out << task_to_json(t).dump() << "\n";
    return out.str();
}

ValidationReport validate_task(const DesignTask& task, bool require_ground_truth) {
    ValidationReport report;
    report.task_id = task.id;
    auto add = [&](const std::string& field, const std::string& message) {
        report.findings.push_back({field, message});
    };

    if (trim_copy(task.id).empty()) add("id", "empty");
    if (trim_copy(task.goal).empty()) add("goal", "empty");
    if (task.constraints.empty()) {
        add("constraints", "empty");
    } else {
        for (std::size_t i = 0; i < task.constraints.size(); ++i)
            if (trim_copy(task.constraints[i]).empty())
                add("constraints[" + std::to_string(i) + "]", "empty");
    }
    if (task.ground_truth) {
        if (trim_copy(task.ground_truth->materials).empty()) add("ground_truth.materials", "empty");
        if (trim_copy(task.ground_truth->methods).empty()) add("ground_truth.methods", "empty");
    } else if (require_ground_truth) {
        add("ground_truth", "required for closeness");
    }
    if (task.source && task.source->published && !is_iso_date(*task.source->published))
        add("source.published", "not a calendar date");

    return report;
}

}  // namespace accelmat
