#include "accelmat/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "accelmat/errors.hpp"

namespace accelmat {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

json closeness_to_json(const ClosenessScore& s) {
    return {{"index", s.index},
            {"concept_overlap", s.concept_overlap},
            {"property_overlap", s.property_overlap},
            {"keyword_matching", s.keyword_matching},
            {"rationale", s.rationale}};
}

json quality_to_json(const QualityScore& s) {
    return {{"index", s.index},        {"alignment", s.alignment},
            {"plausibility", s.plausibility}, {"novelty", s.novelty},
            {"testability", s.testability},   {"feasibility", s.feasibility},
            {"impact", s.impact},             {"rationale", s.rationale}};
}

json mode_section_to_json(const ScoreCard& card) {
    json closeness = json::array();
    for (const auto& s : card.closeness) closeness.push_back(closeness_to_json(s));
    json quality = json::array();
    for (const auto& s : card.quality) quality.push_back(quality_to_json(s));
    json section = {{"n_suggestions", card.n_suggestions},
                    {"agreed_indices", card.agreed_indices},
                    {"closeness", std::move(closeness)},
                    {"quality", std::move(quality)}};
    // rankings are derived from the scores, best mean first
    if (!card.closeness.empty()) section["closeness_ranking"] = rank_by_mean(card.closeness);
    if (!card.quality.empty()) section["quality_ranking"] = rank_by_mean(card.quality);
    return section;
}

ScoreCard card_from_json(const std::string& task_id, const std::string& mode, const json& j) {
    ScoreCard card;
    card.task_id = task_id;
    card.mode = mode;
    card.n_suggestions = j.value("n_suggestions", 20);
    card.agreed_indices = j.value("agreed_indices", std::vector<int>{});
    for (const auto& s : j.value("closeness", json::array())) {
        card.closeness.push_back({s.at("index").get<int>(), s.at("concept_overlap").get<int>(),
                                  s.at("property_overlap").get<int>(),
                                  s.at("keyword_matching").get<int>(), s.value("rationale", "")});
    }
    for (const auto& s : j.value("quality", json::array())) {
        card.quality.push_back({s.at("index").get<int>(), s.at("alignment").get<int>(),
                                s.at("plausibility").get<int>(), s.at("novelty").get<int>(),
                                s.at("testability").get<int>(), s.at("feasibility").get<int>(),
                                s.at("impact").get<int>(), s.value("rationale", "")});
    }
    return card;
}

}  // namespace

std::string score_filename(const std::string& task_id) {
    return task_id + ".scores.json";
}

void write_score_card(const ScoreCard& card, const std::string& dir) {
    fs::create_directories(dir);
    const std::string path = (fs::path(dir) / score_filename(card.task_id)).string();

    json doc = {{"task_id", card.task_id}, {"modes", json::object()}};
    if (fs::exists(path)) {
        std::ifstream in(path, std::ios::binary);
        json existing;
        try {
            in >> existing;
            if (existing.is_object() && existing.value("task_id", "") == card.task_id)
                doc = existing;
        } catch (const json::parse_error&) {
            // Unreadable previous file: rewrite from scratch.
        }
    }
    doc["modes"][card.mode] = mode_section_to_json(card);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write score file: " + path);
    out << doc.dump(2) << "\n";
}

std::vector<ScoreCard> load_score_cards(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.size() > 12 &&
            name.substr(name.size() - 12) == ".scores.json")
            paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());

    std::vector<ScoreCard> cards;
    for (const auto& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open score file: " + path);
        json doc;
        try {
            in >> doc;
        } catch (const json::parse_error& e) {
            throw SchemaError(std::string("malformed score JSON: ") + e.what(), path);
        }
        const std::string task_id = doc.at("task_id").get<std::string>();
        for (auto it = doc.at("modes").begin(); it != doc.at("modes").end(); ++it)
            cards.push_back(card_from_json(task_id, it.key(), it.value()));
    }
    return cards;
}

namespace {

const std::vector<std::pair<std::string, std::string>>& csv_rows_spec() {
    // criterion key in AggregateReport -> CSV criterion label
    static const std::vector<std::pair<std::string, std::string>> rows = {
        {"concept_overlap", "concept_overlap"},
        {"property_overlap", "property_overlap"},
        {"keyword_matching", "keyword_matching"},
        {"alignment", "alignment"},
        {"plausibility", "plausibility"},
        {"novelty", "novelty"},
        {"testability", "testability"},
        {"feasibility", "feasibility"},
        {"impact", "impact"},
    };
    return rows;
}

bool is_closeness_key(const std::string& key) {
    return key == "concept_overlap" || key == "property_overlap" || key == "keyword_matching";
}

std::vector<std::string> canonical_modes(const std::map<std::string, AggregateReport>& by_mode) {
    std::vector<std::string> order = {"baseline_no_feedback", "feedback", "feedback_kg"};
    std::vector<std::string> modes;
    for (const auto& mode : order)
        if (by_mode.count(mode)) modes.push_back(mode);
    for (const auto& [mode, report] : by_mode)
        if (std::find(modes.begin(), modes.end(), mode) == modes.end()) modes.push_back(mode);
    return modes;
}

}  // namespace

std::string report_csv(const std::map<std::string, AggregateReport>& by_mode) {
    std::string out = "mode,criterion,mean,percent\n";
    for (const auto& mode : canonical_modes(by_mode)) {
        const AggregateReport& report = by_mode.at(mode);
        for (const auto& [key, label] : csv_rows_spec()) {
            auto it = report.criterion_means.find(key);
            if (it == report.criterion_means.end()) continue;
            out += mode + "," + label + "," + fmt(it->second) + "," +
                   fmt(100.0 * it->second / 5.0) + "\n";
        }
        if (report.closeness_hypotheses > 0)
            out += mode + ",closeness_overall," + fmt(report.closeness_percent * 5.0 / 100.0) +
                   "," + fmt(report.closeness_percent) + "\n";
        if (report.quality_hypotheses > 0)
            out += mode + ",quality_overall," + fmt(report.quality_percent * 5.0 / 100.0) + "," +
                   fmt(report.quality_percent) + "\n";
    }
    return out;
}

std::string agreement_csv(const std::vector<AgreementRow>& rows) {
    std::string out = "mode,mean_agreed,n_suggestions,traces\n";
    for (const auto& row : rows)
        out += row.mode + "," + fmt(row.mean_agreed) + "," + std::to_string(row.n_suggestions) +
               "," + std::to_string(row.traces) + "\n";
    return out;
}

std::string report_svg(const std::map<std::string, AggregateReport>& by_mode) {
    const auto modes = canonical_modes(by_mode);
    static const char* palette[] = {"#7f9fc4", "#e0a458", "#6aa87a", "#b07aa1", "#a0a0a0"};

    const int width = 960, height = 400;
    const int panel_top = 60, panel_bottom = 340;
    const double scale = (panel_bottom - panel_top) / 5.0;

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                      std::to_string(width) + "\" height=\"" + std::to_string(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"180\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">Closeness "
           "criteria (mean 1-5)</text>\n";
    svg += "<text x=\"600\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">Quality criteria "
           "(mean 1-5)</text>\n";

    // legend
    int lx = 30;
    for (std::size_t m = 0; m < modes.size(); ++m) {
        svg += "<rect x=\"" + std::to_string(lx) + "\" y=\"34\" width=\"10\" height=\"10\" fill=\"" +
               palette[m % 5] + "\"/>\n";
        svg += "<text x=\"" + std::to_string(lx + 14) +
               "\" y=\"43\" font-family=\"sans-serif\" font-size=\"11\">" + modes[m] +
               "</text>\n";
        lx += 14 + 8 * static_cast<int>(modes[m].size()) + 16;
    }

    struct Panel {
        int x0;
        std::vector<std::string> keys;
        std::vector<std::string> labels;
    };
    const Panel panels[] = {
        {40,
         {"concept_overlap", "property_overlap", "keyword_matching"},
         {"concept", "property", "keyword"}},
        {400,
         {"alignment", "plausibility", "novelty", "testability", "feasibility", "impact"},
         {"align", "plaus", "novel", "test", "feas", "impact"}},
    };

    for (const auto& panel : panels) {
        const int group_width = 14 * static_cast<int>(modes.size()) + 22;
        int gx = panel.x0;
        for (std::size_t c = 0; c < panel.keys.size(); ++c) {
            for (std::size_t m = 0; m < modes.size(); ++m) {
                const auto& report = by_mode.at(modes[m]);
                auto it = report.criterion_means.find(panel.keys[c]);
                if (it == report.criterion_means.end()) continue;
                const int bar_height = static_cast<int>(it->second * scale + 0.5);
                const int x = gx + static_cast<int>(m) * 14;
                svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" +
                       std::to_string(panel_bottom - bar_height) + "\" width=\"12\" height=\"" +
                       std::to_string(bar_height) + "\" fill=\"" + palette[m % 5] + "\"/>\n";
            }
            svg += "<text x=\"" + std::to_string(gx) + "\" y=\"" +
                   std::to_string(panel_bottom + 16) +
                   "\" font-family=\"sans-serif\" font-size=\"10\">" + panel.labels[c] +
                   "</text>\n";
            gx += group_width;
        }
    }
    svg += "<line x1=\"20\" y1=\"" + std::to_string(panel_bottom) + "\" x2=\"" +
           std::to_string(width - 20) + "\" y2=\"" + std::to_string(panel_bottom) +
           "\" stroke=\"black\"/>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace accelmat
