#include "accelmat/knowledge_graph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "accelmat/errors.hpp"
#include "internal/text.hpp"

namespace accelmat {

using namespace internal;

const char* to_string(EntityKind kind) {
    switch (kind) {
        case EntityKind::material: return "material";
        case EntityKind::property: return "property";
        default: return "application";
    }
}

const char* to_string(Relation relation) {
    return relation == Relation::has_property ? "HAS_PROPERTY" : "USED_FOR";
}

void KGStore::add_entity(KGEntity entity) {
    if (find(entity.name))
        throw SchemaError("duplicate entity name \"" + entity.name + "\"", "add_entity");
    entities_.push_back(std::move(entity));
}

void KGStore::add_edge(KGEdge edge) {
    if (!find(edge.subject))
        throw SchemaError("edge subject \"" + edge.subject + "\" unknown", "add_edge");
    if (!find(edge.object))
        throw SchemaError("edge object \"" + edge.object + "\" unknown", "add_edge");
    edges_.push_back(std::move(edge));
}

const KGEntity* KGStore::find(const std::string& name) const {
    const std::string needle = to_lower(name);
    for (const auto& e : entities_)
        if (to_lower(e.name) == needle) return &e;
    return nullptr;
}

KGStore KGStore::from_text(const std::string& text, const std::string& origin) {
    KGStore store;
    struct PendingEdge {
        KGEdge edge;
        std::size_t row;
    };
    std::vector<PendingEdge> pending;

    std::istringstream in(text);
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;

        const auto cols = split(line, '\t');
        const std::string where = origin + ", row " + std::to_string(row);
        if (cols.size() != 3) throw SchemaError("expected 3 tab-separated columns", where);
        const std::string a = trim(cols[0]), b = trim(cols[1]), c = trim(cols[2]);
        if (a.empty()) throw SchemaError("first column is empty", where);

        if (b == "material" || b == "property" || b == "application") {
            EntityKind kind = b == "material"   ? EntityKind::material
                              : b == "property" ? EntityKind::property
                                                : EntityKind::application;
            if (store.find(a))
                throw SchemaError("duplicate entity name \"" + a + "\"", where);
            store.entities_.push_back({a, kind, c});
        } else if (b == "HAS_PROPERTY" || b == "USED_FOR") {
            Relation rel = b == "HAS_PROPERTY" ? Relation::has_property : Relation::used_for;
            pending.push_back({{a, rel, c}, row});
        } else {
            throw SchemaError("second column must be an entity kind or relation, got \"" + b +
                                  "\"",
                              where);
        }
    }

    for (auto& [edge, erow] : pending) {
        const std::string where = origin + ", row " + std::to_string(erow);
        if (!store.find(edge.subject))
            throw SchemaError("edge subject \"" + edge.subject + "\" unknown", where);
        if (!store.find(edge.object))
            throw SchemaError("edge object \"" + edge.object + "\" unknown", where);
        store.edges_.push_back(std::move(edge));
    }
    return store;
}

KGStore KGStore::ingest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open knowledge-graph snapshot: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str(), path);
}

namespace {

int match_count(const KGEntity& entity, const std::vector<std::string>& keywords) {
    int count = 0;
    for (const auto& kw : keywords)
        if (contains_ci(entity.name, kw) || contains_ci(entity.description, kw)) ++count;
    return count;
}

struct Ranked {
    const KGEntity* entity;
    int score;
};

void rank_and_truncate(std::vector<Ranked>& ranked, int top_k,
                       std::vector<KGContextItem>& out) {
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.score != b.score) return a.score > b.score;
        return to_lower(a.entity->name) < to_lower(b.entity->name);
    });
    for (const auto& r : ranked) {
        if (static_cast<int>(out.size()) >= top_k) break;
        out.push_back({r.entity->name, r.entity->description});
    }
}

}  // namespace

KGContext query(const KGStore& store, const std::vector<std::string>& keywords, int top_k) {
    if (top_k < 1) throw ConfigError("top_k must be >= 1");
    KGContext context;
    if (keywords.empty()) return context;

    std::vector<Ranked> materials;
    std::set<std::string> matched_material_names;
    for (const auto& entity : store.entities()) {
        if (entity.kind != EntityKind::material) continue;
        int mc = match_count(entity, keywords);
        if (mc > 0) {
            materials.push_back({&entity, mc});
            matched_material_names.insert(to_lower(entity.name));
        }
    }

    // Properties: direct keyword matches plus HAS_PROPERTY neighbors of every
    // matched material (pre-truncation); neighbor links add to the score.
    std::map<std::string, int> link_counts;
    for (const auto& edge : store.edges()) {
        if (edge.relation != Relation::has_property) continue;
        if (matched_material_names.count(to_lower(edge.subject)))
            ++link_counts[to_lower(edge.object)];
    }
    std::vector<Ranked> properties;
    for (const auto& entity : store.entities()) {
        if (entity.kind != EntityKind::property) continue;
        int mc = match_count(entity, keywords);
        auto it = link_counts.find(to_lower(entity.name));
        int links = it == link_counts.end() ? 0 : it->second;
        if (mc > 0 || links > 0) properties.push_back({&entity, mc + links});
    }

    rank_and_truncate(materials, top_k, context.materials);
    rank_and_truncate(properties, top_k, context.properties);
    return context;
}

std::string format_context(const KGContext& context) {
    std::string out;
    if (!context.materials.empty()) {
        out += "Suggested Materials: \n";
        for (const auto& item : context.materials) out += item.name + ": " + item.note + "\n";
    }
    if (!context.properties.empty()) {
        if (!out.empty()) out += "\n";
        out += "Suggested Properties:\n";
        for (const auto& item : context.properties) out += item.name + ": " + item.note + "\n";
    }
    return out;
}

std::string keyword_extraction_prompt(const DesignTask& task) {
    std::string out = "Goal:\n" + task.goal + "\n\nConstraints:\n";
    for (std::size_t i = 0; i < task.constraints.size(); ++i)
        out += std::to_string(i + 1) + ") " + task.constraints[i] + "\n";
    out +=
        "\nExtract the keywords relevant to the specific applications mentioned in the goal "
        "statement and constraints above. Just list the keywords as a single comma-separated "
        "line, nothing else.";
    return out;
}

std::vector<std::string> parse_keywords(const std::string& raw) {
    std::vector<std::string> keywords;
    std::set<std::string> seen;
    for (const auto& part : split(raw, ',')) {
        std::string kw = to_lower(trim(part));
        while (!kw.empty() && (kw.back() == '.' || kw.back() == '"')) kw.pop_back();
        while (!kw.empty() && kw.front() == '"') kw.erase(kw.begin());
        kw = trim(kw);
        if (kw.empty()) continue;
        if (seen.insert(kw).second) keywords.push_back(kw);
    }
    if (keywords.empty() || keywords.size() > 15)
        throw ParseError("expected 1..15 keywords, got " + std::to_string(keywords.size()),
                         keywords.size());
    return keywords;
}

std::vector<std::string> extract_keywords(const DesignTask& task, Backend& backend,
                                          const std::string& model_id, const RetryPolicy& policy,
                                          CallLog* log) {
    ChatRequest request;
    request.role_tag = RoleTag::keyword_extractor;
    request.user = keyword_extraction_prompt(task);
    request.model_id = model_id;
    ChatResponse response = complete(request, backend, policy, log);
    return parse_keywords(response.text);
}

}  // namespace accelmat
