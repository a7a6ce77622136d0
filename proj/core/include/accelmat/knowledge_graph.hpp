#pragma once

#include <string>
#include <vector>

#include "accelmat/dataset.hpp"
#include "accelmat/llm_gateway.hpp"

namespace accelmat {

enum class EntityKind { material, property, application };
enum class Relation { has_property, used_for };

const char* to_string(EntityKind kind);
const char* to_string(Relation relation);

struct KGEntity {
    std::string name;
    EntityKind kind = EntityKind::material;
    std::string description;
};

struct KGEdge {
    std::string subject;
    Relation relation = Relation::has_property;
    std::string object;
};

/// Immutable-after-ingest materials knowledge store: named entities plus
/// HAS_PROPERTY / USED_FOR links. Names are unique case-insensitively.
class KGStore {
public:
    /// TSV rows: `name<TAB>kind<TAB>description` (kind: material|property|
    /// application) or `subject<TAB>relation<TAB>object` (relation:
    /// HAS_PROPERTY|USED_FOR). Blank lines and #-comments skipped. Edges may
    /// reference entities from any row; dangling endpoints are rejected.
    static KGStore ingest(const std::string& path);
    static KGStore from_text(const std::string& text, const std::string& origin = "<memory>");

    void add_entity(KGEntity entity);
    void add_edge(KGEdge edge);  // endpoints must already exist

    const KGEntity* find(const std::string& name) const;  // case-insensitive
    const std::vector<KGEntity>& entities() const { return entities_; }
    const std::vector<KGEdge>& edges() const { return edges_; }

private:
    std::vector<KGEntity> entities_;
    std::vector<KGEdge> edges_;
};

struct KGContextItem {
    std::string name;
    std::string note;

    bool operator==(const KGContextItem&) const = default;
};

/// Retrieval result: suggested materials and properties, each capped at top_k.
struct KGContext {
    std::vector<KGContextItem> materials;
    std::vector<KGContextItem> properties;

    bool empty() const { return materials.empty() && properties.empty(); }
    bool operator==(const KGContext&) const = default;
};

/// Lexical retrieval. An entity matches a keyword when the keyword appears
/// case-insensitively in its name or description. Matched materials pull in
/// their HAS_PROPERTY neighbors. Each list is ranked by match count (links
/// from matched materials count for properties), ties broken by name, and
/// truncated to top_k.
KGContext query(const KGStore& store, const std::vector<std::string>& keywords, int top_k);

/// Renders the prompt block: "Suggested Materials:" lines then "Suggested
/// Properties:" lines; empty sections omitted; empty context -> "".
std::string format_context(const KGContext& context);

/// Prompt asking for a comma-separated keyword list for a task.
std::string keyword_extraction_prompt(const DesignTask& task);

/// Splits a comma-separated keyword response: trimmed, lower-cased,
/// de-duplicated; 1..15 keywords accepted.
std::vector<std::string> parse_keywords(const std::string& raw);

/// Full extraction step: prompt the keyword_extractor seat, parse the reply.
std::vector<std::string> extract_keywords(const DesignTask& task, Backend& backend,
                                          const std::string& model_id,
                                          const RetryPolicy& policy = {}, CallLog* log = nullptr);

}  // namespace accelmat
