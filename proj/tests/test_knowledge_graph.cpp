#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <map>
#include <random>
#include <set>

#include "accelmat/errors.hpp"
#include "accelmat/knowledge_graph.hpp"

using namespace accelmat;

namespace {

const std::string kFixtures = ACCELMAT_FIXTURES_DIR;

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

/// Naive full-scan oracle applying the query's published contract from
/// scratch: case-insensitive substring match on name/description, neighbor
/// pull-in over HAS_PROPERTY, score = direct matches (+ links for
/// properties), ties by lower-cased name, truncation to top_k.
KGContext oracle_query(const KGStore& store, const std::vector<std::string>& keywords,
                       int top_k) {
    auto matches = [&](const KGEntity& e, const std::string& kw) {
        return lower(e.name).find(lower(kw)) != std::string::npos ||
               lower(e.description).find(lower(kw)) != std::string::npos;
    };
    auto direct_count = [&](const KGEntity& e) {
        int c = 0;
        for (const auto& kw : keywords)
            if (matches(e, kw)) ++c;
        return c;
    };

    std::vector<std::pair<int, const KGEntity*>> materials;
    std::set<std::string> matched_names;
    for (const auto& e : store.entities()) {
        if (e.kind != EntityKind::material) continue;
        int c = direct_count(e);
        if (c > 0) {
            materials.push_back({c, &e});
            matched_names.insert(lower(e.name));
        }
    }
    std::map<std::string, int> links;
    for (const auto& edge : store.edges())
        if (edge.relation == Relation::has_property && matched_names.count(lower(edge.subject)))
            ++links[lower(edge.object)];

    std::vector<std::pair<int, const KGEntity*>> properties;
    for (const auto& e : store.entities()) {
        if (e.kind != EntityKind::property) continue;
        int c = direct_count(e);
        int l = links.count(lower(e.name)) ? links[lower(e.name)] : 0;
        if (c > 0 || l > 0) properties.push_back({c + l, &e});
    }

    auto rank = [](std::vector<std::pair<int, const KGEntity*>>& xs) {
        std::sort(xs.begin(), xs.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return lower(a.second->name) < lower(b.second->name);
        });
    };
    rank(materials);
    rank(properties);

    KGContext ctx;
    for (const auto& [score, e] : materials) {
        if (static_cast<int>(ctx.materials.size()) >= top_k) break;
        ctx.materials.push_back({e->name, e->description});
    }
    for (const auto& [score, e] : properties) {
        if (static_cast<int>(ctx.properties.size()) >= top_k) break;
        ctx.properties.push_back({e->name, e->description});
    }
    return ctx;
}

}  // namespace

TEST_CASE("ingest builds entities and edges") {
    const std::string tsv =
        "Aluminum\tmaterial\tcorrosion resistant metal\n"
        "Corrosion Resistance\tproperty\tresists rust\n"
        "Aluminum\tHAS_PROPERTY\tCorrosion Resistance\n";
    auto store = KGStore::from_text(tsv);
    CHECK(store.entities().size() == 2);
    CHECK(store.edges().size() == 1);
    CHECK(store.find("aluminum") != nullptr);  // case-insensitive lookup
}

TEST_CASE("ingest rejects bad rows with row locators") {
    try {
        KGStore::from_text("A\tmaterial\tx\nB\tHAS_PROPERTY\tC\n", "snap.tsv");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.locator().find("row 2") != std::string::npos);
    }
    CHECK_THROWS_AS(KGStore::from_text("A\tweird_kind\tx\n"), SchemaError);
    CHECK_THROWS_AS(KGStore::from_text("A\tmaterial\n"), SchemaError);
    CHECK_THROWS_AS(KGStore::from_text("A\tmaterial\tx\nA\tmaterial\ty\n"), SchemaError);
    CHECK_THROWS_AS(KGStore::ingest("/nonexistent.tsv"), IoError);
}

TEST_CASE("edges may reference entities defined later in the file") {
    const std::string tsv =
        "Aluminum\tHAS_PROPERTY\tCorrosion Resistance\n"
        "Aluminum\tmaterial\tmetal\n"
        "Corrosion Resistance\tproperty\tresists rust\n";
    CHECK(KGStore::from_text(tsv).edges().size() == 1);
}

TEST_CASE("bundled snapshot is large enough and serves the context block") {
    auto store = KGStore::ingest(kFixtures + "/kg/snapshot.tsv");
    std::size_t materials = 0;
    for (const auto& e : store.entities())
        if (e.kind == EntityKind::material) ++materials;
    CHECK(materials >= 50);

    auto ctx = query(store, {"corrosion"}, 10);
    auto has = [&](const std::vector<KGContextItem>& items, const std::string& name) {
        return std::any_of(items.begin(), items.end(),
                           [&](const KGContextItem& i) { return i.name == name; });
    };
    CHECK(has(ctx.materials, "Aluminum"));
    CHECK(has(ctx.materials, "Zinc"));
    CHECK(has(ctx.properties, "Corrosion Resistance"));

    auto block = format_context(ctx);
    CHECK(block.find("Suggested Materials: \n") != std::string::npos);
    CHECK(block.find("Suggested Properties:\n") != std::string::npos);
    CHECK(block.find("Aluminum: Aluminum is known for its corrosion resistance") !=
          std::string::npos);

    auto graphene = query(store, {"barrier"}, 10);
    CHECK(has(graphene.materials, "Graphene"));
    CHECK(format_context(graphene).find("Graphene has excellent barrier properties") !=
          std::string::npos);
}

TEST_CASE("query basics") {
    auto store = KGStore::from_text(
        "Aluminum\tmaterial\tgreat corrosion resistance in seawater\n"
        "Epoxy\tmaterial\tadhesive resin\n"
        "Corrosion Resistance\tproperty\twithstands rust\n"
        "Aluminum\tHAS_PROPERTY\tCorrosion Resistance\n");
    auto ctx = query(store, {"corrosion"}, 10);
    REQUIRE(ctx.materials.size() == 1);
    CHECK(ctx.materials[0].name == "Aluminum");
    REQUIRE(ctx.properties.size() == 1);
    CHECK(ctx.properties[0].name == "Corrosion Resistance");

    CHECK(query(store, {"zzz-nothing"}, 5).empty());
    CHECK(query(store, {}, 5).empty());
    CHECK_THROWS_AS(query(store, {"x"}, 0), ConfigError);
}

TEST_CASE("randomized stores match the naive oracle") {
    std::mt19937_64 rng(2024);
    const std::vector<std::string> vocabulary = {
        "alpha", "beta",  "gamma", "delta", "epsilon", "zinc",  "steel", "oxide",
        "resin", "fiber", "nano",  "layer", "water",   "salt",  "heat",  "cold"};
    auto word = [&] { return vocabulary[rng() % vocabulary.size()]; };

    for (int iter = 0; iter < 100; ++iter) {
        KGStore store;
        const int entities = 1 + static_cast<int>(rng() % 30);
        std::vector<std::string> material_names, property_names;
        for (int i = 0; i < entities; ++i) {
            KGEntity e;
            e.name = word() + "-" + std::to_string(i);
            const int kind = static_cast<int>(rng() % 3);
            e.kind = kind == 0   ? EntityKind::material
                     : kind == 1 ? EntityKind::property
                                 : EntityKind::application;
            e.description = word() + " " + word() + " " + word();
            if (e.kind == EntityKind::material) material_names.push_back(e.name);
            if (e.kind == EntityKind::property) property_names.push_back(e.name);
            store.add_entity(e);
        }
        const int edges = static_cast<int>(rng() % 20);
        for (int i = 0; i < edges && !material_names.empty() && !property_names.empty(); ++i) {
            store.add_edge({material_names[rng() % material_names.size()],
                            Relation::has_property,
                            property_names[rng() % property_names.size()]});
        }
        std::vector<std::string> keywords;
        const int kw = 1 + static_cast<int>(rng() % 4);
        for (int i = 0; i < kw; ++i) keywords.push_back(word());
        const int top_k = 1 + static_cast<int>(rng() % 8);

        auto got = query(store, keywords, top_k);
        auto expected = oracle_query(store, keywords, top_k);
        REQUIRE(got == expected);

        // determinism + truncation + match soundness
        CHECK(query(store, keywords, top_k) == got);
        CHECK(got.materials.size() <= static_cast<std::size_t>(top_k));
        CHECK(got.properties.size() <= static_cast<std::size_t>(top_k));
        for (const auto& item : got.materials) {
            bool matched = false;
            for (const auto& k : keywords)
                if (lower(item.name).find(lower(k)) != std::string::npos ||
                    lower(item.note).find(lower(k)) != std::string::npos)
                    matched = true;
            CHECK(matched);
        }
    }
}

TEST_CASE("format_context omits empty sections") {
    CHECK(format_context(KGContext{}) == "");
    KGContext only_materials;
    only_materials.materials.push_back({"Aluminum", "light metal"});
    auto block = format_context(only_materials);
    CHECK(block.find("Suggested Materials: ") != std::string::npos);
    CHECK(block.find("Suggested Properties") == std::string::npos);
}

TEST_CASE("keyword parsing lowercases, dedups and bounds arity") {
    CHECK(parse_keywords("corrosion, offshore, self-healing") ==
          std::vector<std::string>{"corrosion", "offshore", "self-healing"});
    CHECK(parse_keywords("a, A, b") == std::vector<std::string>{"a", "b"});
    CHECK(parse_keywords("Single") == std::vector<std::string>{"single"});
    CHECK_THROWS_AS(parse_keywords(""), ParseError);
    CHECK_THROWS_AS(parse_keywords("a,b,c,d,e,f,g,h,i,j,k,l,m,n,o,p"), ParseError);
}

TEST_CASE("keyword extraction prompt carries goal and constraints") {
    DesignTask task{"t", "build a coating", {"cheap", "fast"}, std::nullopt, std::nullopt};
    auto prompt = keyword_extraction_prompt(task);
    CHECK(prompt.find("build a coating") != std::string::npos);
    CHECK(prompt.find("1) cheap") != std::string::npos);
    CHECK(prompt.find("2) fast") != std::string::npos);
    CHECK(prompt.find("comma-separated") != std::string::npos);
}
