#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "accelmat/consensus.hpp"
#include "accelmat/errors.hpp"

using namespace accelmat;

namespace {

CriticVerdictSet make_set(RoleTag critic, const std::vector<Verdict>& verdicts) {
    CriticVerdictSet set;
    set.critic_id = critic;
    for (std::size_t i = 0; i < verdicts.size(); ++i)
        set.verdicts.push_back({static_cast<int>(i + 1), verdicts[i], ""});
    return set;
}

std::vector<Verdict> all(int n, Verdict v) {
    return std::vector<Verdict>(static_cast<std::size_t>(n), v);
}

/// Independent oracle: per-critic yes-sets intersected with std::set_intersection.
std::vector<int> oracle_intersection(const std::vector<CriticVerdictSet>& sets, int n) {
    std::set<int> agreed;
    for (int i = 1; i <= n; ++i) agreed.insert(i);
    for (const auto& critic : sets) {
        std::set<int> yes;
        for (const auto& v : critic.verdicts)
            if (v.meets == Verdict::yes) yes.insert(v.index);
        std::set<int> next;
        std::set_intersection(agreed.begin(), agreed.end(), yes.begin(), yes.end(),
                              std::inserter(next, next.begin()));
        agreed = std::move(next);
    }
    return {agreed.begin(), agreed.end()};
}

}  // namespace

TEST_CASE("identity case: everyone approves everything") {
    std::vector<CriticVerdictSet> sets = {make_set(RoleTag::critic_1, all(20, Verdict::yes)),
                                          make_set(RoleTag::critic_2, all(20, Verdict::yes)),
                                          make_set(RoleTag::critic_3, all(20, Verdict::yes))};
    auto result = consensus(sets, 20);
    CHECK(result.unanimous);
    CHECK(result.agreed_indices.size() == 20);
    CHECK(result.per_critic_yes_counts == std::vector<int>{20, 20, 20});
}

TEST_CASE("a split panel on suggestion 20 excludes it") {
    auto v1 = all(20, Verdict::yes);
    auto v2 = all(20, Verdict::yes);
    auto v3 = all(20, Verdict::yes);
    v1[19] = Verdict::no;
    v2[19] = Verdict::no;
    // critic 3 keeps yes on 20
    std::vector<CriticVerdictSet> sets = {make_set(RoleTag::critic_1, v1),
                                          make_set(RoleTag::critic_2, v2),
                                          make_set(RoleTag::critic_3, v3)};
    auto result = consensus(sets, 20);
    CHECK_FALSE(result.unanimous);
    CHECK(result.agreed_indices.size() == 19);
    CHECK(std::find(result.agreed_indices.begin(), result.agreed_indices.end(), 20) ==
          result.agreed_indices.end());
    CHECK(result.per_critic_yes_counts == std::vector<int>{19, 19, 20});
}

TEST_CASE("unparseable counts as not agreed") {
    auto v = all(3, Verdict::yes);
    v[1] = Verdict::unparseable;
    auto result = consensus({make_set(RoleTag::critic_1, v)}, 3);
    CHECK(result.agreed_indices == std::vector<int>{1, 3});
}

TEST_CASE("exhaustive oracle equivalence for all small verdict matrices") {
    // every yes/no matrix with n*critics <= 12
    for (int critics = 1; critics <= 4; ++critics) {
        for (int n = 1; n * critics <= 12; ++n) {
            const int cells = n * critics;
            for (long mask = 0; mask < (1L << cells); ++mask) {
                std::vector<CriticVerdictSet> sets;
                for (int c = 0; c < critics; ++c) {
                    std::vector<Verdict> row;
                    for (int i = 0; i < n; ++i)
                        row.push_back((mask >> (c * n + i)) & 1 ? Verdict::yes : Verdict::no);
                    sets.push_back(make_set(critic_role(static_cast<std::size_t>(c % 3)), row));
                }
                auto result = consensus(sets, n);
                REQUIRE(result.agreed_indices == oracle_intersection(sets, n));
                REQUIRE(result.unanimous ==
                        (result.agreed_indices.size() == static_cast<std::size_t>(n)));
            }
        }
    }
}

TEST_CASE("random larger instances match the oracle") {
    std::mt19937_64 rng(555);
    for (int iter = 0; iter < 1000; ++iter) {
        const int n = 1 + static_cast<int>(rng() % 20);
        const int critics = 1 + static_cast<int>(rng() % 3);
        std::vector<CriticVerdictSet> sets;
        for (int c = 0; c < critics; ++c) {
            std::vector<Verdict> row;
            for (int i = 0; i < n; ++i) {
                const int r = static_cast<int>(rng() % 10);
                row.push_back(r < 6 ? Verdict::yes : (r < 9 ? Verdict::no : Verdict::unparseable));
            }
            sets.push_back(make_set(critic_role(static_cast<std::size_t>(c)), row));
        }
        auto result = consensus(sets, n);
        REQUIRE(result.agreed_indices == oracle_intersection(sets, n));

        // order-independence
        auto shuffled = sets;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(consensus(shuffled, n).agreed_indices == result.agreed_indices);

        // monotonicity: one more critic never grows the agreed set
        std::vector<Verdict> extra;
        for (int i = 0; i < n; ++i) extra.push_back(rng() % 2 ? Verdict::yes : Verdict::no);
        sets.push_back(make_set(RoleTag::critic_3, extra));
        auto grown = consensus(sets, n);
        CHECK(std::includes(result.agreed_indices.begin(), result.agreed_indices.end(),
                            grown.agreed_indices.begin(), grown.agreed_indices.end()));
    }
}

TEST_CASE("single critic: agreed set equals its yes-set") {
    std::mt19937_64 rng(77);
    for (int iter = 0; iter < 50; ++iter) {
        const int n = 1 + static_cast<int>(rng() % 20);
        std::vector<Verdict> row;
        std::vector<int> expected;
        for (int i = 0; i < n; ++i) {
            bool yes = rng() % 2;
            row.push_back(yes ? Verdict::yes : Verdict::no);
            if (yes) expected.push_back(i + 1);
        }
        CHECK(consensus({make_set(RoleTag::critic_1, row)}, n).agreed_indices == expected);
    }
}

TEST_CASE("arity violations rejected") {
    CHECK_THROWS_AS(consensus({}, 3), ArityMismatch);
    CHECK_THROWS_AS(consensus({make_set(RoleTag::critic_1, all(2, Verdict::yes))}, 3),
                    ArityMismatch);
}
