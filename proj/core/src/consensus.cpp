#include "accelmat/consensus.hpp"

#include <set>

#include "accelmat/errors.hpp"

namespace accelmat {

ConsensusResult consensus(const std::vector<CriticVerdictSet>& verdict_sets, int n) {
    if (n < 1) throw ArityMismatch("consensus needs n >= 1");
    if (verdict_sets.empty()) throw ArityMismatch("consensus needs at least one critic");

    std::vector<std::set<int>> yes_sets;
    for (const auto& set : verdict_sets) {
        if (set.verdicts.size() != static_cast<std::size_t>(n))
            throw ArityMismatch("critic " + std::string(to_string(set.critic_id)) + " has " +
                                std::to_string(set.verdicts.size()) + " verdicts, expected " +
                                std::to_string(n));
        std::set<int> yes;
        for (const auto& v : set.verdicts) {
            if (v.index < 1 || v.index > n)
                throw ArityMismatch("verdict index " + std::to_string(v.index) +
                                    " outside 1.." + std::to_string(n));
            if (v.meets == Verdict::yes) yes.insert(v.index);
        }
        yes_sets.push_back(std::move(yes));
    }

    ConsensusResult result;
    for (const auto& yes : yes_sets)
        result.per_critic_yes_counts.push_back(static_cast<int>(yes.size()));
    for (int i = 1; i <= n; ++i) {
        bool all_yes = true;
        for (const auto& yes : yes_sets)
            if (!yes.count(i)) {
                all_yes = false;
                break;
            }
        if (all_yes) result.agreed_indices.push_back(i);
    }
    result.unanimous = result.agreed_indices.size() == static_cast<std::size_t>(n);
    return result;
}

}  // namespace accelmat
