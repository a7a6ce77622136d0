#pragma once

#include <vector>

#include "accelmat/agent_io.hpp"

namespace accelmat {

/// Indices approved by every critic in a cycle.
struct ConsensusResult {
    std::vector<int> agreed_indices;         // sorted, 1-based
    std::vector<int> per_critic_yes_counts;  // one per critic, roster order
    bool unanimous = false;                  // agreed covers all n indices

    bool operator==(const ConsensusResult&) const = default;
};

/// Intersection of the critics' yes-sets. An unparseable verdict counts as
/// not-yes. Requires >= 1 critic, each with exactly n verdicts.
ConsensusResult consensus(const std::vector<CriticVerdictSet>& verdict_sets, int n);

}  // namespace accelmat
