#pragma once

#include <map>
#include <string>
#include <vector>

#include "fpl/injection.hpp"

namespace fpl {

// Knobs shared by every attack mode so comparisons stay paired.
struct SharedAttackConfig {
    CipConfig cip;  // epsilon <= 0 means "derive 0.5 * patch-feature std"
    int anchor_count = 10;
    int sessions_per_user = 2;
    int session_history_len = 6;

    bool operator==(const SharedAttackConfig&) const = default;
};

struct AttackOutcome {
    Dataset dataset;  // benign data merged with this mode's malicious subset
    AttackPlan plan;
    std::map<int, AnchorSet> anchors;
    std::map<int, PoisonedContent> overrides;
    std::map<int, CipTrace> traces;
    std::string description;
    bool anchors_sampled_with_replacement = false;
    double epsilon_used = 0.0;
};

// Applies one attack mode under the shared budget. Every mode with the same
// (seed, rho) compromises the identical user set; content-modifying modes
// run CIP variants against the proxy encoder.
AttackOutcome apply_baseline(AttackMode mode, const Dataset& d, const ProxyEncoder& proxy,
                             const std::vector<int>& targets, double rho,
                             const SharedAttackConfig& shared, SeededRng& rng);

}  // namespace fpl
