#pragma once

#include <map>
#include <string>
#include <vector>

#include "fpl/attack_cip.hpp"
#include "fpl/attack_ea.hpp"
#include "fpl/catalog.hpp"

namespace fpl {

enum class AttackMode {
    NoAttack,
    DirectBoost,
    RandomAttack,
    PopularAttack,
    TabOnly,
    ImgOnly,
    TxtOnly,
    TabImg,
    TabImgTxtIndependent,
    FullCip,
};

const char* to_string(AttackMode m);
AttackMode attack_mode_from_string(const std::string& s);

struct AttackPlan {
    std::vector<int> targets;
    double rho = 0.02;
    std::vector<int> compromised_users;
    int sessions_per_user = 2;
    int session_history_len = 6;
    AttackMode mode = AttackMode::FullCip;

    bool operator==(const AttackPlan&) const = default;
};

struct MaliciousSession {
    int user = 0;
    std::vector<int> history;  // anchor item ids
    int label = 0;             // target item id

    bool operator==(const MaliciousSession&) const = default;
};

// Samples floor(rho * |U|) compromised users without replacement.
AttackPlan build_attack_plan(const Dataset& d, const std::vector<int>& targets, double rho,
                             AttackMode mode, SeededRng& rng);

struct CraftedSessions {
    std::vector<MaliciousSession> sessions;
    std::map<int, PoisonedContent> overrides;  // target -> poisoned UGC
    bool sampled_with_replacement = false;     // anchor pool smaller than history length
};

// Builds sessions_per_user sessions per compromised user. Histories sample
// the label target's anchor set; labels rotate round-robin over the targets.
// Content-modifying modes must supply poisoned content for every target.
CraftedSessions craft_sessions(const AttackPlan& plan,
                               const std::map<int, AnchorSet>& anchors_by_target,
                               const std::map<int, PoisonedContent>& poisoned,
                               const std::vector<Item>& catalog, SeededRng& rng);

// Benign data plus the malicious sessions, with target catalog entries
// replaced by their poisoned content. Malicious interactions are train-only
// and occupy gapped consecutive position runs after each user's history.
Dataset merge_datasets(const Dataset& benign, const std::vector<MaliciousSession>& sessions,
                       const std::map<int, PoisonedContent>& overrides);

}  // namespace fpl
