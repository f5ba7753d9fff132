#include "fpl/injection.hpp"

#include <algorithm>
#include <cmath>

namespace fpl {

const char* to_string(AttackMode m) {
    switch (m) {
        case AttackMode::NoAttack: return "no_attack";
        case AttackMode::DirectBoost: return "direct_boost";
        case AttackMode::RandomAttack: return "random_attack";
        case AttackMode::PopularAttack: return "popular_attack";
        case AttackMode::TabOnly: return "tab_only";
        case AttackMode::ImgOnly: return "img_only";
        case AttackMode::TxtOnly: return "txt_only";
        case AttackMode::TabImg: return "tab_img";
        case AttackMode::TabImgTxtIndependent: return "tab_img_txt_independent";
        default: return "full_cip";
    }
}

AttackMode attack_mode_from_string(const std::string& s) {
    if (s == "no_attack") return AttackMode::NoAttack;
    if (s == "direct_boost") return AttackMode::DirectBoost;
    if (s == "random_attack") return AttackMode::RandomAttack;
    if (s == "popular_attack") return AttackMode::PopularAttack;
    if (s == "tab_only") return AttackMode::TabOnly;
    if (s == "img_only") return AttackMode::ImgOnly;
    if (s == "txt_only") return AttackMode::TxtOnly;
    if (s == "tab_img") return AttackMode::TabImg;
    if (s == "tab_img_txt_independent") return AttackMode::TabImgTxtIndependent;
    if (s == "full_cip") return AttackMode::FullCip;
    throw InvalidArgument("unknown attack mode '" + s + "'");
}

AttackPlan build_attack_plan(const Dataset& d, const std::vector<int>& targets, double rho,
                             AttackMode mode, SeededRng& rng) {
    if (targets.empty()) throw InvalidArgument("build_attack_plan: targets must be nonempty");
    if (!(rho > 0.0) || rho >= 1.0) throw InvalidArgument("build_attack_plan: rho must be in (0, 1)");
    for (int t : targets) (void)d.item(t);

    auto budget = static_cast<std::size_t>(std::floor(rho * static_cast<double>(d.user_count)));
    if (budget == 0)
        throw InvalidArgument("build_attack_plan: rho budget floors to zero compromised users");

    AttackPlan plan;
    plan.targets = targets;
    plan.rho = rho;
    plan.mode = mode;
    for (auto u : rng.sample_without_replacement(static_cast<std::size_t>(d.user_count), budget))
        plan.compromised_users.push_back(static_cast<int>(u));
    return plan;
}

CraftedSessions craft_sessions(const AttackPlan& plan,
                               const std::map<int, AnchorSet>& anchors_by_target,
                               const std::map<int, PoisonedContent>& poisoned,
                               const std::vector<Item>& catalog, SeededRng& rng) {
    if (plan.targets.empty()) throw InvalidArgument("craft_sessions: plan has no targets");
    if (plan.session_history_len < 1)
        throw InvalidArgument("craft_sessions: session history length must be >= 1");
    bool content_mode =
        plan.mode != AttackMode::NoAttack && plan.mode != AttackMode::DirectBoost &&
        plan.mode != AttackMode::RandomAttack && plan.mode != AttackMode::PopularAttack &&
        plan.mode != AttackMode::TabOnly;
    for (int t : plan.targets) {
        if (t < 0 || static_cast<std::size_t>(t) >= catalog.size())
            throw InvalidArgument("craft_sessions: target not in catalog");
        if (!anchors_by_target.count(t))
            throw InvalidArgument("craft_sessions: no anchor set for target " + std::to_string(t));
        if (content_mode && !poisoned.count(t))
            throw InvalidArgument("craft_sessions: missing poisoned content for target " +
                                  std::to_string(t));
    }

    CraftedSessions out;
    out.overrides = poisoned;
    const auto h = static_cast<std::size_t>(plan.session_history_len);

    std::size_t session_counter = 0;
    for (int user : plan.compromised_users) {
        for (int s = 0; s < plan.sessions_per_user; ++s) {
            int target = plan.targets[session_counter % plan.targets.size()];
            ++session_counter;
            const AnchorSet& anchors = anchors_by_target.at(target);
            MaliciousSession ms;
            ms.user = user;
            ms.label = target;
            if (anchors.anchors.size() >= h) {
                for (auto i : rng.sample_without_replacement(anchors.anchors.size(), h))
                    ms.history.push_back(anchors.anchors[i]);
            } else {
                out.sampled_with_replacement = true;
                for (std::size_t i = 0; i < h; ++i)
                    ms.history.push_back(
                        anchors.anchors[rng.uniform_int(anchors.anchors.size())]);
            }
            out.sessions.push_back(std::move(ms));
        }
    }
    return out;
}

Dataset merge_datasets(const Dataset& benign, const std::vector<MaliciousSession>& sessions,
                       const std::map<int, PoisonedContent>& overrides) {
    Dataset out = benign;
    for (const auto& [id, content] : overrides) {
        if (id < 0 || static_cast<std::size_t>(id) >= out.items.size())
            throw InvalidArgument("merge_datasets: override for unknown item " + std::to_string(id));
        Item& it = out.items[static_cast<std::size_t>(id)];
        if (content.text.size() != it.text.size() ||
            content.patches.rows != it.patches.rows || content.patches.cols != it.patches.cols)
            throw InvalidArgument("merge_datasets: override shape mismatch for item " +
                                  std::to_string(id));
        it.text = content.text;
        it.patches = content.patches;
    }

    // Sessions land on gapped consecutive position runs so training can
    // recover session boundaries from positions alone.
    std::map<int, int> next_pos;
    for (const Interaction& x : benign.interactions)
        next_pos[x.user] = std::max(next_pos[x.user], x.position + 2);

    for (const MaliciousSession& s : sessions) {
        if (s.user < 0 || s.user >= out.user_count)
            throw InvalidArgument("merge_datasets: session for unknown user " +
                                  std::to_string(s.user));
        int pos = next_pos[s.user];
        for (int item : s.history)
            out.interactions.push_back({s.user, item, pos++, Provenance::Malicious, Split::Train});
        out.interactions.push_back({s.user, s.label, pos++, Provenance::Malicious, Split::Train});
        next_pos[s.user] = pos + 1;  // gap before the user's next session
    }
    return out;
}

}  // namespace fpl
