#include "fpl/baselines.hpp"

#include <algorithm>
#include <map>

namespace fpl {

namespace {

// Anchor mining for a plan: per-target category anchors with every target
// filtered out, so multi-target plans never anchor on each other.
std::map<int, AnchorSet> plan_anchors(const Dataset& d, const std::vector<int>& targets, int n) {
    std::map<int, AnchorSet> out;
    for (int t : targets) {
        AnchorSet mined = mine_anchors(d, t, n + static_cast<int>(targets.size()));
        AnchorSet filtered;
        for (std::size_t i = 0; i < mined.anchors.size(); ++i) {
            if (std::find(targets.begin(), targets.end(), mined.anchors[i]) != targets.end())
                continue;
            if (static_cast<int>(filtered.anchors.size()) == n) break;
            filtered.anchors.push_back(mined.anchors[i]);
            filtered.exposure_counts.push_back(mined.exposure_counts[i]);
        }
        if (filtered.anchors.empty())
            throw InvalidArgument("apply_baseline: no usable anchors for target " +
                                  std::to_string(t));
        out[t] = std::move(filtered);
    }
    return out;
}

AnchorSet uniform_pool(const Dataset& d, const std::vector<int>& exclude) {
    AnchorSet pool;
    for (const Item& it : d.items) {
        if (std::find(exclude.begin(), exclude.end(), it.id) != exclude.end()) continue;
        pool.anchors.push_back(it.id);
        pool.exposure_counts.push_back(0);
    }
    return pool;
}

AnchorSet popular_pool(const Dataset& d, const std::vector<int>& targets, int n) {
    std::map<int, int> counts;
    for (const Interaction& x : d.interactions)
        if (x.provenance == Provenance::Benign) counts[x.item]++;
    std::vector<std::pair<int, int>> ranked;  // (item, count)
    for (const Item& it : d.items) {
        if (std::find(targets.begin(), targets.end(), it.id) != targets.end()) continue;
        ranked.emplace_back(it.id, counts.count(it.id) ? counts[it.id] : 0);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(ranked.size()) > n) ranked.resize(static_cast<std::size_t>(n));
    AnchorSet pool;
    for (const auto& [id, count] : ranked) {
        pool.anchors.push_back(id);
        pool.exposure_counts.push_back(count);
    }
    return pool;
}

std::map<int, AnchorSet> same_pool_for_all(const std::vector<int>& targets, AnchorSet pool) {
    std::map<int, AnchorSet> out;
    for (int t : targets) out[t] = pool;
    return out;
}

}  // namespace

AttackOutcome apply_baseline(AttackMode mode, const Dataset& d, const ProxyEncoder& proxy,
                             const std::vector<int>& targets, double rho,
                             const SharedAttackConfig& shared, SeededRng& rng) {
    SeededRng plan_rng = rng.child("plan");
    AttackPlan plan = build_attack_plan(d, targets, rho, mode, plan_rng);
    plan.sessions_per_user = shared.sessions_per_user;
    plan.session_history_len = shared.session_history_len;

    AttackOutcome out;
    out.plan = plan;

    if (mode == AttackMode::NoAttack) {
        out.dataset = d;
        out.description = "identity: no malicious sessions, no content edits";
        return out;
    }

    CipConfig cip = shared.cip;
    if (cip.epsilon <= 0.0) cip.epsilon = 0.5 * patch_feature_std(d.items);
    if (cip.eta <= 0.0) cip.eta = cip.epsilon / 4.0;
    out.epsilon_used = cip.epsilon;

    bool content_mode = false;
    switch (mode) {
        case AttackMode::DirectBoost:
            out.anchors = same_pool_for_all(targets, uniform_pool(d, {}));
            out.description = "interaction-level: uniform histories over all items, clean content";
            break;
        case AttackMode::RandomAttack:
            out.anchors = same_pool_for_all(targets, uniform_pool(d, targets));
            out.description = "interaction-level: uniform filler histories, clean content";
            break;
        case AttackMode::PopularAttack:
            out.anchors =
                same_pool_for_all(targets, popular_pool(d, targets, shared.anchor_count));
            out.description = "interaction-level: globally popular histories, clean content";
            break;
        case AttackMode::TabOnly:
            out.anchors = plan_anchors(d, targets, shared.anchor_count);
            out.description = "exposure-aligned sessions only, clean content";
            break;
        case AttackMode::ImgOnly:
        case AttackMode::TabImg:
            cip.enable_textual = false;
            content_mode = true;
            out.description = "exposure-aligned sessions plus visual-only perturbation";
            break;
        case AttackMode::TxtOnly:
            cip.enable_visual = false;
            content_mode = true;
            out.description = "exposure-aligned sessions plus textual-only perturbation";
            break;
        case AttackMode::TabImgTxtIndependent:
            cip.interactive = false;
            content_mode = true;
            out.description =
                "exposure-aligned sessions plus both perturbations with masks frozen on clean content";
            break;
        case AttackMode::FullCip:
            content_mode = true;
            out.description = "exposure-aligned sessions plus interactive cross-modal perturbation";
            break;
        default:
            throw InvalidArgument("apply_baseline: unhandled mode");
    }

    if (content_mode) {
        out.anchors = plan_anchors(d, targets, shared.anchor_count);
        for (int t : targets) {
            Centroid c = compute_centroid(proxy, d.items, out.anchors.at(t));
            CipConfig per_target = cip;
            per_target.seed = rng.child("cip:" + std::to_string(t)).seed();
            // Tokens common in the anchors' texts are offered to the greedy
            // edit search; they carry the anchor vocabulary into the target.
            std::map<int, int> tok_freq;
            for (int a : out.anchors.at(t).anchors)
                for (int tok : d.item(a).text) tok_freq[tok]++;
            std::vector<std::pair<int, int>> ranked(tok_freq.begin(), tok_freq.end());
            std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
                if (x.second != y.second) return x.second > y.second;
                return x.first < y.first;
            });
            for (std::size_t i = 0; i < ranked.size() &&
                                    i < 2 * static_cast<std::size_t>(cip.candidate_count);
                 ++i)
                per_target.candidate_tokens.push_back(ranked[i].first);
            auto [content, trace] = run_cip(proxy, c, d.item(t), per_target);
            out.overrides[t] = std::move(content);
            out.traces[t] = std::move(trace);
        }
    }

    SeededRng session_rng = rng.child("sessions");
    CraftedSessions crafted =
        craft_sessions(plan, out.anchors, out.overrides, d.items, session_rng);
    out.anchors_sampled_with_replacement = crafted.sampled_with_replacement;
    out.dataset = merge_datasets(d, crafted.sessions, crafted.overrides);
    return out;
}

}  // namespace fpl
