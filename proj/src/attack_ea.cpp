#include "fpl/attack_ea.hpp"

#include <algorithm>
#include <map>

namespace fpl {

AnchorSet mine_anchors(const Dataset& d, int target, int n) {
    if (n < 1) throw InvalidArgument("mine_anchors: n must be >= 1");
    const Item& tgt = d.item(target);

    // Benign interaction counts are the observable popularity proxy.
    std::map<int, int> counts;
    for (const Interaction& x : d.interactions)
        if (x.provenance == Provenance::Benign) counts[x.item]++;

    std::vector<std::pair<int, int>> pool;  // (item, count)
    for (const Item& it : d.items) {
        if (it.id == target || it.category != tgt.category) continue;
        auto found = counts.find(it.id);
        pool.emplace_back(it.id, found == counts.end() ? 0 : found->second);
    }
    if (pool.empty())
        throw InvalidArgument("mine_anchors: target category has no other items");

    std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(pool.size()) > n) pool.resize(static_cast<std::size_t>(n));

    AnchorSet out;
    for (const auto& [id, count] : pool) {
        out.anchors.push_back(id);
        out.exposure_counts.push_back(count);
    }
    return out;
}

Centroid compute_centroid(const ProxyEncoder& enc, const std::vector<Item>& catalog,
                          const AnchorSet& anchors) {
    if (anchors.anchors.empty()) throw InvalidArgument("compute_centroid: empty anchor set");
    Vec mean(static_cast<std::size_t>(enc.dims().dim), 0.0);
    for (int id : anchors.anchors) {
        if (id < 0 || static_cast<std::size_t>(id) >= catalog.size())
            throw InvalidArgument("compute_centroid: anchor " + std::to_string(id) +
                                  " not in catalog");
        const Item& it = catalog[static_cast<std::size_t>(id)];
        Vec z = enc.encode(it.text, it.patches).fused;
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += z[j];
    }
    for (auto& x : mean) x /= static_cast<double>(anchors.anchors.size());
    if (!(l2_norm(mean) > 1e-9))
        throw DegenerateInput("compute_centroid: anchor mean is numerically zero");

    Centroid c;
    c.z_star = l2_normalize(mean);
    c.source_anchors = anchors.anchors;
    c.proxy_digest = to_hex(fnv1a(std::to_string(enc.weights().token_embedding.a.front()) + ":" +
                                  std::to_string(enc.weights().patch_projection.a.front())));
    return c;
}

double alignment_loss(const ProxyEncoder& enc, const std::vector<int>& text, const Mat& patches,
                      const Centroid& c) {
    Vec fused = enc.encode(text, patches).fused;
    return 1.0 - cosine(fused, c.z_star);
}

}  // namespace fpl
