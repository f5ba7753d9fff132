#pragma once

#include <string>
#include <vector>

#include "fpl/catalog.hpp"
#include "fpl/proxy_encoder.hpp"

namespace fpl {

// High-exposure items sharing the target's category, ranked by how often
// benign users interacted with them.
struct AnchorSet {
    std::vector<int> anchors;          // descending exposure, ties by ascending id
    std::vector<int> exposure_counts;  // aligned with anchors

    bool operator==(const AnchorSet&) const = default;
};

// The attack destination: unit-norm centroid of the anchors' fused proxy
// representations.
struct Centroid {
    Vec z_star;
    std::vector<int> source_anchors;
    std::string proxy_digest;

    bool operator==(const Centroid&) const = default;
};

AnchorSet mine_anchors(const Dataset& d, int target, int n);

Centroid compute_centroid(const ProxyEncoder& enc, const std::vector<Item>& catalog,
                          const AnchorSet& anchors);

// 1 - cos(phi(text, patches), z_star), in [0, 2].
double alignment_loss(const ProxyEncoder& enc, const std::vector<int>& text, const Mat& patches,
                      const Centroid& c);

}  // namespace fpl
