#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>

#include "fpl/attack_ea.hpp"

using namespace fpl;

namespace {

constexpr int kVocab = 64;
constexpr int kPatchDim = 6;

ProxyEncoder small_encoder(std::uint64_t seed = 5) {
    EncoderDims dims;
    dims.dim = 16;
    dims.layer_count = 2;
    dims.head_count = 2;
    dims.head_dim = 8;
    return ProxyEncoder::from_seed(dims, kVocab, kPatchDim, seed);
}

CatalogConfig small_config(std::uint64_t seed = 21) {
    CatalogConfig cfg;
    cfg.item_count = 20;
    cfg.user_count = 50;
    cfg.category_count = 2;
    cfg.text_len = 6;
    cfg.patch_count = 4;
    cfg.patch_dim = kPatchDim;
    cfg.vocab_size = kVocab;
    cfg.hist_min = 4;
    cfg.hist_max = 8;
    cfg.seed = seed;
    return cfg;
}

// Hand-built dataset: category 0 holds items {0 (target), 2, 4}; category 1
// holds the rest. Counts: item 2 -> 5, item 4 -> 3, item 1 (cat 1) -> 9.
Dataset handmade() {
    CatalogConfig cfg = small_config();
    cfg.item_count = 6;
    Dataset d;
    d.config = cfg;
    d.user_count = 10;
    d.items = generate_catalog(cfg);
    auto add = [&](int user, int item, int pos) {
        d.interactions.push_back({user, item, pos, Provenance::Benign, Split::Train});
    };
    int user = 0;
    for (int i = 0; i < 5; ++i) add(user++, 2, 0);
    for (int i = 0; i < 3; ++i) add(user++, 4, 0);
    user = 0;
    for (int i = 0; i < 9; ++i) add(user++ % 10, 1, 1);
    return d;
}

}  // namespace

TEST_CASE("mine_anchors ranks by benign count within the target category") {
    Dataset d = handmade();
    AnchorSet a = mine_anchors(d, 0, 1);
    CHECK(a.anchors == std::vector<int>{2});
    CHECK(a.exposure_counts == std::vector<int>{5});

    // Larger n than the category pool returns the whole pool.
    AnchorSet all = mine_anchors(d, 0, 10);
    CHECK(all.anchors == std::vector<int>{2, 4});

    CHECK_THROWS_AS(mine_anchors(d, 0, 0), InvalidArgument);
}

TEST_CASE("mine_anchors matches a brute-force oracle on random logs") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        CatalogConfig cfg = small_config(100 + seed);
        auto items = generate_catalog(cfg);
        Dataset d = generate_interactions(cfg, items, Setting::ZeroShot, {0});
        int n = 1 + static_cast<int>(seed % 7);
        AnchorSet got = mine_anchors(d, 0, n);

        std::map<int, int> counts;
        for (const auto& x : d.interactions)
            if (x.provenance == Provenance::Benign) counts[x.item]++;
        std::vector<std::pair<int, int>> oracle;
        for (const auto& it : items)
            if (it.id != 0 && it.category == items[0].category)
                oracle.emplace_back(it.id, counts.count(it.id) ? counts[it.id] : 0);
        std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        std::vector<int> expect;
        for (std::size_t i = 0; i < oracle.size() && static_cast<int>(i) < n; ++i)
            expect.push_back(oracle[i].first);
        CHECK(got.anchors == expect);
    }
}

TEST_CASE("mine_anchors ignores interaction ordering") {
    Dataset d = handmade();
    AnchorSet before = mine_anchors(d, 0, 2);
    std::reverse(d.interactions.begin(), d.interactions.end());
    AnchorSet after = mine_anchors(d, 0, 2);
    CHECK(before == after);
}

TEST_CASE("mine_anchors fails when the category has no other items") {
    CatalogConfig cfg = small_config();
    cfg.item_count = 2;  // item 0 cat0, item 1 cat1
    Dataset d;
    d.config = cfg;
    d.user_count = 1;
    d.items = generate_catalog(cfg);
    d.interactions.push_back({0, 1, 0, Provenance::Benign, Split::Train});
    CHECK_THROWS_AS(mine_anchors(d, 0, 3), InvalidArgument);
}

TEST_CASE("compute_centroid basics") {
    ProxyEncoder enc = small_encoder();
    CatalogConfig cfg = small_config();
    auto items = generate_catalog(cfg);

    AnchorSet single{{2}, {5}};
    Centroid c = compute_centroid(enc, items, single);
    Vec direct = enc.encode(items[2].text, items[2].patches).fused;
    for (std::size_t i = 0; i < direct.size(); ++i)
        CHECK(c.z_star[i] == doctest::Approx(direct[i]).epsilon(1e-9));
    CHECK(l2_norm(c.z_star) == doctest::Approx(1.0).epsilon(1e-9));

    AnchorSet twice{{2, 2}, {5, 5}};
    Centroid c2 = compute_centroid(enc, items, twice);
    for (std::size_t i = 0; i < direct.size(); ++i)
        CHECK(c2.z_star[i] == doctest::Approx(direct[i]).epsilon(1e-9));

    AnchorSet empty;
    CHECK_THROWS_AS(compute_centroid(enc, items, empty), InvalidArgument);
}

TEST_CASE("compute_centroid rejects a cancelled mean") {
    // Opposite fused vectors average to zero; fabricate via a 1-item proxy
    // trick: encode is deterministic, so feed anchors whose fused vectors are
    // u and -u by patching the centroid inputs directly.
    ProxyEncoder enc = small_encoder();
    CatalogConfig cfg = small_config();
    auto items = generate_catalog(cfg);
    Vec u = enc.encode(items[0].text, items[0].patches).fused;

    // No catalog pair encodes to exact opposites, so check the guard at the
    // numeric level instead: a mean below 1e-9 must throw.
    Vec tiny(u.size(), 0.0);
    CHECK_THROWS_AS(l2_normalize(tiny), DegenerateInput);
}

TEST_CASE("alignment_loss spans [0,2] with the expected anchors") {
    ProxyEncoder enc = small_encoder();
    CatalogConfig cfg = small_config();
    auto items = generate_catalog(cfg);

    // Content whose fused vector equals z_star: centroid of the item itself.
    AnchorSet self{{3}, {1}};
    Centroid c = compute_centroid(enc, items, self);
    CHECK(alignment_loss(enc, items[3].text, items[3].patches, c) ==
          doctest::Approx(0.0).epsilon(1e-9));

    // Orthogonal and opposite destinations via handcrafted centroids.
    Vec fused = enc.encode(items[3].text, items[3].patches).fused;
    Centroid ortho = c;
    ortho.z_star.assign(fused.size(), 0.0);
    // Build a vector orthogonal to fused with Gram-Schmidt on a basis vector.
    Vec e0(fused.size(), 0.0);
    e0[0] = 1.0;
    double proj = dot(e0, fused);
    for (std::size_t i = 0; i < fused.size(); ++i) ortho.z_star[i] = e0[i] - proj * fused[i];
    ortho.z_star = l2_normalize(ortho.z_star);
    CHECK(alignment_loss(enc, items[3].text, items[3].patches, ortho) ==
          doctest::Approx(1.0).epsilon(1e-9));

    Centroid opposite = c;
    for (auto& x : opposite.z_star) x = -x;
    CHECK(alignment_loss(enc, items[3].text, items[3].patches, opposite) ==
          doctest::Approx(2.0).epsilon(1e-9));
}
