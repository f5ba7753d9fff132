#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fpl/catalog.hpp"

using namespace fpl;

namespace {

CatalogConfig small_config() {
    CatalogConfig cfg;
    cfg.item_count = 24;
    cfg.user_count = 40;
    cfg.category_count = 2;
    cfg.text_len = 8;
    cfg.patch_count = 4;
    cfg.patch_dim = 6;
    cfg.vocab_size = 128;
    cfg.hist_min = 5;
    cfg.hist_max = 9;
    cfg.seed = 21;
    return cfg;
}

Vec mean_patch_row(const Item& it) {
    Vec m(it.patches.cols, 0.0);
    for (std::size_t p = 0; p < it.patches.rows; ++p)
        for (std::size_t f = 0; f < it.patches.cols; ++f) m[f] += it.patches(p, f);
    for (auto& x : m) x /= static_cast<double>(it.patches.rows);
    return m;
}

std::string temp_path(const char* name) {
    return std::string("./") + name;
}

}  // namespace

TEST_CASE("generate_catalog structure and determinism") {
    CatalogConfig cfg = small_config();
    cfg.item_count = 10;
    auto items = generate_catalog(cfg);
    REQUIRE(items.size() == 10);
    int per_cat[2] = {0, 0};
    for (const auto& it : items) {
        CHECK(it.text.size() == 8);
        for (int t : it.text) {
            CHECK(t >= 0);
            CHECK(t < cfg.vocab_size);
        }
        per_cat[it.category]++;
    }
    CHECK(per_cat[0] > 0);
    CHECK(per_cat[1] > 0);

    auto again = generate_catalog(cfg);
    CHECK(items == again);
}

TEST_CASE("within-category patch similarity exceeds cross-category") {
    auto items = generate_catalog(small_config());
    std::vector<Vec> means;
    means.reserve(items.size());
    for (const auto& it : items) means.push_back(mean_patch_row(it));

    double within = 0.0, cross = 0.0;
    int n_within = 0, n_cross = 0;
    for (std::size_t i = 0; i < items.size(); ++i)
        for (std::size_t j = i + 1; j < items.size(); ++j) {
            double c = cosine(means[i], means[j]);
            if (items[i].category == items[j].category) {
                within += c;
                ++n_within;
            } else {
                cross += c;
                ++n_cross;
            }
        }
    CHECK(within / n_within > cross / n_cross);
}

TEST_CASE("within-category token overlap exceeds cross-category") {
    auto items = generate_catalog(small_config());
    auto overlap = [](const Item& a, const Item& b) {
        int n = 0;
        for (int t : a.text)
            if (std::find(b.text.begin(), b.text.end(), t) != b.text.end()) ++n;
        return static_cast<double>(n);
    };
    double within = 0.0, cross = 0.0;
    int n_within = 0, n_cross = 0;
    for (std::size_t i = 0; i < items.size(); ++i)
        for (std::size_t j = i + 1; j < items.size(); ++j) {
            if (items[i].category == items[j].category) {
                within += overlap(items[i], items[j]);
                ++n_within;
            } else {
                cross += overlap(items[i], items[j]);
                ++n_cross;
            }
        }
    CHECK(within / n_within > cross / n_cross);
}

TEST_CASE("zero_shot excludes targets from benign interactions") {
    CatalogConfig cfg = small_config();
    auto items = generate_catalog(cfg);
    std::set<int> targets = {3, 7};
    Dataset d = generate_interactions(cfg, items, Setting::ZeroShot, targets);
    int touched = 0;
    for (const auto& x : d.interactions)
        if (targets.count(x.item)) ++touched;
    CHECK(touched == 0);
}

TEST_CASE("few_shot places each target in exactly few_shot_count benign interactions") {
    CatalogConfig cfg = small_config();
    cfg.few_shot_count = 5;
    auto items = generate_catalog(cfg);
    std::set<int> targets = {3, 7};
    Dataset d = generate_interactions(cfg, items, Setting::FewShot, targets);
    std::map<int, int> count;
    for (const auto& x : d.interactions) {
        CHECK(x.provenance == Provenance::Benign);
        if (targets.count(x.item)) {
            count[x.item]++;
            CHECK(x.split == Split::Train);
        }
    }
    CHECK(count[3] == 5);
    CHECK(count[7] == 5);
}

TEST_CASE("empirical item frequency is non-increasing in popularity rank") {
    CatalogConfig cfg = small_config();
    cfg.user_count = 400;
    auto items = generate_catalog(cfg);
    Dataset d = generate_interactions(cfg, items, Setting::ZeroShot, {0});

    Vec w = item_popularity_weights(cfg);
    std::vector<int> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return w[a] > w[b]; });

    std::map<int, int> freq;
    for (const auto& x : d.interactions) freq[x.item]++;

    // Bucket by rank to smooth sampling noise, then require monotone buckets.
    const int bucket = 6;
    std::vector<double> bucket_mean;
    for (std::size_t i = 0; i < order.size(); i += bucket) {
        double s = 0.0;
        int n = 0;
        for (std::size_t j = i; j < std::min(order.size(), i + bucket); ++j) {
            s += freq[order[j]];
            ++n;
        }
        bucket_mean.push_back(s / n);
    }
    for (std::size_t i = 0; i + 1 < bucket_mean.size(); ++i)
        CHECK(bucket_mean[i] >= bucket_mean[i + 1]);
}

TEST_CASE("split labels follow leave-last-out exactly once per user") {
    CatalogConfig cfg = small_config();
    auto items = generate_catalog(cfg);
    Dataset d = generate_interactions(cfg, items, Setting::ZeroShot, {0});
    auto by_user = group_by_user(d);
    REQUIRE(static_cast<int>(by_user.size()) == cfg.user_count);
    for (const auto& h : by_user) {
        REQUIRE(!h.empty());
        int n_val = 0, n_test = 0;
        for (std::size_t i = 0; i + 1 < h.size(); ++i) CHECK(h[i].position < h[i + 1].position);
        for (const auto& x : h) {
            if (x.split == Split::Validation) ++n_val;
            if (x.split == Split::Test) ++n_test;
        }
        CHECK(n_val == 1);
        CHECK(n_test == 1);
        CHECK(h[h.size() - 2].split == Split::Validation);
        CHECK(h.back().split == Split::Test);
    }
}

TEST_CASE("interaction generation errors") {
    CatalogConfig cfg = small_config();
    auto items = generate_catalog(cfg);
    CHECK_THROWS_AS(generate_interactions(cfg, items, Setting::ZeroShot, {}), InvalidArgument);
    CHECK_THROWS_AS(generate_interactions(cfg, items, Setting::ZeroShot, {999}), InvalidArgument);
    CatalogConfig bad = cfg;
    bad.hist_min = 2;
    CHECK_THROWS_AS(generate_interactions(bad, items, Setting::ZeroShot, {0}), InvalidArgument);
    bad = cfg;
    bad.hist_max = cfg.item_count;  // pool after removing a target is too small
    CHECK_THROWS_AS(generate_interactions(bad, items, Setting::ZeroShot, {0}), InvalidArgument);
}

TEST_CASE("dataset round trip is exact") {
    CatalogConfig cfg = small_config();
    cfg.item_count = 10;
    cfg.user_count = 12;
    auto items = generate_catalog(cfg);
    Dataset d = generate_interactions(cfg, items, Setting::FewShot, {2});
    std::string path = temp_path("roundtrip.fpl");
    write_dataset(d, path);
    Dataset d2 = read_dataset(path);
    CHECK(d == d2);
    std::remove(path.c_str());
}

TEST_CASE("read_dataset reports truncation with line numbers") {
    CatalogConfig cfg = small_config();
    cfg.item_count = 6;
    cfg.user_count = 5;
    cfg.hist_min = 4;
    cfg.hist_max = 5;
    auto items = generate_catalog(cfg);
    Dataset d = generate_interactions(cfg, items, Setting::ZeroShot, {1});
    std::string path = temp_path("trunc.fpl");
    write_dataset(d, path);

    // Chop the third line in half.
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    in.close();
    lines[2] = lines[2].substr(0, lines[2].size() / 2);
    std::ofstream out(path);
    for (const auto& l : lines) out << l << "\n";
    out.close();

    try {
        read_dataset(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("read_dataset rejects unknown schema versions") {
    std::string path = temp_path("version.fpl");
    {
        std::ofstream out(path);
        out << "#fpl-dataset v9 deadbeef item_count=1\n";
    }
    CHECK_THROWS_AS(read_dataset(path), SchemaVersionError);
    std::remove(path.c_str());
}

TEST_CASE("read_dataset rejects missing files and bad headers") {
    CHECK_THROWS_AS(read_dataset("./no-such-file.fpl"), IoError);
    std::string path = temp_path("badheader.fpl");
    {
        std::ofstream out(path);
        out << "not a dataset\n";
    }
    CHECK_THROWS_AS(read_dataset(path), ParseError);
    std::remove(path.c_str());
}
