#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "fpl/numkit.hpp"

namespace fpl {

enum class Provenance { Benign, Malicious };
enum class Split { Train, Validation, Test };
enum class Setting { FewShot, ZeroShot };

// One catalog entry: discrete token sequence plus a patch-feature matrix.
struct Item {
    int id = 0;
    int category = 0;
    std::vector<int> text;  // length text_len, token ids < vocab_size
    Mat patches;            // patch_count x patch_dim

    bool operator==(const Item&) const = default;
};

struct Interaction {
    int user = 0;
    int item = 0;
    int position = 0;  // strictly increasing per user
    Provenance provenance = Provenance::Benign;
    Split split = Split::Train;

    bool operator==(const Interaction&) const = default;
};

struct CatalogConfig {
    int item_count = 200;
    int user_count = 1000;
    int category_count = 4;
    int text_len = 12;    // tokens per item
    int patch_count = 9;  // patch rows per item
    int patch_dim = 16;   // features per patch
    int vocab_size = 512;
    int hist_min = 6;
    int hist_max = 14;
    double popularity_skew = 1.0;
    int few_shot_count = 5;
    std::uint64_t seed = 1;

    bool operator==(const CatalogConfig&) const = default;

    // Canonical "key=value ..." form; feeds the file header and digests.
    std::string to_kv() const;
    static CatalogConfig from_kv(const std::string& kv);
    std::string digest() const;
};

struct Dataset {
    CatalogConfig config;
    std::vector<Item> items;
    int user_count = 0;
    std::vector<Interaction> interactions;

    bool operator==(const Dataset&) const = default;

    const Item& item(int id) const;
};

std::vector<Item> generate_catalog(const CatalogConfig& cfg);

// Zipf-style sampling weight per item id, deterministic per seed. Shared by
// interaction generation and low-exposure target selection.
Vec item_popularity_weights(const CatalogConfig& cfg);

Dataset generate_interactions(const CatalogConfig& cfg, std::vector<Item> items, Setting mode,
                              const std::set<int>& target_items);

void write_dataset(const Dataset& d, const std::string& path);
Dataset read_dataset(const std::string& path);

// Interactions per user, ordered by position.
std::vector<std::vector<Interaction>> group_by_user(const Dataset& d);

const char* to_string(Provenance p);
const char* to_string(Split s);
const char* to_string(Setting s);

}  // namespace fpl
