#include "fpl/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fpl {

namespace {

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

double parse_double(const std::string& tok, int line) {
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw ParseError("bad float '" + tok + "'", line);
    return v;
}

long parse_long(const std::string& tok, int line) {
    char* end = nullptr;
    long v = std::strtol(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0') throw ParseError("bad integer '" + tok + "'", line);
    return v;
}

}  // namespace

const char* to_string(Provenance p) { return p == Provenance::Benign ? "benign" : "malicious"; }

const char* to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        default: return "test";
    }
}

const char* to_string(Setting s) { return s == Setting::FewShot ? "few_shot" : "zero_shot"; }

std::string CatalogConfig::to_kv() const {
    std::ostringstream os;
    os << "category_count=" << category_count << " few_shot_count=" << few_shot_count
       << " hist_max=" << hist_max << " hist_min=" << hist_min << " item_count=" << item_count
       << " patch_count=" << patch_count << " patch_dim=" << patch_dim
       << " popularity_skew=" << fmt_double(popularity_skew) << " seed=" << seed
       << " text_len=" << text_len << " user_count=" << user_count << " vocab_size=" << vocab_size;
    return os.str();
}

CatalogConfig CatalogConfig::from_kv(const std::string& kv) {
    CatalogConfig cfg;
    std::istringstream is(kv);
    std::string pair;
    while (is >> pair) {
        auto eq = pair.find('=');
        if (eq == std::string::npos) throw ParseError("bad config pair '" + pair + "'", 1);
        std::string key = pair.substr(0, eq);
        std::string val = pair.substr(eq + 1);
        if (key == "category_count") cfg.category_count = static_cast<int>(parse_long(val, 1));
        else if (key == "few_shot_count") cfg.few_shot_count = static_cast<int>(parse_long(val, 1));
        else if (key == "hist_max") cfg.hist_max = static_cast<int>(parse_long(val, 1));
        else if (key == "hist_min") cfg.hist_min = static_cast<int>(parse_long(val, 1));
        else if (key == "item_count") cfg.item_count = static_cast<int>(parse_long(val, 1));
        else if (key == "patch_count") cfg.patch_count = static_cast<int>(parse_long(val, 1));
        else if (key == "patch_dim") cfg.patch_dim = static_cast<int>(parse_long(val, 1));
        else if (key == "popularity_skew") cfg.popularity_skew = parse_double(val, 1);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(val, 1));
        else if (key == "text_len") cfg.text_len = static_cast<int>(parse_long(val, 1));
        else if (key == "user_count") cfg.user_count = static_cast<int>(parse_long(val, 1));
        else if (key == "vocab_size") cfg.vocab_size = static_cast<int>(parse_long(val, 1));
        else throw ParseError("unknown config key '" + key + "'", 1);
    }
    return cfg;
}

std::string CatalogConfig::digest() const { return to_hex(fnv1a(to_kv())); }

const Item& Dataset::item(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= items.size())
        throw InvalidArgument("item id " + std::to_string(id) + " out of range");
    return items[static_cast<std::size_t>(id)];
}

namespace {

void validate_config(const CatalogConfig& cfg) {
    if (cfg.item_count <= 0 || cfg.user_count <= 0 || cfg.category_count <= 0 ||
        cfg.text_len <= 0 || cfg.patch_count <= 0 || cfg.patch_dim <= 0 || cfg.vocab_size <= 0)
        throw InvalidArgument("catalog config: all counts must be positive");
    if (cfg.popularity_skew < 0.0) throw InvalidArgument("catalog config: popularity_skew must be >= 0");
    if (cfg.category_count > cfg.item_count)
        throw InvalidArgument("catalog config: more categories than items");
}

// The vocabulary is split into per-category pools plus a shared tail, so
// same-category items overlap in token usage.
struct TokenPools {
    int pool_size;     // tokens per category pool
    int global_start;  // first shared token
};

TokenPools token_pools(const CatalogConfig& cfg) {
    int pool = cfg.vocab_size / (2 * cfg.category_count);
    if (pool <= 0) throw InvalidArgument("vocabulary too small for category token pools");
    return {pool, pool * cfg.category_count};
}

std::vector<int> sample_distinct_tokens(SeededRng& rng, int lo, int hi, int k) {
    if (hi - lo < k)
        throw InvalidArgument("vocabulary pool [" + std::to_string(lo) + "," + std::to_string(hi) +
                              ") smaller than requested " + std::to_string(k) +
                              " tokens for sampling without replacement");
    auto idx = rng.sample_without_replacement(static_cast<std::size_t>(hi - lo),
                                              static_cast<std::size_t>(k));
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    for (auto i : idx) out.push_back(lo + static_cast<int>(i));
    return out;
}

}  // namespace

std::vector<Item> generate_catalog(const CatalogConfig& cfg) {
    validate_config(cfg);
    SeededRng root(cfg.seed);
    TokenPools pools = token_pools(cfg);

    // Category style directions in patch-feature space.
    std::vector<Vec> styles(static_cast<std::size_t>(cfg.category_count));
    for (int c = 0; c < cfg.category_count; ++c) {
        SeededRng r = root.child("cat_style:" + std::to_string(c));
        Vec s(static_cast<std::size_t>(cfg.patch_dim));
        for (auto& x : s) x = r.normal();
        styles[static_cast<std::size_t>(c)] = s;
    }

    int n_cat_tokens = (2 * cfg.text_len) / 3;
    int n_global_tokens = cfg.text_len - n_cat_tokens;

    std::vector<Item> items;
    items.reserve(static_cast<std::size_t>(cfg.item_count));
    for (int i = 0; i < cfg.item_count; ++i) {
        SeededRng r = root.child("item:" + std::to_string(i));
        Item it;
        it.id = i;
        it.category = i % cfg.category_count;

        auto cat_toks = sample_distinct_tokens(r, it.category * pools.pool_size,
                                               (it.category + 1) * pools.pool_size, n_cat_tokens);
        auto glob_toks =
            sample_distinct_tokens(r, pools.global_start, cfg.vocab_size, n_global_tokens);
        it.text = cat_toks;
        it.text.insert(it.text.end(), glob_toks.begin(), glob_toks.end());
        r.shuffle(it.text);

        // Patch rows: category style + item identity + per-patch noise.
        Vec ident(static_cast<std::size_t>(cfg.patch_dim));
        for (auto& x : ident) x = r.normal();
        it.patches = Mat(static_cast<std::size_t>(cfg.patch_count),
                         static_cast<std::size_t>(cfg.patch_dim));
        const Vec& style = styles[static_cast<std::size_t>(it.category)];
        for (int p = 0; p < cfg.patch_count; ++p)
            for (int f = 0; f < cfg.patch_dim; ++f)
                it.patches(static_cast<std::size_t>(p), static_cast<std::size_t>(f)) =
                    style[static_cast<std::size_t>(f)] + 1.0 * ident[static_cast<std::size_t>(f)] +
                    0.5 * r.normal();
        ensure_finite(it.patches, "item patches");
        items.push_back(std::move(it));
    }
    return items;
}

Vec item_popularity_weights(const CatalogConfig& cfg) {
    validate_config(cfg);
    SeededRng r = SeededRng(cfg.seed).child("popularity");
    std::vector<int> order(static_cast<std::size_t>(cfg.item_count));
    for (int i = 0; i < cfg.item_count; ++i) order[static_cast<std::size_t>(i)] = i;
    r.shuffle(order);
    Vec w(static_cast<std::size_t>(cfg.item_count), 0.0);
    for (int rank = 0; rank < cfg.item_count; ++rank)
        w[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)])] =
            1.0 / std::pow(static_cast<double>(rank + 1), cfg.popularity_skew);
    return w;
}

namespace {

// Weighted draw from the cumulative distribution; zero-weight items never come up.
int weighted_draw(SeededRng& rng, const Vec& cumulative) {
    double total = cumulative.back();
    double x = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    if (it == cumulative.end()) --it;
    return static_cast<int>(it - cumulative.begin());
}

}  // namespace

Dataset generate_interactions(const CatalogConfig& cfg, std::vector<Item> items, Setting mode,
                              const std::set<int>& target_items) {
    validate_config(cfg);
    if (target_items.empty()) throw InvalidArgument("generate_interactions: target set is empty");
    for (int t : target_items)
        if (t < 0 || t >= cfg.item_count)
            throw InvalidArgument("target item " + std::to_string(t) + " not in catalog");
    int pool = cfg.item_count - static_cast<int>(target_items.size());
    if (cfg.hist_min < 4 || cfg.hist_max < cfg.hist_min || cfg.hist_max > pool)
        throw InvalidArgument("history range infeasible: need 4 <= hist_min <= hist_max <= " +
                              std::to_string(pool));

    SeededRng root(cfg.seed);
    Vec weights = item_popularity_weights(cfg);
    for (int t : target_items) weights[static_cast<std::size_t>(t)] = 0.0;  // targets never sampled
    Vec cumulative(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        cumulative[i] = acc;
    }

    Dataset d;
    d.config = cfg;
    d.items = std::move(items);
    d.user_count = cfg.user_count;

    std::vector<std::vector<int>> histories(static_cast<std::size_t>(cfg.user_count));
    for (int u = 0; u < cfg.user_count; ++u) {
        SeededRng r = root.child("user:" + std::to_string(u));
        int len = cfg.hist_min + static_cast<int>(r.uniform_int(
                                     static_cast<std::uint64_t>(cfg.hist_max - cfg.hist_min + 1)));
        std::vector<int>& h = histories[static_cast<std::size_t>(u)];
        std::set<int> seen;
        while (static_cast<int>(h.size()) < len) {
            int it = weighted_draw(r, cumulative);
            if (seen.insert(it).second) h.push_back(it);
        }
    }

    if (mode == Setting::FewShot) {
        // Each target shows up in exactly few_shot_count benign interactions,
        // spliced into train positions of distinct users.
        for (int t : target_items) {
            SeededRng r = root.child("fewshot:" + std::to_string(t));
            auto users = r.sample_without_replacement(static_cast<std::size_t>(cfg.user_count),
                                                      static_cast<std::size_t>(cfg.few_shot_count));
            for (auto uz : users) {
                std::vector<int>& h = histories[uz];
                int train_slots = static_cast<int>(h.size()) - 2;
                int p = static_cast<int>(r.uniform_int(static_cast<std::uint64_t>(train_slots)));
                // Keep one target occurrence per slot even when users overlap across targets.
                while (target_items.count(h[static_cast<std::size_t>(p)])) p = (p + 1) % train_slots;
                h[static_cast<std::size_t>(p)] = t;
            }
        }
    }

    for (int u = 0; u < cfg.user_count; ++u) {
        const auto& h = histories[static_cast<std::size_t>(u)];
        int len = static_cast<int>(h.size());
        for (int p = 0; p < len; ++p) {
            Split s = p < len - 2 ? Split::Train : (p == len - 2 ? Split::Validation : Split::Test);
            d.interactions.push_back({u, h[static_cast<std::size_t>(p)], p, Provenance::Benign, s});
        }
    }
    return d;
}

void write_dataset(const Dataset& d, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    std::string kv = d.config.to_kv();
    f << "#fpl-dataset v1 " << to_hex(fnv1a(kv)) << " " << kv << "\n";
    for (const Item& it : d.items) {
        f << "I " << it.id << " " << it.category;
        for (int t : it.text) f << " " << t;
        f << " |";
        for (double x : it.patches.a) f << " " << fmt_double(x);
        f << "\n";
    }
    for (const Interaction& x : d.interactions)
        f << "X " << x.user << " " << x.item << " " << x.position << " " << to_string(x.provenance)
          << " " << to_string(x.split) << "\n";
    if (!f) throw IoError("write failed for '" + path + "'");
}

Dataset read_dataset(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    int line_no = 0;

    if (!std::getline(f, line)) throw ParseError("empty dataset file", 1);
    line_no = 1;
    std::istringstream is(line);
    std::string magic, version, digest;
    if (!(is >> magic >> version >> digest) || magic != "#fpl-dataset")
        throw ParseError("missing #fpl-dataset header", 1);
    if (version != "v1") throw SchemaVersionError(version, "v1");
    std::string kv;
    std::getline(is, kv);
    if (!kv.empty() && kv.front() == ' ') kv.erase(kv.begin());
    if (to_hex(fnv1a(kv)) != digest) throw ParseError("config digest mismatch in header", 1);

    Dataset d;
    d.config = CatalogConfig::from_kv(kv);
    d.user_count = d.config.user_count;

    const CatalogConfig& cfg = d.config;
    std::size_t patch_vals =
        static_cast<std::size_t>(cfg.patch_count) * static_cast<std::size_t>(cfg.patch_dim);
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "I") {
            Item it;
            std::string tok;
            if (!(ls >> it.id >> it.category)) throw ParseError("truncated item record", line_no);
            it.text.reserve(static_cast<std::size_t>(cfg.text_len));
            for (int i = 0; i < cfg.text_len; ++i) {
                if (!(ls >> tok) || tok == "|") throw ParseError("truncated token list", line_no);
                it.text.push_back(static_cast<int>(parse_long(tok, line_no)));
            }
            if (!(ls >> tok) || tok != "|") throw ParseError("expected '|' separator", line_no);
            it.patches = Mat(static_cast<std::size_t>(cfg.patch_count),
                             static_cast<std::size_t>(cfg.patch_dim));
            for (std::size_t i = 0; i < patch_vals; ++i) {
                if (!(ls >> tok)) throw ParseError("truncated patch values", line_no);
                it.patches.a[i] = parse_double(tok, line_no);
            }
            d.items.push_back(std::move(it));
        } else if (tag == "X") {
            Interaction x;
            std::string prov, split;
            if (!(ls >> x.user >> x.item >> x.position >> prov >> split))
                throw ParseError("truncated interaction record", line_no);
            if (prov == "benign") x.provenance = Provenance::Benign;
            else if (prov == "malicious") x.provenance = Provenance::Malicious;
            else throw ParseError("unknown provenance '" + prov + "'", line_no);
            if (split == "train") x.split = Split::Train;
            else if (split == "validation") x.split = Split::Validation;
            else if (split == "test") x.split = Split::Test;
            else throw ParseError("unknown split '" + split + "'", line_no);
            d.interactions.push_back(x);
        } else {
            throw ParseError("unknown record tag '" + tag + "'", line_no);
        }
    }
    return d;
}

std::vector<std::vector<Interaction>> group_by_user(const Dataset& d) {
    std::vector<std::vector<Interaction>> by_user(static_cast<std::size_t>(d.user_count));
    for (const Interaction& x : d.interactions) {
        if (x.user < 0 || x.user >= d.user_count)
            throw InvalidArgument("interaction references unknown user " + std::to_string(x.user));
        by_user[static_cast<std::size_t>(x.user)].push_back(x);
    }
    for (auto& v : by_user)
        std::sort(v.begin(), v.end(),
                  [](const Interaction& a, const Interaction& b) { return a.position < b.position; });
    return by_user;
}

}  // namespace fpl
