#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fpl/attack_ea.hpp"
#include "fpl/catalog.hpp"
#include "fpl/proxy_encoder.hpp"

namespace fpl {

struct CipConfig {
    double epsilon = 0.5;          // l-inf budget per patch-feature coordinate
    double eta = 0.125;            // visual step size
    int rounds = 10;               // R
    int k_txt = 4;                 // token mask size
    int k_vis = 3;                 // patch-row mask size
    int probe_count = 16;          // C random sign patterns per visual step
    int candidate_count = 8;       // M nearest-token candidates per position
    double coherence_tol = 0.10;   // allowed |consistency - clean| drift
    double stop_threshold = 0.995; // stop once cos(fused, z*) reaches this
    int max_token_edits = 3;
    bool interactive = true;       // recompute masks each round
    bool enable_visual = true;
    bool enable_textual = true;
    std::uint64_t seed = 1;
    // Extra replacement tokens offered to the greedy text search besides the
    // embedding-nearest ones; callers fill this with vocabulary drawn from
    // the anchor items so edits can move content, not just embeddings.
    std::vector<int> candidate_tokens;

    bool operator==(const CipConfig&) const = default;
    void validate() const;
};

struct PoisonedContent {
    std::vector<int> text;
    Mat patches;
    std::set<int> edited_token_positions;  // positions differing from the original
    Mat patch_delta;                       // patches - original

    bool operator==(const PoisonedContent&) const = default;
};

struct RoundMasks {
    std::vector<std::size_t> text_mask;  // ascending indices
    std::vector<std::size_t> vis_mask;

    bool operator==(const RoundMasks&) const = default;
};

struct CipTrace {
    Vec alignment;                 // cos(fused, z*) before round 1, then per round
    std::vector<RoundMasks> masks; // per executed round
    std::vector<std::string> accepted_edits;
    std::string termination;       // "threshold" or "budget"
    double clean_consistency = 0.0;
};

// Mean attention received/emitted per token row and patch column.
std::pair<Vec, Vec> saliency_scores(const Mat& attention);

struct MaskResult {
    std::vector<std::size_t> indices;  // ascending
    bool clamped = false;              // k exceeded the axis length
};

MaskResult build_mask(const Vec& scores, int k);

// The C random sign patterns probed by a visual step, one row per masked
// patch row. Exposed so tests can replay the exact candidate set.
std::vector<Mat> sample_sign_patterns(SeededRng& rng, std::size_t mask_rows, std::size_t coords,
                                      int count);

PoisonedContent visual_step(const ProxyEncoder& enc, const Centroid& c, PoisonedContent content,
                            const Mat& original_patches, const std::vector<std::size_t>& vis_mask,
                            const CipConfig& cfg, double clean_consistency, SeededRng& rng);

PoisonedContent textual_step(const ProxyEncoder& enc, const Centroid& c, PoisonedContent content,
                             const std::vector<int>& original_text,
                             const std::vector<std::size_t>& txt_mask, const Vec& txt_saliency,
                             const CipConfig& cfg, double clean_consistency,
                             std::vector<std::string>* edit_log = nullptr);

std::pair<PoisonedContent, CipTrace> run_cip(const ProxyEncoder& enc, const Centroid& c,
                                             const Item& item, const CipConfig& cfg);

// Pooled standard deviation of every patch-feature value in the catalog;
// the default epsilon is half of this.
double patch_feature_std(const std::vector<Item>& catalog);

}  // namespace fpl
