#include "fpl/attack_cip.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fpl {

void CipConfig::validate() const {
    if (!(epsilon > 0.0)) throw InvalidArgument("cip: epsilon must be positive");
    if (!(eta > 0.0)) throw InvalidArgument("cip: eta must be positive");
    if (rounds < 0) throw InvalidArgument("cip: rounds must be >= 0");
    if (k_txt < 1 || k_vis < 1) throw InvalidArgument("cip: mask sizes must be >= 1");
    if (probe_count < 1) throw InvalidArgument("cip: probe_count must be >= 1");
    if (candidate_count < 1) throw InvalidArgument("cip: candidate_count must be >= 1");
    if (coherence_tol < 0.0) throw InvalidArgument("cip: coherence_tol must be >= 0");
    if (!(stop_threshold > 0.0) || stop_threshold > 1.0)
        throw InvalidArgument("cip: stop_threshold must be in (0, 1]");
    if (max_token_edits < 0) throw InvalidArgument("cip: max_token_edits must be >= 0");
}

std::pair<Vec, Vec> saliency_scores(const Mat& attention) {
    if (attention.rows == 0 || attention.cols == 0)
        throw InvalidArgument("saliency_scores: empty attention matrix");
    Vec s_txt(attention.rows, 0.0);
    Vec s_vis(attention.cols, 0.0);
    for (std::size_t r = 0; r < attention.rows; ++r)
        for (std::size_t c = 0; c < attention.cols; ++c) {
            s_txt[r] += attention(r, c);
            s_vis[c] += attention(r, c);
        }
    for (auto& x : s_txt) x /= static_cast<double>(attention.cols);
    for (auto& x : s_vis) x /= static_cast<double>(attention.rows);
    return {s_txt, s_vis};
}

MaskResult build_mask(const Vec& scores, int k) {
    if (k < 1) throw InvalidArgument("build_mask: k must be >= 1");
    MaskResult out;
    out.clamped = static_cast<std::size_t>(k) > scores.size();
    std::size_t take = std::min(static_cast<std::size_t>(k), scores.size());

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    out.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(out.indices.begin(), out.indices.end());
    return out;
}

std::vector<Mat> sample_sign_patterns(SeededRng& rng, std::size_t mask_rows, std::size_t coords,
                                      int count) {
    std::vector<Mat> patterns;
    patterns.reserve(static_cast<std::size_t>(count));
    for (int c = 0; c < count; ++c) {
        Mat p(mask_rows, coords);
        for (auto& x : p.a) x = static_cast<double>(rng.sign());
        patterns.push_back(std::move(p));
    }
    return patterns;
}

namespace {

double clip(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

double consistency(const ProxyEncoder& enc, const std::vector<int>& text, const Mat& patches) {
    return cosine(enc.modality_embed_text(text), enc.modality_embed_visual(patches));
}

double alignment(const ProxyEncoder& enc, const std::vector<int>& text, const Mat& patches,
                 const Centroid& c) {
    return cosine(enc.encode(text, patches).fused, c.z_star);
}

void refresh_delta(PoisonedContent& content, const Mat& original_patches) {
    content.patch_delta = Mat(content.patches.rows, content.patches.cols);
    for (std::size_t i = 0; i < content.patches.a.size(); ++i)
        content.patch_delta.a[i] = content.patches.a[i] - original_patches.a[i];
}

}  // namespace

PoisonedContent visual_step(const ProxyEncoder& enc, const Centroid& c, PoisonedContent content,
                            const Mat& original_patches, const std::vector<std::size_t>& vis_mask,
                            const CipConfig& cfg, double clean_consistency, SeededRng& rng) {
    if (vis_mask.empty()) return content;
    if (content.patches.rows != original_patches.rows ||
        content.patches.cols != original_patches.cols)
        throw InvalidArgument("visual_step: patch shape mismatch");

    const std::size_t coords = content.patches.cols;
    auto patterns = sample_sign_patterns(rng, vis_mask.size(), coords, cfg.probe_count);

    // The zero candidate (keep current patches) is always admissible, which
    // makes the per-round alignment non-decreasing.
    double best_cos = alignment(enc, content.text, content.patches, c);
    Mat best = content.patches;

    for (const Mat& pat : patterns) {
        Mat cand = content.patches;
        for (std::size_t i = 0; i < vis_mask.size(); ++i) {
            std::size_t row = vis_mask[i];
            if (row >= cand.rows) throw InvalidArgument("visual_step: mask row out of range");
            for (std::size_t f = 0; f < coords; ++f) {
                double lo = original_patches(row, f) - cfg.epsilon;
                double hi = original_patches(row, f) + cfg.epsilon;
                cand(row, f) = clip(cand(row, f) + cfg.eta * pat(i, f), lo, hi);
            }
        }
        if (std::abs(consistency(enc, content.text, cand) - clean_consistency) >
            cfg.coherence_tol)
            continue;
        double cand_cos = alignment(enc, content.text, cand, c);
        if (cand_cos > best_cos) {
            best_cos = cand_cos;
            best = cand;
        }
    }

    content.patches = std::move(best);
    refresh_delta(content, original_patches);
    return content;
}

PoisonedContent textual_step(const ProxyEncoder& enc, const Centroid& c, PoisonedContent content,
                             const std::vector<int>& original_text,
                             const std::vector<std::size_t>& txt_mask, const Vec& txt_saliency,
                             const CipConfig& cfg, double clean_consistency,
                             std::vector<std::string>* edit_log) {
    if (txt_mask.empty() || cfg.max_token_edits == 0) return content;
    if (content.text.size() != original_text.size())
        throw InvalidArgument("textual_step: text length mismatch");

    const Mat& emb = enc.weights().token_embedding;
    const int vocab = static_cast<int>(emb.rows);

    // Positions are visited most-salient first.
    std::vector<std::size_t> order = txt_mask;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (txt_saliency[a] != txt_saliency[b]) return txt_saliency[a] > txt_saliency[b];
        return a < b;
    });

    double cur_cos = alignment(enc, content.text, content.patches, c);

    for (std::size_t pos : order) {
        if (pos >= content.text.size()) throw InvalidArgument("textual_step: mask out of range");
        int cur_tok = content.text[pos];

        // Replacement pool: the M nearest tokens in embedding cosine space
        // (fluency analog) plus any caller-provided content-level tokens
        // (anchor vocabulary). The current token is always a candidate.
        std::vector<int> candidates = {cur_tok};
        Vec cur_row(emb.cols);
        for (std::size_t j = 0; j < emb.cols; ++j)
            cur_row[j] = emb(static_cast<std::size_t>(cur_tok), j);
        std::vector<std::pair<double, int>> sims;
        sims.reserve(static_cast<std::size_t>(vocab));
        for (int t = 0; t < vocab; ++t) {
            if (t == cur_tok) continue;
            Vec row(emb.cols);
            for (std::size_t j = 0; j < emb.cols; ++j) row[j] = emb(static_cast<std::size_t>(t), j);
            sims.emplace_back(cosine(cur_row, row), t);
        }
        std::sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (int i = 0; i < cfg.candidate_count && static_cast<std::size_t>(i) < sims.size(); ++i)
            candidates.push_back(sims[static_cast<std::size_t>(i)].second);
        for (int extra : cfg.candidate_tokens) {
            if (extra < 0 || extra >= vocab) continue;
            if (std::find(candidates.begin(), candidates.end(), extra) == candidates.end())
                candidates.push_back(extra);
        }

        int best_tok = cur_tok;
        double best_cos = cur_cos;
        for (int cand : candidates) {
            if (cand == cur_tok) continue;  // keep-current is the incumbent
            // Edit budget: a candidate that restores the original token frees
            // a slot; a new position must fit in the budget.
            auto edited = content.edited_token_positions;
            if (cand == original_text[pos]) edited.erase(static_cast<int>(pos));
            else edited.insert(static_cast<int>(pos));
            if (static_cast<int>(edited.size()) > cfg.max_token_edits) continue;

            std::vector<int> cand_text = content.text;
            cand_text[pos] = cand;
            if (std::abs(consistency(enc, cand_text, content.patches) - clean_consistency) >
                cfg.coherence_tol)
                continue;
            double cand_cos = alignment(enc, cand_text, content.patches, c);
            if (cand_cos > best_cos) {
                best_cos = cand_cos;
                best_tok = cand;
            }
        }

        if (best_tok != cur_tok) {
            content.text[pos] = best_tok;
            if (best_tok == original_text[pos])
                content.edited_token_positions.erase(static_cast<int>(pos));
            else
                content.edited_token_positions.insert(static_cast<int>(pos));
            if (edit_log) {
                std::ostringstream os;
                os << "pos " << pos << ": " << cur_tok << " -> " << best_tok;
                edit_log->push_back(os.str());
            }
            cur_cos = best_cos;
        }
    }
    return content;
}

std::pair<PoisonedContent, CipTrace> run_cip(const ProxyEncoder& enc, const Centroid& c,
                                             const Item& item, const CipConfig& cfg) {
    cfg.validate();

    PoisonedContent content;
    content.text = item.text;
    content.patches = item.patches;
    content.patch_delta = Mat(item.patches.rows, item.patches.cols);

    CipTrace trace;
    trace.clean_consistency = consistency(enc, item.text, item.patches);
    trace.alignment.push_back(alignment(enc, content.text, content.patches, c));
    trace.termination = "budget";

    if (trace.alignment.front() >= cfg.stop_threshold) {
        trace.termination = "threshold";
        return {content, trace};
    }

    SeededRng rng = SeededRng(cfg.seed).child("cip");

    // Non-interactive ablation: masks frozen from the clean content.
    RoundMasks frozen;
    Vec frozen_saliency;
    if (!cfg.interactive) {
        Mat agg = aggregate_attention(enc.encode(item.text, item.patches));
        auto [s_txt, s_vis] = saliency_scores(agg);
        frozen.text_mask = build_mask(s_txt, cfg.k_txt).indices;
        frozen.vis_mask = build_mask(s_vis, cfg.k_vis).indices;
        frozen_saliency = s_txt;
    }

    for (int r = 0; r < cfg.rounds; ++r) {
        RoundMasks masks;
        Vec s_txt_round;
        if (cfg.interactive) {
            Mat agg = aggregate_attention(enc.encode(content.text, content.patches));
            auto [s_txt, s_vis] = saliency_scores(agg);
            masks.text_mask = build_mask(s_txt, cfg.k_txt).indices;
            masks.vis_mask = build_mask(s_vis, cfg.k_vis).indices;
            s_txt_round = s_txt;
        } else {
            masks = frozen;
            s_txt_round = frozen_saliency;
        }

        if (cfg.enable_visual)
            content = visual_step(enc, c, std::move(content), item.patches, masks.vis_mask, cfg,
                                  trace.clean_consistency, rng);
        if (cfg.enable_textual)
            content = textual_step(enc, c, std::move(content), item.text, masks.text_mask,
                                   s_txt_round, cfg, trace.clean_consistency,
                                   &trace.accepted_edits);

        trace.masks.push_back(masks);
        trace.alignment.push_back(alignment(enc, content.text, content.patches, c));
        if (trace.alignment.back() >= cfg.stop_threshold) {
            trace.termination = "threshold";
            break;
        }
    }
    return {content, trace};
}

double patch_feature_std(const std::vector<Item>& catalog) {
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (const Item& it : catalog)
        for (double x : it.patches.a) {
            sum += x;
            sum2 += x * x;
            ++n;
        }
    if (n == 0) throw InvalidArgument("patch_feature_std: empty catalog");
    double mean = sum / static_cast<double>(n);
    double var = std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
    return std::sqrt(var);
}

}  // namespace fpl
