#include "fpl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace fpl {

namespace {

struct EvalUser {
    int user;
    std::vector<int> history;  // everything but the test label
    int test_label;
};

// Benign users with their leave-last-out histories.
std::vector<EvalUser> eval_users(const Dataset& d, const std::vector<int>& compromised_users) {
    std::set<int> mal(compromised_users.begin(), compromised_users.end());
    std::vector<EvalUser> out;
    for (const auto& inter : group_by_user(d)) {
        if (inter.empty()) continue;
        int user = inter.front().user;
        if (mal.count(user)) continue;
        EvalUser eu;
        eu.user = user;
        eu.test_label = -1;
        for (const Interaction& x : inter) {
            if (x.provenance != Provenance::Benign) continue;
            if (x.split == Split::Test) eu.test_label = x.item;
            else eu.history.push_back(x.item);
        }
        if (eu.test_label < 0 || eu.history.empty()) continue;
        out.push_back(std::move(eu));
    }
    if (out.empty()) throw InvalidArgument("metrics: no benign test users to evaluate");
    return out;
}

}  // namespace

double exposure_rate(const VictimModel& m, const Dataset& d, const std::vector<int>& targets,
                     const std::vector<int>& compromised_users, int k) {
    if (k < 1) throw InvalidArgument("exposure_rate: k must be >= 1");
    if (targets.empty()) throw InvalidArgument("exposure_rate: no targets");
    auto users = eval_users(d, compromised_users);
    auto item_vecs = m.encode_catalog(d.items);

    std::map<int, int> hits;
    for (const EvalUser& eu : users) {
        auto top = m.recommend_topk(item_vecs, eu.history, k);
        for (int t : targets)
            if (std::find(top.begin(), top.end(), t) != top.end()) hits[t]++;
    }
    double sum = 0.0;
    for (int t : targets) sum += static_cast<double>(hits[t]) / static_cast<double>(users.size());
    return sum / static_cast<double>(targets.size());
}

RankingMetrics ranking_metrics(const VictimModel& m, const Dataset& d,
                               const std::vector<int>& compromised_users, int k) {
    if (k < 1) throw InvalidArgument("ranking_metrics: k must be >= 1");
    auto users = eval_users(d, compromised_users);
    auto item_vecs = m.encode_catalog(d.items);

    RankingMetrics out;
    out.evaluated_users = static_cast<int>(users.size());
    for (const EvalUser& eu : users) {
        auto top = m.recommend_topk(item_vecs, eu.history, k);
        auto pos = std::find(top.begin(), top.end(), eu.test_label);
        if (pos != top.end()) {
            out.hr += 1.0;
            double rank = static_cast<double>(pos - top.begin()) + 1.0;
            out.ndcg += 1.0 / std::log2(rank + 1.0);
        }
    }
    out.hr /= static_cast<double>(users.size());
    out.ndcg /= static_cast<double>(users.size());
    return out;
}

namespace {

double f1_score(double overlap, double cand_total, double ref_total) {
    if (cand_total <= 0.0 || ref_total <= 0.0) return 0.0;
    double p = overlap / cand_total;
    double r = overlap / ref_total;
    if (p + r <= 0.0) return 0.0;
    return 100.0 * 2.0 * p * r / (p + r);
}

double ngram_f1(const std::vector<int>& ref, const std::vector<int>& cand, std::size_t n) {
    if (ref.size() < n || cand.size() < n) return 0.0;
    std::map<std::vector<int>, int> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i)
        ref_counts[std::vector<int>(ref.begin() + static_cast<std::ptrdiff_t>(i),
                                    ref.begin() + static_cast<std::ptrdiff_t>(i + n))]++;
    double overlap = 0.0;
    for (std::size_t i = 0; i + n <= cand.size(); ++i) {
        std::vector<int> gram(cand.begin() + static_cast<std::ptrdiff_t>(i),
                              cand.begin() + static_cast<std::ptrdiff_t>(i + n));
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end() && it->second > 0) {
            overlap += 1.0;
            it->second--;
        }
    }
    return f1_score(overlap, static_cast<double>(cand.size() - n + 1),
                    static_cast<double>(ref.size() - n + 1));
}

std::size_t lcs_length(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) cur[j] = prev[j - 1] + 1;
            else cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

double rouge(const std::vector<int>& reference, const std::vector<int>& candidate,
             RougeVariant variant) {
    if (reference.empty()) throw InvalidArgument("rouge: empty reference");
    switch (variant) {
        case RougeVariant::One: return ngram_f1(reference, candidate, 1);
        case RougeVariant::Two: return ngram_f1(reference, candidate, 2);
        default: {
            if (candidate.empty()) return 0.0;
            double lcs = static_cast<double>(lcs_length(reference, candidate));
            return f1_score(lcs, static_cast<double>(candidate.size()),
                            static_cast<double>(reference.size()));
        }
    }
}

namespace {

struct Gaussian {
    Vec mean;
    Mat cov;
};

Gaussian fit_gaussian(const std::vector<Vec>& pts) {
    const std::size_t n = pts.size();
    const std::size_t d = pts.front().size();
    Gaussian g;
    g.mean.assign(d, 0.0);
    for (const Vec& p : pts)
        for (std::size_t j = 0; j < d; ++j) g.mean[j] += p[j];
    for (auto& x : g.mean) x /= static_cast<double>(n);
    g.cov = Mat(d, d);
    for (const Vec& p : pts)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                g.cov(i, j) += (p[i] - g.mean[i]) * (p[j] - g.mean[j]);
    for (auto& x : g.cov.a) x /= static_cast<double>(n - 1);
    return g;
}

// Symmetric PSD square root with eigenvalue flooring at zero.
Mat psd_sqrt(const Mat& m) {
    EigResult e = sym_eig(m);
    const std::size_t d = m.rows;
    Mat vl(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            vl(i, j) = e.vectors(i, j) * std::sqrt(std::max(0.0, e.values[j]));
    return matmul_transposed(vl, e.vectors);
}

}  // namespace

double frechet_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw InvalidArgument("frechet_distance: need at least 2 vectors per side");
    const std::size_t d = a.front().size();
    for (const Vec& v : a)
        if (v.size() != d) throw InvalidArgument("frechet_distance: dimension mismatch");
    for (const Vec& v : b)
        if (v.size() != d) throw InvalidArgument("frechet_distance: dimension mismatch");

    Gaussian g1 = fit_gaussian(a);
    Gaussian g2 = fit_gaussian(b);

    double mean_term = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double diff = g1.mean[j] - g2.mean[j];
        mean_term += diff * diff;
    }
    double tr1 = 0.0, tr2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        tr1 += g1.cov(j, j);
        tr2 += g2.cov(j, j);
    }

    // Tr((S1 S2)^{1/2}) computed on the symmetric form sqrt(S2) S1 sqrt(S2).
    Mat s2 = psd_sqrt(g2.cov);
    Mat inner = matmul(matmul(s2, g1.cov), s2);
    // Symmetrise rounding noise before the final eigendecomposition.
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            double v = 0.5 * (inner(i, j) + inner(j, i));
            inner(i, j) = v;
            inner(j, i) = v;
        }
    EigResult e = sym_eig(inner);
    double tr_sqrt = 0.0;
    for (double lam : e.values) tr_sqrt += std::sqrt(std::max(0.0, lam));

    return std::max(0.0, mean_term + tr1 + tr2 - 2.0 * tr_sqrt);
}

CoherenceResult coherence_metrics(const ProxyEncoder& enc, const Item& clean,
                                  const std::vector<int>& poisoned_text,
                                  const Mat& poisoned_patches) {
    if (poisoned_text.size() != clean.text.size() ||
        poisoned_patches.rows != clean.patches.rows || poisoned_patches.cols != clean.patches.cols)
        throw InvalidArgument("coherence_metrics: shape mismatch");

    Vec text_clean = enc.modality_embed_text(clean.text);
    Vec vis_clean = enc.modality_embed_visual(clean.patches);
    Vec text_pois = enc.modality_embed_text(poisoned_text);
    Vec vis_pois = enc.modality_embed_visual(poisoned_patches);

    CoherenceResult out;
    out.semantic_dev = std::abs(cosine(text_pois, vis_pois) - cosine(text_clean, vis_clean));

    Vec d_text(text_clean.size()), d_vis(vis_clean.size());
    for (std::size_t i = 0; i < d_text.size(); ++i) d_text[i] = text_pois[i] - text_clean[i];
    for (std::size_t i = 0; i < d_vis.size(); ++i) d_vis[i] = vis_pois[i] - vis_clean[i];

    if (l2_norm(d_text) <= 1e-9 || l2_norm(d_vis) <= 1e-9) {
        out.unperturbed = true;
        out.direction_alignment = 0.0;
    } else {
        out.direction_alignment = cosine(d_text, d_vis);
    }
    return out;
}

}  // namespace fpl
