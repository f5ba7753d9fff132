#pragma once

#include <map>
#include <vector>

#include "fpl/catalog.hpp"
#include "fpl/proxy_encoder.hpp"
#include "fpl/victim.hpp"

namespace fpl {

// Fraction of benign test users whose top-K contains a target, averaged over
// targets. Histories drop the held-out test label; compromised users are
// excluded from evaluation.
double exposure_rate(const VictimModel& m, const Dataset& d, const std::vector<int>& targets,
                     const std::vector<int>& compromised_users, int k);

struct RankingMetrics {
    double hr = 0.0;
    double ndcg = 0.0;
    int evaluated_users = 0;
};

// Leave-last-out HR@K / NDCG@K over benign test users.
RankingMetrics ranking_metrics(const VictimModel& m, const Dataset& d,
                               const std::vector<int>& compromised_users, int k);

enum class RougeVariant { One, Two, L };

// 0-100 F1 overlap on token-id sequences.
double rouge(const std::vector<int>& reference, const std::vector<int>& candidate,
             RougeVariant variant);

// Frechet distance between Gaussian fits of two point sets.
double frechet_distance(const std::vector<Vec>& a, const std::vector<Vec>& b);

struct CoherenceResult {
    double semantic_dev = 0.0;
    double direction_alignment = 0.0;
    bool unperturbed = false;  // one modality did not move; alignment is a sentinel 0
};

CoherenceResult coherence_metrics(const ProxyEncoder& enc, const Item& clean,
                                  const std::vector<int>& poisoned_text,
                                  const Mat& poisoned_patches);

}  // namespace fpl
