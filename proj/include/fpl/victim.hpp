#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpl/catalog.hpp"
#include "fpl/proxy_encoder.hpp"

namespace fpl {

struct TrainConfig {
    int epochs = 30;
    double learning_rate = 0.05;
    int batch_size = 64;
    double weight_decay = 0.0;
    int negative_samples = 0;  // 0 = full softmax over the catalog
    std::uint64_t seed = 1;

    bool operator==(const TrainConfig&) const = default;
};

// One supervised pair: predict `label` from the items seen before it.
struct Example {
    std::vector<int> history;
    int label = 0;
};

// Trainable parameters: token embeddings, the content projector, the fusion
// stack, and a bilinear scoring head. Shapes mirror EncoderWeights so the
// victim stays in the same architecture family as the proxy.
struct VictimParams {
    EncoderWeights enc;
    Mat scoring;  // dim x dim

    bool operator==(const VictimParams&) const = default;

    std::size_t param_count() const;
    double get_flat(std::size_t i) const;
    void set_flat(std::size_t i, double v);
    void zero();
    // p += alpha * g, used for both gradient steps and weight decay.
    void axpy(double alpha, const VictimParams& g);
};

class VictimModel {
public:
    VictimModel(EncoderDims dims, int vocab_size, int patch_dim, std::uint64_t seed);
    VictimModel(EncoderDims dims, VictimParams params);

    // Recency decay for the pooled user state.
    static constexpr double kHistoryDecay = 0.8;

    const EncoderDims& dims() const { return dims_; }
    const VictimParams& params() const { return params_; }
    VictimParams& mutable_params() { return params_; }

    Vec encode_item(const Item& item) const;  // unit-norm fused representation
    std::vector<Vec> encode_catalog(const std::vector<Item>& catalog) const;

    // Items that occurred in training data. A trained recommender can only
    // surface items it has seen (the next-item head has no way to emit an
    // id that never appeared); an empty set means "no filter" (untrained).
    const std::set<int>& trained_items() const { return trained_items_; }
    void set_trained_items(std::set<int> items) { trained_items_ = std::move(items); }

    Vec build_user_state(const std::vector<int>& history, const std::vector<Item>& catalog) const;

    double nll_loss(const std::vector<Example>& batch, const std::vector<Item>& catalog,
                    int negative_samples = 0, std::uint64_t sample_seed = 0) const;
    VictimParams param_gradient(const std::vector<Example>& batch, const std::vector<Item>& catalog,
                                int negative_samples = 0, std::uint64_t sample_seed = 0) const;

    std::vector<int> recommend_topk(const std::vector<int>& history,
                                    const std::vector<Item>& catalog, int k) const;
    // Fast path for evaluation loops: item encodings computed once.
    std::vector<int> recommend_topk(const std::vector<Vec>& item_vecs,
                                    const std::vector<int>& history, int k) const;

private:
    EncoderDims dims_;
    VictimParams params_;
    std::set<int> trained_items_;
};

// Training pairs from a merged dataset. Benign users contribute one pair
// (all interactions before the last train position -> that item); malicious
// interactions are grouped into sessions by consecutive positions, each
// session predicting its final item from the preceding ones.
std::vector<Example> build_train_examples(const Dataset& d);

struct TrainResult {
    VictimModel model;
    Vec epoch_loss;  // mean loss per epoch
};

TrainResult train(const VictimModel& initial, const Dataset& d, const TrainConfig& cfg);

void write_checkpoint(const VictimModel& m, const std::string& path);
VictimModel read_checkpoint(const std::string& path);

}  // namespace fpl
