#pragma once

#include <cstdint>
#include <vector>

#include "fpl/numkit.hpp"

namespace fpl {

struct EncoderDims {
    int dim = 32;        // fused dimension d
    int layer_count = 2;
    int head_count = 4;
    int head_dim = 8;    // dim must equal head_count * head_dim

    bool operator==(const EncoderDims&) const = default;
};

struct HeadWeights {
    Mat wq, wk, wv;  // dim x head_dim each

    bool operator==(const HeadWeights&) const = default;
};

// Weight family shared by the attacker's proxy and the victim's fusion stack.
struct EncoderWeights {
    Mat token_embedding;   // vocab x dim
    Mat patch_projection;  // patch_dim x dim (the content projector)
    std::vector<std::vector<HeadWeights>> layers;  // [layer][head]

    bool operator==(const EncoderWeights&) const = default;
};

EncoderWeights init_encoder_weights(const EncoderDims& dims, int vocab_size, int patch_dim,
                                    const SeededRng& rng);

struct FusedOutput {
    Vec fused;        // unit norm, length dim
    Mat text_states;  // text_len x dim after the last layer
    std::vector<std::vector<Mat>> attention;  // [layer][head]: text_len x patch_count, row-stochastic
};

// Frozen grey-box surrogate: embeds tokens and patches, fuses them with
// multi-head text-to-patch cross-attention (residual add per layer), and
// exposes the attention maps. Never trained.
class ProxyEncoder {
public:
    ProxyEncoder(EncoderDims dims, EncoderWeights weights);
    static ProxyEncoder from_seed(const EncoderDims& dims, int vocab_size, int patch_dim,
                                  std::uint64_t seed);

    FusedOutput encode(const std::vector<int>& text, const Mat& patches) const;

    // Unit-norm pooled embedding through a single modality's pathway.
    Vec modality_embed_text(const std::vector<int>& text) const;
    Vec modality_embed_visual(const Mat& patches) const;

    const EncoderDims& dims() const { return dims_; }
    const EncoderWeights& weights() const { return w_; }
    int vocab_size() const { return static_cast<int>(w_.token_embedding.rows); }
    int patch_dim() const { return static_cast<int>(w_.patch_projection.rows); }

private:
    EncoderDims dims_;
    EncoderWeights w_;
};

// Head-averaged, layer-composed text-to-patch influence map. Within a layer
// heads are averaged; across layers each head-average is mixed with the
// running aggregate as 0.5*map + 0.5*previous, the rollout convention
// adapted to a fixed text-side carrier. Rows sum to 1.
Mat aggregate_attention(const FusedOutput& f);

}  // namespace fpl
