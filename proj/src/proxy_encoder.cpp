#include "fpl/proxy_encoder.hpp"

#include <cmath>

#include "encoder_fwd.hpp"

namespace fpl {

EncoderWeights init_encoder_weights(const EncoderDims& dims, int vocab_size, int patch_dim,
                                    const SeededRng& rng) {
    if (dims.dim != dims.head_count * dims.head_dim)
        throw InvalidArgument("encoder dims: dim must equal head_count * head_dim");
    if (vocab_size <= 0 || patch_dim <= 0 || dims.layer_count <= 0)
        throw InvalidArgument("encoder dims: counts must be positive");

    auto fill = [](Mat& m, SeededRng r, double sigma) {
        for (auto& x : m.a) x = sigma * r.normal();
    };

    EncoderWeights w;
    const double sig_tok = 1.0 / std::sqrt(static_cast<double>(dims.dim));
    const double sig_patch = 0.5 / std::sqrt(static_cast<double>(patch_dim));
    const double sig_attn = 1.0 / std::sqrt(static_cast<double>(dims.dim));

    w.token_embedding = Mat(static_cast<std::size_t>(vocab_size), static_cast<std::size_t>(dims.dim));
    fill(w.token_embedding, rng.child("token_embedding"), sig_tok);
    w.patch_projection = Mat(static_cast<std::size_t>(patch_dim), static_cast<std::size_t>(dims.dim));
    fill(w.patch_projection, rng.child("patch_projection"), sig_patch);

    w.layers.resize(static_cast<std::size_t>(dims.layer_count));
    for (int l = 0; l < dims.layer_count; ++l) {
        auto& layer = w.layers[static_cast<std::size_t>(l)];
        layer.resize(static_cast<std::size_t>(dims.head_count));
        for (int h = 0; h < dims.head_count; ++h) {
            std::string tag = "l" + std::to_string(l) + "h" + std::to_string(h);
            HeadWeights& hw = layer[static_cast<std::size_t>(h)];
            hw.wq = Mat(static_cast<std::size_t>(dims.dim), static_cast<std::size_t>(dims.head_dim));
            hw.wk = Mat(static_cast<std::size_t>(dims.dim), static_cast<std::size_t>(dims.head_dim));
            hw.wv = Mat(static_cast<std::size_t>(dims.dim), static_cast<std::size_t>(dims.head_dim));
            fill(hw.wq, rng.child(tag + ".wq"), sig_attn);
            fill(hw.wk, rng.child(tag + ".wk"), sig_attn);
            fill(hw.wv, rng.child(tag + ".wv"), sig_attn);
        }
    }
    return w;
}

ProxyEncoder::ProxyEncoder(EncoderDims dims, EncoderWeights weights)
    : dims_(dims), w_(std::move(weights)) {
    if (dims_.dim != dims_.head_count * dims_.head_dim)
        throw InvalidArgument("proxy encoder: dim must equal head_count * head_dim");
    if (static_cast<int>(w_.layers.size()) != dims_.layer_count)
        throw InvalidArgument("proxy encoder: layer count mismatch");
    ensure_finite(w_.token_embedding, "token embedding");
    ensure_finite(w_.patch_projection, "patch projection");
}

ProxyEncoder ProxyEncoder::from_seed(const EncoderDims& dims, int vocab_size, int patch_dim,
                                     std::uint64_t seed) {
    return ProxyEncoder(dims, init_encoder_weights(dims, vocab_size, patch_dim, SeededRng(seed)));
}

FusedOutput ProxyEncoder::encode(const std::vector<int>& text, const Mat& patches) const {
    detail::EncodeCache c;
    detail::encode_forward(w_, dims_, text, patches, c);
    FusedOutput out;
    out.fused = std::move(c.fused);
    out.text_states = std::move(c.x_out);
    out.attention = std::move(c.att);
    return out;
}

Vec ProxyEncoder::modality_embed_text(const std::vector<int>& text) const {
    if (text.empty()) throw InvalidArgument("modality_embed: empty token sequence");
    Vec mean(static_cast<std::size_t>(dims_.dim), 0.0);
    for (int tok : text) {
        if (tok < 0 || static_cast<std::size_t>(tok) >= w_.token_embedding.rows)
            throw InvalidArgument("modality_embed: token id out of vocabulary");
        for (std::size_t j = 0; j < mean.size(); ++j)
            mean[j] += w_.token_embedding(static_cast<std::size_t>(tok), j);
    }
    for (auto& x : mean) x /= static_cast<double>(text.size());
    return l2_normalize(mean);
}

Vec ProxyEncoder::modality_embed_visual(const Mat& patches) const {
    if (patches.rows == 0 || patches.cols != w_.patch_projection.rows)
        throw InvalidArgument("modality_embed: patch matrix shape mismatch");
    Mat proj = matmul(patches, w_.patch_projection);
    Vec mean(proj.cols, 0.0);
    for (std::size_t i = 0; i < proj.rows; ++i)
        for (std::size_t j = 0; j < proj.cols; ++j) mean[j] += proj(i, j);
    for (auto& x : mean) x /= static_cast<double>(proj.rows);
    return l2_normalize(mean);
}

Mat aggregate_attention(const FusedOutput& f) {
    if (f.attention.empty() || f.attention.front().empty())
        throw InvalidArgument("aggregate_attention: no attention maps");
    Mat agg;
    for (std::size_t l = 0; l < f.attention.size(); ++l) {
        const auto& heads = f.attention[l];
        Mat layer_mean(heads.front().rows, heads.front().cols);
        for (const Mat& h : heads) {
            if (h.rows != layer_mean.rows || h.cols != layer_mean.cols)
                throw InvalidArgument("aggregate_attention: inconsistent map shapes");
            for (std::size_t i = 0; i < h.a.size(); ++i) layer_mean.a[i] += h.a[i];
        }
        for (auto& x : layer_mean.a) x /= static_cast<double>(heads.size());
        if (l == 0) {
            agg = std::move(layer_mean);
        } else {
            for (std::size_t i = 0; i < agg.a.size(); ++i)
                agg.a[i] = 0.5 * layer_mean.a[i] + 0.5 * agg.a[i];
        }
    }
    return agg;
}

}  // namespace fpl
