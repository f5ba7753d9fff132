#pragma once

// Internal cached forward pass shared by the proxy encoder and the victim's
// trainable fusion stack. The cache keeps every intermediate the victim's
// backward pass needs.

#include <cmath>
#include <vector>

#include "fpl/proxy_encoder.hpp"

namespace fpl::detail {

struct EncodeCache {
    Mat patch_proj;                       // patch_count x dim, shared by all layers
    std::vector<Mat> x_in;                // [layer]: text states entering the layer
    Mat x_out;                            // text states after the last layer
    std::vector<std::vector<Mat>> q, k, v, att;  // [layer][head]
    Vec mean;                             // row mean of x_out
    double mean_norm = 0.0;
    Vec fused;                            // mean / ||mean||
};

inline void encode_forward(const EncoderWeights& w, const EncoderDims& dims,
                           const std::vector<int>& text, const Mat& patches, EncodeCache& c) {
    if (text.empty()) throw InvalidArgument("encode: empty token sequence");
    if (patches.rows == 0 || patches.cols != w.patch_projection.rows)
        throw InvalidArgument("encode: patch matrix shape mismatch");
    const std::size_t lt = text.size();
    const std::size_t d = static_cast<std::size_t>(dims.dim);
    const std::size_t dh = static_cast<std::size_t>(dims.head_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims.head_dim));

    Mat x(lt, d);
    for (std::size_t i = 0; i < lt; ++i) {
        int tok = text[i];
        if (tok < 0 || static_cast<std::size_t>(tok) >= w.token_embedding.rows)
            throw InvalidArgument("encode: token id out of vocabulary");
        for (std::size_t j = 0; j < d; ++j)
            x(i, j) = w.token_embedding(static_cast<std::size_t>(tok), j);
    }

    c.patch_proj = matmul(patches, w.patch_projection);  // patch_count x dim
    c.x_in.assign(static_cast<std::size_t>(dims.layer_count), Mat());
    c.q.assign(static_cast<std::size_t>(dims.layer_count), {});
    c.k.assign(static_cast<std::size_t>(dims.layer_count), {});
    c.v.assign(static_cast<std::size_t>(dims.layer_count), {});
    c.att.assign(static_cast<std::size_t>(dims.layer_count), {});

    for (int l = 0; l < dims.layer_count; ++l) {
        auto lz = static_cast<std::size_t>(l);
        c.x_in[lz] = x;
        Mat out(lt, d);
        c.q[lz].resize(static_cast<std::size_t>(dims.head_count));
        c.k[lz].resize(static_cast<std::size_t>(dims.head_count));
        c.v[lz].resize(static_cast<std::size_t>(dims.head_count));
        c.att[lz].resize(static_cast<std::size_t>(dims.head_count));
        for (int h = 0; h < dims.head_count; ++h) {
            auto hz = static_cast<std::size_t>(h);
            const HeadWeights& hw = w.layers[lz][hz];
            Mat q = matmul(c.x_in[lz], hw.wq);      // text_len x head_dim
            Mat k = matmul(c.patch_proj, hw.wk);    // patch_count x head_dim
            Mat v = matmul(c.patch_proj, hw.wv);    // patch_count x head_dim
            Mat logits = matmul_transposed(q, k);   // text_len x patch_count
            for (auto& val : logits.a) val *= scale;
            Mat a = softmax_rows(logits);
            Mat head_out = matmul(a, v);            // text_len x head_dim
            for (std::size_t i = 0; i < lt; ++i)
                for (std::size_t j = 0; j < dh; ++j) out(i, hz * dh + j) = head_out(i, j);
            c.q[lz][hz] = std::move(q);
            c.k[lz][hz] = std::move(k);
            c.v[lz][hz] = std::move(v);
            c.att[lz][hz] = std::move(a);
        }
        for (std::size_t i = 0; i < lt * d; ++i) x.a[i] += out.a[i];
    }

    c.x_out = x;
    c.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < lt; ++i)
        for (std::size_t j = 0; j < d; ++j) c.mean[j] += x(i, j);
    for (auto& m : c.mean) m /= static_cast<double>(lt);
    c.mean_norm = l2_norm(c.mean);
    if (!(c.mean_norm > 1e-12)) throw DegenerateInput("encode: degenerate fused mean");
    c.fused.resize(d);
    for (std::size_t j = 0; j < d; ++j) c.fused[j] = c.mean[j] / c.mean_norm;
}

}  // namespace fpl::detail
