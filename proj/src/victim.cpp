#include "fpl/victim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "encoder_fwd.hpp"

namespace fpl {

namespace {

std::vector<Mat*> tensor_list(VictimParams& p) {
    std::vector<Mat*> out;
    out.push_back(&p.enc.token_embedding);
    out.push_back(&p.enc.patch_projection);
    for (auto& layer : p.enc.layers)
        for (auto& h : layer) {
            out.push_back(&h.wq);
            out.push_back(&h.wk);
            out.push_back(&h.wv);
        }
    out.push_back(&p.scoring);
    return out;
}

std::vector<const Mat*> tensor_list(const VictimParams& p) {
    std::vector<const Mat*> out;
    for (Mat* m : tensor_list(const_cast<VictimParams&>(p))) out.push_back(m);
    return out;
}

}  // namespace

std::size_t VictimParams::param_count() const {
    std::size_t n = 0;
    for (const Mat* m : tensor_list(*this)) n += m->a.size();
    return n;
}

double VictimParams::get_flat(std::size_t i) const {
    for (const Mat* m : tensor_list(*this)) {
        if (i < m->a.size()) return m->a[i];
        i -= m->a.size();
    }
    throw InvalidArgument("parameter index out of range");
}

void VictimParams::set_flat(std::size_t i, double v) {
    for (Mat* m : tensor_list(*this)) {
        if (i < m->a.size()) {
            m->a[i] = v;
            return;
        }
        i -= m->a.size();
    }
    throw InvalidArgument("parameter index out of range");
}

void VictimParams::zero() {
    for (Mat* m : tensor_list(*this)) std::fill(m->a.begin(), m->a.end(), 0.0);
}

void VictimParams::axpy(double alpha, const VictimParams& g) {
    auto dst = tensor_list(*this);
    auto src = tensor_list(g);
    if (dst.size() != src.size()) throw InvalidArgument("axpy: parameter structure mismatch");
    for (std::size_t t = 0; t < dst.size(); ++t) {
        if (dst[t]->a.size() != src[t]->a.size())
            throw InvalidArgument("axpy: tensor shape mismatch");
        for (std::size_t i = 0; i < dst[t]->a.size(); ++i) dst[t]->a[i] += alpha * src[t]->a[i];
    }
}

VictimModel::VictimModel(EncoderDims dims, int vocab_size, int patch_dim, std::uint64_t seed)
    : dims_(dims) {
    SeededRng rng(seed);
    params_.enc = init_encoder_weights(dims, vocab_size, patch_dim, rng.child("fusion"));
    // Content-grounded scoring: the head starts at the identity (plus a tiny
    // symmetry-breaking perturbation), so ranking begins from semantic
    // user-item similarity and training refines it.
    params_.scoring = Mat(static_cast<std::size_t>(dims.dim), static_cast<std::size_t>(dims.dim));
    SeededRng r = rng.child("scoring");
    double sigma = 0.05 / std::sqrt(static_cast<double>(dims.dim));
    for (std::size_t i = 0; i < params_.scoring.rows; ++i)
        for (std::size_t j = 0; j < params_.scoring.cols; ++j)
            params_.scoring(i, j) = (i == j ? 1.0 : 0.0) + sigma * r.normal();
}

VictimModel::VictimModel(EncoderDims dims, VictimParams params)
    : dims_(dims), params_(std::move(params)) {
    if (dims_.dim != dims_.head_count * dims_.head_dim)
        throw InvalidArgument("victim: dim must equal head_count * head_dim");
    if (params_.scoring.rows != static_cast<std::size_t>(dims_.dim) ||
        params_.scoring.cols != static_cast<std::size_t>(dims_.dim))
        throw InvalidArgument("victim: scoring head shape mismatch");
}

Vec VictimModel::encode_item(const Item& item) const {
    detail::EncodeCache c;
    detail::encode_forward(params_.enc, dims_, item.text, item.patches, c);
    return c.fused;
}

std::vector<Vec> VictimModel::encode_catalog(const std::vector<Item>& catalog) const {
    std::vector<Vec> out;
    out.reserve(catalog.size());
    for (const Item& it : catalog) out.push_back(encode_item(it));
    return out;
}

namespace {

struct UserState {
    Vec state;      // unit norm
    Vec raw;        // decayed mean before normalisation
    double raw_norm = 0.0;
    Vec weights;    // per history slot, newest last
    double weight_sum = 0.0;
};

UserState pooled_user_state(const std::vector<int>& history, const std::vector<Vec>& item_vecs) {
    if (history.empty()) throw InvalidArgument("build_user_state: empty history");
    UserState s;
    const std::size_t n = history.size();
    s.weights.resize(n);
    for (std::size_t j = 0; j < n; ++j)
        s.weights[j] = std::pow(VictimModel::kHistoryDecay, static_cast<double>(n - 1 - j));
    s.weight_sum = std::accumulate(s.weights.begin(), s.weights.end(), 0.0);

    std::size_t d = 0;
    for (std::size_t j = 0; j < n; ++j) {
        int id = history[j];
        if (id < 0 || static_cast<std::size_t>(id) >= item_vecs.size() ||
            item_vecs[static_cast<std::size_t>(id)].empty())
            throw InvalidArgument("history item " + std::to_string(id) + " not in catalog");
        d = item_vecs[static_cast<std::size_t>(id)].size();
    }
    s.raw.assign(d, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        int id = history[j];
        const Vec& z = item_vecs[static_cast<std::size_t>(id)];
        for (std::size_t k = 0; k < d; ++k) s.raw[k] += s.weights[j] * z[k];
    }
    for (auto& x : s.raw) x /= s.weight_sum;
    s.raw_norm = l2_norm(s.raw);
    if (!(s.raw_norm > 1e-12)) throw DegenerateInput("build_user_state: degenerate pooled state");
    s.state.resize(d);
    for (std::size_t k = 0; k < d; ++k) s.state[k] = s.raw[k] / s.raw_norm;
    return s;
}

// Backprop of y = x/||x||: dx = (dy - y (y . dy)) / ||x||.
Vec normalize_backward(const Vec& y, double x_norm, const Vec& dy) {
    double proj = dot(y, dy);
    Vec dx(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] = (dy[i] - y[i] * proj) / x_norm;
    return dx;
}

void encode_backward(const EncoderDims& dims, const VictimParams& p, const std::vector<int>& text,
                     const Mat& patches, const detail::EncodeCache& c, const Vec& dz,
                     VictimParams& g) {
    const std::size_t lt = text.size();
    const std::size_t d = static_cast<std::size_t>(dims.dim);
    const std::size_t dh = static_cast<std::size_t>(dims.head_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims.head_dim));

    Vec dmean = normalize_backward(c.fused, c.mean_norm, dz);
    Mat dx(lt, d);
    for (std::size_t i = 0; i < lt; ++i)
        for (std::size_t j = 0; j < d; ++j) dx(i, j) = dmean[j] / static_cast<double>(lt);

    Mat dpatch_proj(c.patch_proj.rows, c.patch_proj.cols);

    for (int l = dims.layer_count - 1; l >= 0; --l) {
        auto lz = static_cast<std::size_t>(l);
        const Mat& x_in = c.x_in[lz];
        Mat dx_in = dx;  // residual pass-through
        for (int h = 0; h < dims.head_count; ++h) {
            auto hz = static_cast<std::size_t>(h);
            const HeadWeights& hw = p.enc.layers[lz][hz];
            const Mat& q = c.q[lz][hz];
            const Mat& k = c.k[lz][hz];
            const Mat& v = c.v[lz][hz];
            const Mat& a = c.att[lz][hz];

            Mat dout(lt, dh);
            for (std::size_t i = 0; i < lt; ++i)
                for (std::size_t j = 0; j < dh; ++j) dout(i, j) = dx(i, hz * dh + j);

            Mat da = matmul_transposed(dout, v);       // lt x lv
            Mat dv = matmul(transpose(a), dout);       // lv x dh
            Mat dlog(a.rows, a.cols);
            for (std::size_t r = 0; r < a.rows; ++r) {
                double row_dot = 0.0;
                for (std::size_t cidx = 0; cidx < a.cols; ++cidx) row_dot += da(r, cidx) * a(r, cidx);
                for (std::size_t cidx = 0; cidx < a.cols; ++cidx)
                    dlog(r, cidx) = a(r, cidx) * (da(r, cidx) - row_dot);
            }
            Mat dq = matmul(dlog, k);                  // lt x dh
            for (auto& x : dq.a) x *= scale;
            Mat dk = matmul(transpose(dlog), q);       // lv x dh
            for (auto& x : dk.a) x *= scale;

            HeadWeights& gh = g.enc.layers[lz][hz];
            Mat gq = matmul(transpose(x_in), dq);
            Mat gk = matmul(transpose(c.patch_proj), dk);
            Mat gv = matmul(transpose(c.patch_proj), dv);
            for (std::size_t i = 0; i < gq.a.size(); ++i) gh.wq.a[i] += gq.a[i];
            for (std::size_t i = 0; i < gk.a.size(); ++i) gh.wk.a[i] += gk.a[i];
            for (std::size_t i = 0; i < gv.a.size(); ++i) gh.wv.a[i] += gv.a[i];

            Mat dxq = matmul_transposed(dq, hw.wq);    // lt x d
            for (std::size_t i = 0; i < dxq.a.size(); ++i) dx_in.a[i] += dxq.a[i];
            Mat dpk = matmul_transposed(dk, hw.wk);    // lv x d
            Mat dpv = matmul_transposed(dv, hw.wv);    // lv x d
            for (std::size_t i = 0; i < dpk.a.size(); ++i)
                dpatch_proj.a[i] += dpk.a[i] + dpv.a[i];
        }
        dx = std::move(dx_in);
    }

    for (std::size_t i = 0; i < lt; ++i) {
        auto tok = static_cast<std::size_t>(text[i]);
        for (std::size_t j = 0; j < d; ++j) g.enc.token_embedding(tok, j) += dx(i, j);
    }
    Mat gproj = matmul(transpose(patches), dpatch_proj);  // patch_dim x d
    for (std::size_t i = 0; i < gproj.a.size(); ++i) g.enc.patch_projection.a[i] += gproj.a[i];
}

std::vector<int> candidate_set(int label, std::size_t catalog_size, int negative_samples,
                               SeededRng& rng) {
    if (negative_samples <= 0) {
        std::vector<int> all(catalog_size);
        std::iota(all.begin(), all.end(), 0);
        return all;
    }
    std::set<int> chosen = {label};
    while (static_cast<int>(chosen.size()) < negative_samples + 1 &&
           chosen.size() < catalog_size)
        chosen.insert(static_cast<int>(rng.uniform_int(catalog_size)));
    return {chosen.begin(), chosen.end()};
}

struct BatchPass {
    double loss = 0.0;
    VictimParams grad;  // populated only when requested
};

VictimParams zero_like(const VictimParams& p) {
    VictimParams g = p;
    g.zero();
    return g;
}

BatchPass batch_pass(const EncoderDims& dims, const VictimParams& p,
                     const std::vector<Example>& batch, const std::vector<Item>& catalog,
                     int negative_samples, std::uint64_t sample_seed, bool want_grad) {
    if (batch.empty()) throw InvalidArgument("nll_loss: empty batch");
    if (catalog.empty()) throw InvalidArgument("nll_loss: empty catalog");

    SeededRng sample_rng(sample_seed);
    std::vector<std::vector<int>> candidates(batch.size());
    std::vector<char> needed(catalog.size(), 0);
    for (std::size_t e = 0; e < batch.size(); ++e) {
        const Example& ex = batch[e];
        if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= catalog.size())
            throw InvalidArgument("label item " + std::to_string(ex.label) + " not in catalog");
        if (ex.history.empty()) throw InvalidArgument("nll_loss: empty history in batch");
        candidates[e] = candidate_set(ex.label, catalog.size(), negative_samples, sample_rng);
        for (int c : candidates[e]) needed[static_cast<std::size_t>(c)] = 1;
        for (int h : ex.history) {
            if (h < 0 || static_cast<std::size_t>(h) >= catalog.size())
                throw InvalidArgument("history item " + std::to_string(h) + " not in catalog");
            needed[static_cast<std::size_t>(h)] = 1;
        }
    }

    std::vector<detail::EncodeCache> caches(catalog.size());
    std::vector<Vec> z(catalog.size());
    for (std::size_t i = 0; i < catalog.size(); ++i)
        if (needed[i]) {
            detail::encode_forward(p.enc, dims, catalog[i].text, catalog[i].patches, caches[i]);
            z[i] = caches[i].fused;
        }

    BatchPass out;
    if (want_grad) out.grad = zero_like(p);
    std::vector<Vec> dz;
    if (want_grad) dz.assign(catalog.size(), Vec());

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const std::size_t d = static_cast<std::size_t>(dims.dim);

    for (std::size_t e = 0; e < batch.size(); ++e) {
        const Example& ex = batch[e];
        UserState us = pooled_user_state(ex.history, z);
        Vec yu = vecmat(us.state, p.scoring);  // u^T W_s

        const auto& cand = candidates[e];
        Vec scores(cand.size());
        for (std::size_t i = 0; i < cand.size(); ++i)
            scores[i] = dot(yu, z[static_cast<std::size_t>(cand[i])]);

        double mx = *std::max_element(scores.begin(), scores.end());
        double denom = 0.0;
        for (double s : scores) denom += std::exp(s - mx);
        std::size_t label_pos = 0;
        for (std::size_t i = 0; i < cand.size(); ++i)
            if (cand[i] == ex.label) label_pos = i;
        double log_p = scores[label_pos] - mx - std::log(denom);
        out.loss += -log_p * inv_b;

        if (!want_grad) continue;

        Vec gz(d, 0.0);  // sum_i g_i z_i
        Vec du(d, 0.0);
        for (std::size_t i = 0; i < cand.size(); ++i) {
            double pi = std::exp(scores[i] - mx) / denom;
            double gi = (pi - (i == label_pos ? 1.0 : 0.0)) * inv_b;
            if (gi == 0.0) continue;
            const Vec& zi = z[static_cast<std::size_t>(cand[i])];
            for (std::size_t kx = 0; kx < d; ++kx) gz[kx] += gi * zi[kx];
            Vec& acc = dz[static_cast<std::size_t>(cand[i])];
            if (acc.empty()) acc.assign(d, 0.0);
            for (std::size_t kx = 0; kx < d; ++kx) acc[kx] += gi * yu[kx];
        }

        // scoring head: dW += u gz^T
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t cidx = 0; cidx < d; ++cidx)
                out.grad.scoring(r, cidx) += us.state[r] * gz[cidx];

        du = matvec(p.scoring, gz);
        Vec draw = normalize_backward(us.state, us.raw_norm, du);
        for (std::size_t j = 0; j < ex.history.size(); ++j) {
            double wj = us.weights[j] / us.weight_sum;
            Vec& acc = dz[static_cast<std::size_t>(ex.history[j])];
            if (acc.empty()) acc.assign(d, 0.0);
            for (std::size_t kx = 0; kx < d; ++kx) acc[kx] += wj * draw[kx];
        }
    }

    if (want_grad) {
        for (std::size_t i = 0; i < catalog.size(); ++i)
            if (!dz[i].empty())
                encode_backward(dims, p, catalog[i].text, catalog[i].patches, caches[i], dz[i],
                                out.grad);
    }
    return out;
}

}  // namespace

Vec VictimModel::build_user_state(const std::vector<int>& history,
                                  const std::vector<Item>& catalog) const {
    std::vector<Vec> z(catalog.size());
    for (int id : history) {
        if (id < 0 || static_cast<std::size_t>(id) >= catalog.size())
            throw InvalidArgument("history item " + std::to_string(id) + " not in catalog");
        if (z[static_cast<std::size_t>(id)].empty())
            z[static_cast<std::size_t>(id)] = encode_item(catalog[static_cast<std::size_t>(id)]);
    }
    return pooled_user_state(history, z).state;
}

double VictimModel::nll_loss(const std::vector<Example>& batch, const std::vector<Item>& catalog,
                             int negative_samples, std::uint64_t sample_seed) const {
    return batch_pass(dims_, params_, batch, catalog, negative_samples, sample_seed, false).loss;
}

VictimParams VictimModel::param_gradient(const std::vector<Example>& batch,
                                         const std::vector<Item>& catalog, int negative_samples,
                                         std::uint64_t sample_seed) const {
    return batch_pass(dims_, params_, batch, catalog, negative_samples, sample_seed, true).grad;
}

std::vector<int> VictimModel::recommend_topk(const std::vector<int>& history,
                                             const std::vector<Item>& catalog, int k) const {
    return recommend_topk(encode_catalog(catalog), history, k);
}

std::vector<int> VictimModel::recommend_topk(const std::vector<Vec>& item_vecs,
                                             const std::vector<int>& history, int k) const {
    if (k < 1) throw InvalidArgument("recommend_topk: k must be >= 1");
    Vec u = pooled_user_state(history, item_vecs).state;
    Vec yu = vecmat(u, params_.scoring);

    std::vector<char> seen(item_vecs.size(), 0);
    for (int h : history) seen[static_cast<std::size_t>(h)] = 1;

    std::vector<std::pair<double, int>> scored;
    scored.reserve(item_vecs.size());
    for (std::size_t i = 0; i < item_vecs.size(); ++i) {
        if (seen[i]) continue;
        if (!trained_items_.empty() && !trained_items_.count(static_cast<int>(i))) continue;
        scored.emplace_back(dot(yu, item_vecs[i]), static_cast<int>(i));
    }
    if (static_cast<std::size_t>(k) > scored.size())
        throw InvalidArgument("recommend_topk: k exceeds candidate count");
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) out.push_back(scored[static_cast<std::size_t>(i)].second);
    return out;
}

std::vector<Example> build_train_examples(const Dataset& d) {
    std::vector<Example> out;
    for (const auto& inter : group_by_user(d)) {
        std::vector<int> benign;
        std::vector<std::pair<int, int>> malicious;  // (position, item)
        for (const Interaction& x : inter) {
            if (x.provenance == Provenance::Benign) benign.push_back(x.item);
            else malicious.emplace_back(x.position, x.item);
        }
        if (benign.size() >= 4) {
            Example ex;
            ex.history.assign(benign.begin(), benign.end() - 3);
            ex.label = benign[benign.size() - 3];
            out.push_back(std::move(ex));
        }
        // Malicious sessions occupy consecutive positions with gaps between
        // sessions; each run predicts its last item from the rest.
        std::size_t i = 0;
        while (i < malicious.size()) {
            std::size_t j = i + 1;
            while (j < malicious.size() && malicious[j].first == malicious[j - 1].first + 1) ++j;
            if (j - i >= 2) {
                Example ex;
                for (std::size_t k = i; k + 1 < j; ++k) ex.history.push_back(malicious[k].second);
                ex.label = malicious[j - 1].second;
                out.push_back(std::move(ex));
            }
            i = j;
        }
    }
    return out;
}

TrainResult train(const VictimModel& initial, const Dataset& d, const TrainConfig& cfg) {
    if (cfg.epochs < 0) throw InvalidArgument("train: epochs must be >= 0");
    if (!(cfg.learning_rate > 0.0) || cfg.learning_rate >= 1.0)
        throw InvalidArgument("train: learning_rate must be in (0, 1)");
    if (cfg.batch_size < 1) throw InvalidArgument("train: batch_size must be >= 1");
    if (cfg.weight_decay < 0.0) throw InvalidArgument("train: weight_decay must be >= 0");

    TrainResult res{initial, {}};
    if (cfg.epochs == 0) return res;

    std::vector<Example> examples = build_train_examples(d);
    if (examples.empty()) throw InvalidArgument("train: dataset has no usable train examples");

    std::set<int> seen_items;
    for (const Interaction& x : d.interactions)
        if (x.split == Split::Train) seen_items.insert(x.item);
    res.model.set_trained_items(std::move(seen_items));

    SeededRng root(cfg.seed);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        SeededRng shuffle_rng = root.child("epoch:" + std::to_string(epoch));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        std::size_t done = 0;
        int batch_idx = 0;
        while (done < order.size()) {
            std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size),
                                                     order.size() - done);
            std::vector<Example> batch;
            batch.reserve(take);
            for (std::size_t i = 0; i < take; ++i) batch.push_back(examples[order[done + i]]);
            done += take;

            std::uint64_t sample_seed =
                root.child("neg:" + std::to_string(epoch) + ":" + std::to_string(batch_idx)).seed();
            BatchPass pass;
            try {
                pass = batch_pass(res.model.dims(), res.model.params(), batch, d.items,
                                  cfg.negative_samples, sample_seed, true);
            } catch (const DegenerateInput&) {
                // Parameters already blew past float range; report as divergence.
                throw TrainingDiverged(epoch);
            }
            if (!std::isfinite(pass.loss)) throw TrainingDiverged(epoch);
            epoch_loss += pass.loss * static_cast<double>(take);

            VictimParams& p = res.model.mutable_params();
            if (cfg.weight_decay > 0.0) {
                VictimParams decay_ref = p;
                p.axpy(-cfg.learning_rate * cfg.weight_decay, decay_ref);
            }
            p.axpy(-cfg.learning_rate, pass.grad);
            try {
                ensure_finite(p.scoring, "scoring");
                ensure_finite(p.enc.token_embedding, "token embedding");
                ensure_finite(p.enc.patch_projection, "patch projection");
            } catch (const InvalidArgument&) {
                throw TrainingDiverged(epoch);
            }
            ++batch_idx;
        }
        res.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return res;
}

namespace {

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

void write_checkpoint(const VictimModel& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    const EncoderDims& d = m.dims();
    f << "#fpl-victim v1 dim=" << d.dim << " layer_count=" << d.layer_count
      << " head_count=" << d.head_count << " head_dim=" << d.head_dim
      << " vocab=" << m.params().enc.token_embedding.rows
      << " patch_dim=" << m.params().enc.patch_projection.rows << "\n";

    auto dump = [&](const std::string& name, const Mat& t) {
        f << "M " << name << " " << t.rows << " " << t.cols;
        for (double x : t.a) f << " " << fmt_double(x);
        f << "\n";
    };
    dump("token_embedding", m.params().enc.token_embedding);
    dump("patch_projection", m.params().enc.patch_projection);
    for (std::size_t l = 0; l < m.params().enc.layers.size(); ++l)
        for (std::size_t h = 0; h < m.params().enc.layers[l].size(); ++h) {
            std::string tag = "l" + std::to_string(l) + "h" + std::to_string(h);
            dump(tag + ".wq", m.params().enc.layers[l][h].wq);
            dump(tag + ".wk", m.params().enc.layers[l][h].wk);
            dump(tag + ".wv", m.params().enc.layers[l][h].wv);
        }
    dump("scoring", m.params().scoring);
    f << "V " << m.trained_items().size();
    for (int id : m.trained_items()) f << " " << id;
    f << "\n";
    if (!f) throw IoError("write failed for '" + path + "'");
}

VictimModel read_checkpoint(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(f, line)) throw ParseError("empty checkpoint", 1);
    std::istringstream hs(line);
    std::string magic, version;
    hs >> magic >> version;
    if (magic != "#fpl-victim") throw ParseError("missing #fpl-victim header", 1);
    if (version != "v1") throw SchemaVersionError(version, "v1");

    EncoderDims dims;
    int vocab = 0, patch_dim = 0;
    std::string pair;
    while (hs >> pair) {
        auto eq = pair.find('=');
        if (eq == std::string::npos) throw ParseError("bad header pair '" + pair + "'", 1);
        std::string key = pair.substr(0, eq);
        int val = std::stoi(pair.substr(eq + 1));
        if (key == "dim") dims.dim = val;
        else if (key == "layer_count") dims.layer_count = val;
        else if (key == "head_count") dims.head_count = val;
        else if (key == "head_dim") dims.head_dim = val;
        else if (key == "vocab") vocab = val;
        else if (key == "patch_dim") patch_dim = val;
        else throw ParseError("unknown header key '" + key + "'", 1);
    }

    VictimParams p;
    p.enc.layers.assign(static_cast<std::size_t>(dims.layer_count),
                        std::vector<HeadWeights>(static_cast<std::size_t>(dims.head_count)));
    int line_no = 1;
    auto load = [&](Mat& t) {
        ++line_no;
        if (!std::getline(f, line)) throw ParseError("truncated checkpoint", line_no);
        std::istringstream ls(line);
        std::string tag, name;
        std::size_t rows, cols;
        if (!(ls >> tag >> name >> rows >> cols) || tag != "M")
            throw ParseError("expected tensor record", line_no);
        t = Mat(rows, cols);
        for (auto& x : t.a)
            if (!(ls >> x)) throw ParseError("truncated tensor '" + name + "'", line_no);
    };
    load(p.enc.token_embedding);
    load(p.enc.patch_projection);
    for (int l = 0; l < dims.layer_count; ++l)
        for (int h = 0; h < dims.head_count; ++h) {
            auto& hw = p.enc.layers[static_cast<std::size_t>(l)][static_cast<std::size_t>(h)];
            load(hw.wq);
            load(hw.wk);
            load(hw.wv);
        }
    load(p.scoring);

    if (p.enc.token_embedding.rows != static_cast<std::size_t>(vocab) ||
        p.enc.patch_projection.rows != static_cast<std::size_t>(patch_dim))
        throw ParseError("checkpoint tensor shapes disagree with header", 1);

    VictimModel model(dims, std::move(p));
    if (std::getline(f, line)) {
        ++line_no;
        std::istringstream vs(line);
        std::string tag;
        std::size_t count = 0;
        if (!(vs >> tag >> count) || tag != "V")
            throw ParseError("expected trained-item record", line_no);
        std::set<int> seen;
        for (std::size_t i = 0; i < count; ++i) {
            int id;
            if (!(vs >> id)) throw ParseError("truncated trained-item record", line_no);
            seen.insert(id);
        }
        model.set_trained_items(std::move(seen));
    }
    return model;
}

}  // namespace fpl
