#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ff/autodiff.hpp"
#include "ff/common.hpp"
#include "ff/masking.hpp"
#include "ff/optim.hpp"
#include "ff/parallel.hpp"
#include "ff/rng.hpp"

namespace ff {

struct BrainBertConfig {
    int n_layers = 6;
    int heads = 12;
    int d_h = 768;
    int d_ff = 0;  // 0 means 4 * d_h
    double dropout = 0.1;
    int n_bins = 40;
    int max_frames = 512;
    double gamma = 1.0;
    double alpha = 1.0;

    int ff_dim() const { return d_ff > 0 ? d_ff : 4 * d_h; }

    void validate() const {
        require(n_layers >= 1 && heads >= 1 && d_h >= 1, "model config: bad dimensions");
        require(d_h % heads == 0, "model config: heads must divide d_h");
        require(gamma >= 0.0 && alpha >= 0.0, "model config: gamma/alpha must be >= 0");
    }

    // Desk-scale profile for CPU runs and CI.
    static BrainBertConfig desk() {
        BrainBertConfig c;
        c.n_layers = 2;
        c.heads = 4;
        c.d_h = 64;
        return c;
    }
};

// Fixed sinusoidal positional table (max_frames x d_h).
template <typename T>
ad::Mat<T> sinusoidal_positions(int max_frames, int d_h) {
    ad::Mat<T> p(max_frames, d_h);
    for (int t = 0; t < max_frames; ++t)
        for (int i = 0; i < d_h; ++i) {
            double rate = std::pow(10000.0, -2.0 * (i / 2) / static_cast<double>(d_h));
            double ang = t * rate;
            p(t, i) = T(i % 2 == 0 ? std::sin(ang) : std::cos(ang));
        }
    return p;
}

template <typename T>
struct BrainBertParams {
    BrainBertConfig cfg;
    ParamMap<T> tensors;

    static BrainBertParams init(const BrainBertConfig& cfg, uint64_t seed) {
        cfg.validate();
        BrainBertParams out;
        out.cfg = cfg;
        auto& t = out.tensors;
        const int d = cfg.d_h, n = cfg.n_bins, dff = cfg.ff_dim();
        uint64_t k = 0;
        auto xavier = [&](long r, long c) {
            return xavier_uniform_init<T>(r, c, Rng::derive(seed, ++k));
        };
        t["embed.w_in"] = xavier(d, n);
        t["pos.table"] = sinusoidal_positions<T>(cfg.max_frames, d);
        for (int j = 0; j < cfg.n_layers; ++j) {
            std::string p = "enc." + std::to_string(j) + ".";
            for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"})
                t[p + w] = xavier(d, d);
            for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"})
                t[p + b] = ad::Mat<T>::Zero(1, d);
            t[p + "ln1.gain"] = ad::Mat<T>::Ones(1, d);
            t[p + "ln1.bias"] = ad::Mat<T>::Zero(1, d);
            t[p + "ff.w1"] = xavier(d, dff);
            t[p + "ff.b1"] = ad::Mat<T>::Zero(1, dff);
            t[p + "ff.w2"] = xavier(dff, d);
            t[p + "ff.b2"] = ad::Mat<T>::Zero(1, d);
            t[p + "ln2.gain"] = ad::Mat<T>::Ones(1, d);
            t[p + "ln2.bias"] = ad::Mat<T>::Zero(1, d);
        }
        t["head.w1"] = xavier(d, d);
        t["head.b1"] = ad::Mat<T>::Zero(1, d);
        t["head.ln.gain"] = ad::Mat<T>::Ones(1, d);
        t["head.ln.bias"] = ad::Mat<T>::Zero(1, d);
        t["head.w2"] = xavier(d, n);
        t["head.b2"] = ad::Mat<T>::Zero(1, n);
        return out;
    }

    static bool trainable(const std::string& name) { return name != "pos.table"; }
};

// Graph-side view of the parameters; one per forward/backward pass.
template <typename T>
struct ParamVars {
    std::map<std::string, ad::Var<T>> vars;

    static ParamVars from(const BrainBertParams<T>& p, bool with_grad) {
        ParamVars out;
        for (const auto& [name, mat] : p.tensors)
            out.vars[name] = with_grad && BrainBertParams<T>::trainable(name)
                                 ? ad::Var<T>::param(mat)
                                 : ad::Var<T>::input(mat);
        return out;
    }

    const ad::Var<T>& at(const std::string& name) const {
        auto it = vars.find(name);
        if (it == vars.end()) throw state_error("missing parameter " + name);
        return it->second;
    }

    // Collects gradients accumulated by a backward pass.
    ParamMap<T> grads() const {
        ParamMap<T> out;
        for (const auto& [name, v] : vars)
            if (v.needs_grad() && v.grad().size() != 0) out[name] = v.grad();
        return out;
    }
};

namespace detail {

template <typename T>
ad::Var<T> dense(const ad::Var<T>& x, const ad::Var<T>& w, const ad::Var<T>& b) {
    return ad::add_rowwise(ad::matmul(x, w), b);
}

template <typename T>
ad::Var<T> multihead_attention(const ad::Var<T>& x, const ParamVars<T>& pv,
                               const std::string& prefix, int heads) {
    const long d = x.cols();
    const long dk = d / heads;
    auto q = dense(x, pv.at(prefix + "wq"), pv.at(prefix + "bq"));
    auto k = dense(x, pv.at(prefix + "wk"), pv.at(prefix + "bk"));
    auto v = dense(x, pv.at(prefix + "wv"), pv.at(prefix + "bv"));
    std::vector<ad::Var<T>> per_head;
    const T inv_sqrt_dk = T(1.0 / std::sqrt(static_cast<double>(dk)));
    for (int h = 0; h < heads; ++h) {
        auto qh = ad::slice_cols(q, h * dk, dk);
        auto kh = ad::slice_cols(k, h * dk, dk);
        auto vh = ad::slice_cols(v, h * dk, dk);
        auto scores = ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt_dk);
        per_head.push_back(ad::matmul(ad::softmax_rows(scores), vh));
    }
    auto cat = ad::hcat(per_head);
    return dense(cat, pv.at(prefix + "wo"), pv.at(prefix + "bo"));
}

}  // namespace detail

// One encoder layer: self-attention sublayer then feed-forward sublayer,
// each followed by dropout, residual add, and layer norm (post-norm).
template <typename T>
ad::Var<T> encoder_layer_forward(const ad::Var<T>& x, const ParamVars<T>& pv, int layer,
                                 const BrainBertConfig& cfg, bool train, Rng& rng) {
    require(x.cols() == cfg.d_h, "encoder layer: input width must equal d_h");
    const std::string p = "enc." + std::to_string(layer) + ".";
    auto attn = detail::multihead_attention(x, pv, p + "attn.", cfg.heads);
    auto h1 = ad::layer_norm(ad::add(x, ad::dropout(attn, cfg.dropout, rng, train)),
                             pv.at(p + "ln1.gain"), pv.at(p + "ln1.bias"));
    auto ff = detail::dense(
        ad::gelu(detail::dense(h1, pv.at(p + "ff.w1"), pv.at(p + "ff.b1"))),
        pv.at(p + "ff.w2"), pv.at(p + "ff.b2"));
    return ad::layer_norm(ad::add(h1, ad::dropout(ff, cfg.dropout, rng, train)),
                          pv.at(p + "ln2.gain"), pv.at(p + "ln2.bias"));
}

// Input projection plus positional embedding: frame t maps to
// W_in * Y[:, t] + P[t].
template <typename T>
ad::Var<T> embed_input(const ad::Mat<T>& spec, const ParamVars<T>& pv,
                       const BrainBertConfig& cfg) {
    require(spec.rows() == cfg.n_bins, "embed: spectrogram height must equal n_bins");
    const long m = spec.cols();
    if (m > cfg.max_frames) throw shape_error("embed: more frames than positional table rows");
    auto y_t = ad::Var<T>::input(ad::Mat<T>(spec.transpose()));  // m x n
    auto proj = ad::matmul(y_t, ad::transpose(pv.at("embed.w_in")));
    auto pos = ad::slice_rows(pv.at("pos.table"), 0, m);
    return ad::add(proj, pos);
}

template <typename T>
ad::Var<T> encode(const ad::Mat<T>& spec, const ParamVars<T>& pv, const BrainBertConfig& cfg,
                  int upto_layer, bool train, Rng& rng) {
    require(upto_layer >= 1 && upto_layer <= cfg.n_layers, "encode: bad layer index");
    auto e = embed_input(spec, pv, cfg);
    for (int j = 0; j < upto_layer; ++j) e = encoder_layer_forward(e, pv, j, cfg, train, rng);
    return e;
}

template <typename T>
ad::Var<T> encode(const ad::Mat<T>& spec, const ParamVars<T>& pv, const BrainBertConfig& cfg) {
    Rng rng(0);
    return encode(spec, pv, cfg, cfg.n_layers, /*train=*/false, rng);
}

// Spectrogram prediction head: dense + GeLU + layer norm, then dense back to
// n bins; output transposed to n x m.
template <typename T>
ad::Var<T> predict_spectrogram(const ad::Var<T>& embedding, const ParamVars<T>& pv) {
    auto h = ad::layer_norm(
        ad::gelu(detail::dense(embedding, pv.at("head.w1"), pv.at("head.b1"))),
        pv.at("head.ln.gain"), pv.at("head.ln.bias"));
    return ad::transpose(detail::dense(h, pv.at("head.w2"), pv.at("head.b2")));
}

struct LossBreakdown {
    double l1 = 0.0;
    double content = 0.0;
    double total = 0.0;
};

template <typename T>
std::vector<std::pair<int, int>> content_positions(const ad::Mat<T>& target,
                                                   const std::set<std::pair<int, int>>& masked,
                                                   double gamma) {
    std::vector<std::pair<int, int>> out;
    for (auto [r, c] : masked)
        if (static_cast<double>(target(r, c)) > gamma) out.emplace_back(r, c);
    return out;
}

// total = l1 + alpha * content. Both terms are means over their index sets
// and 0 when the set is empty.
template <typename T>
std::pair<ad::Var<T>, LossBreakdown> total_loss(const ad::Var<T>& pred, const ad::Mat<T>& target,
                                                const std::set<std::pair<int, int>>& masked,
                                                double gamma, double alpha) {
    std::vector<std::pair<int, int>> all(masked.begin(), masked.end());
    auto l1 = ad::masked_l1(pred, target, all);
    auto content = ad::masked_l1(pred, target, content_positions(target, masked, gamma));
    auto total = ad::add(l1, ad::scale(content, T(alpha)));
    LossBreakdown br;
    br.l1 = static_cast<double>(l1.val()(0, 0));
    br.content = static_cast<double>(content.val()(0, 0));
    br.total = static_cast<double>(total.val()(0, 0));
    return {total, br};
}

enum class MaskScheme { static_scheme, adaptive };

struct PretrainConfig {
    long steps = 2000;
    int batch_size = 16;
    long val_interval = 50;
    double val_fraction = 0.1;
    long warmup = 0;  // linear lr warmup steps, 0 disables
    OptConfig opt{};  // lr defaults to 1e-4
    MaskParams mask{};
    MaskScheme scheme = MaskScheme::static_scheme;
    uint64_t seed = 0;
};

struct CurvePoint {
    long step;
    double train_l1, train_content, train_total, val_total;
};

template <typename T>
struct PretrainResult {
    BrainBertParams<T> best;          // weights at the best validation loss
    BrainBertParams<T> last;          // weights at the final (or aborting) step
    double best_val = 0.0;
    long best_step = 0;
    bool diverged = false;
    std::vector<CurvePoint> curve;
};

namespace detail {

template <typename T>
struct ItemResult {
    ParamMap<T> grads;
    LossBreakdown loss;
};

// Masks, encodes and reconstructs one segment; loss is scaled by
// inv_batch so summed gradients average over the batch.
template <typename T>
ItemResult<T> pretrain_item(const ad::Mat<T>& segment, const std::vector<double>& foi_hz,
                            const BrainBertParams<T>& params, const PretrainConfig& pc,
                            uint64_t item_seed, double inv_batch, bool with_grad) {
    const auto& cfg = params.cfg;
    MaskPlan plan =
        pc.scheme == MaskScheme::static_scheme
            ? sample_static_masks(static_cast<int>(segment.rows()),
                                  static_cast<int>(segment.cols()), pc.mask,
                                  Rng::derive(item_seed, 11))
            : sample_adaptive_masks(static_cast<int>(segment.rows()),
                                    static_cast<int>(segment.cols()), foi_hz, pc.mask,
                                    Rng::derive(item_seed, 11));
    Eigen::MatrixXd seg_d = segment.template cast<double>();
    MaskedSpectrogram masked = apply_masks(seg_d, plan);
    ad::Mat<T> augmented = masked.values.cast<T>();

    auto pv = ParamVars<T>::from(params, with_grad);
    Rng drop_rng(Rng::derive(item_seed, 12));
    auto emb = encode<T>(augmented, pv, cfg, cfg.n_layers, /*train=*/with_grad, drop_rng);
    auto pred = predict_spectrogram(emb, pv);
    auto [loss, br] = total_loss(pred, segment, masked.masked_set, cfg.gamma, cfg.alpha);
    ItemResult<T> out;
    out.loss = br;
    if (with_grad) {
        ad::scale(loss, T(inv_batch)).backward();
        out.grads = pv.grads();
    }
    return out;
}

}  // namespace detail

// Masked-spectrogram pretraining loop: sample batch, mask, encode, predict,
// backprop, LAMB step. Validation uses a held-out slice of the corpus with
// fixed masks; the best-validation weights are retained.
template <typename T>
PretrainResult<T> pretrain(const std::vector<ad::Mat<T>>& corpus, const std::vector<double>& foi_hz,
                           const BrainBertConfig& cfg, const PretrainConfig& pc) {
    cfg.validate();
    require(!corpus.empty(), "pretrain: empty corpus");
    const size_t n_val = std::max<size_t>(1, static_cast<size_t>(corpus.size() * pc.val_fraction));
    require(n_val < corpus.size(), "pretrain: corpus too small for a validation split");

    // Deterministic shuffle, then split off the validation slice.
    std::vector<size_t> order(corpus.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng split_rng(Rng::derive(pc.seed, 1));
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[split_rng.uniform_int(0, static_cast<int>(i) - 1)]);
    std::vector<size_t> val_idx(order.begin(), order.begin() + n_val);
    std::vector<size_t> train_idx(order.begin() + n_val, order.end());

    BrainBertParams<T> params = BrainBertParams<T>::init(cfg, Rng::derive(pc.seed, 2));
    OptState<T> opt_state;

    PretrainResult<T> result;
    result.best = params;
    result.best_val = std::numeric_limits<double>::infinity();

    auto validation_loss = [&](const BrainBertParams<T>& p) {
        std::vector<double> losses(val_idx.size());
        parallel_for(static_cast<int>(val_idx.size()), [&](int i) {
            auto r = detail::pretrain_item<T>(corpus[val_idx[static_cast<size_t>(i)]], foi_hz, p,
                                              pc, Rng::derive(pc.seed, 900, i), 1.0,
                                              /*with_grad=*/false);
            losses[static_cast<size_t>(i)] = r.loss.total;
        });
        double acc = 0.0;
        for (double l : losses) acc += l;
        return acc / static_cast<double>(losses.size());
    };

    Rng batch_rng(Rng::derive(pc.seed, 3));
    for (long step = 1; step <= pc.steps; ++step) {
        std::vector<size_t> batch(static_cast<size_t>(pc.batch_size));
        for (auto& b : batch)
            b = train_idx[static_cast<size_t>(
                batch_rng.uniform_int(0, static_cast<int>(train_idx.size()) - 1))];

        std::vector<detail::ItemResult<T>> items(batch.size());
        parallel_for(static_cast<int>(batch.size()), [&](int i) {
            items[static_cast<size_t>(i)] = detail::pretrain_item<T>(
                corpus[batch[static_cast<size_t>(i)]], foi_hz, params, pc,
                Rng::derive(pc.seed, static_cast<uint64_t>(step), i), 1.0 / pc.batch_size,
                /*with_grad=*/true);
        });

        ParamMap<T> grads;
        LossBreakdown mean_loss;
        for (const auto& item : items) {  // fixed order for determinism
            for (const auto& [name, g] : item.grads) {
                auto it = grads.find(name);
                if (it == grads.end())
                    grads[name] = g;
                else
                    it->second += g;
            }
            mean_loss.l1 += item.loss.l1 / pc.batch_size;
            mean_loss.content += item.loss.content / pc.batch_size;
            mean_loss.total += item.loss.total / pc.batch_size;
        }
        if (!std::isfinite(mean_loss.total)) {
            result.diverged = true;
            result.last = params;
            return result;
        }
        OptConfig step_opt = pc.opt;
        if (pc.warmup > 0 && step < pc.warmup)
            step_opt.lr = pc.opt.lr * static_cast<double>(step) / static_cast<double>(pc.warmup);
        lamb_step(params.tensors, grads, opt_state, step_opt);

        if (step % pc.val_interval == 0 || step == pc.steps) {
            double val = validation_loss(params);
            result.curve.push_back({step, mean_loss.l1, mean_loss.content, mean_loss.total, val});
            if (val < result.best_val) {
                result.best_val = val;
                result.best_step = step;
                result.best = params;
            }
        }
    }
    result.last = params;
    return result;
}

}  // namespace ff
