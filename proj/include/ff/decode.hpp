#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ff/common.hpp"
#include "ff/model.hpp"
#include "ff/parallel.hpp"
#include "ff/pipeline.hpp"

namespace ff {

enum class Split { train, val, test, unused };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
        default: return "unused";
    }
}

struct LabeledExample {
    std::string electrode;
    double center_time_s = 0.0;
    int label = 0;  // binary
    Split split = Split::train;
};

struct TaskDataset {
    std::string task;
    std::vector<LabeledExample> examples;

    void validate() const {
        for (const auto& e : examples)
            require(e.label == 0 || e.label == 1, "dataset: labels must be binary");
    }
};

struct EvalRow {
    std::string task, electrode, model, mode;
    uint64_t seed = 0;
    long n_train = 0;
    double auc = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
};

// Probability that a random positive outscores a random negative; ties count
// half (rank / Mann-Whitney form).
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    require(scores.size() == labels.size() && !scores.empty(), "auc: size mismatch");
    long n_pos = 0;
    for (int l : labels) {
        require(l == 0 || l == 1, "auc: labels must be binary");
        n_pos += l;
    }
    const long n = static_cast<long>(scores.size());
    const long n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw input_error("auc: both classes required");

    std::vector<long> idx(scores.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<long>(i);
    std::sort(idx.begin(), idx.end(), [&](long a, long b) { return scores[a] < scores[b]; });

    // average ranks over tie groups, then the rank-sum statistic
    std::vector<double> rank(scores.size());
    long i = 0;
    while (i < n) {
        long j = i;
        while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
        double avg = 0.5 * (i + j) + 1.0;
        for (long k = i; k <= j; ++k) rank[idx[k]] = avg;
        i = j + 1;
    }
    double pos_rank_sum = 0.0;
    for (size_t k = 0; k < scores.size(); ++k)
        if (labels[k] == 1) pos_rank_sum += rank[k];
    return (pos_rank_sum - 0.5 * n_pos * (n_pos + 1)) / (static_cast<double>(n_pos) * n_neg);
}

// k electrodes with the highest AUC under the reference model; ties broken
// by lexicographic electrode id.
inline std::vector<std::string> select_top_electrodes(const EvalReport& report,
                                                      const std::string& task, int k = 10,
                                                      const std::string& model = "lin_time_5s") {
    std::map<std::string, double> best;
    for (const auto& r : report.rows)
        if (r.task == task && r.model == model) {
            auto it = best.find(r.electrode);
            if (it == best.end() || r.auc > it->second) best[r.electrode] = r.auc;
        }
    require(static_cast<int>(best.size()) >= k, "select_top_electrodes: not enough electrodes");
    std::vector<std::pair<std::string, double>> ranked(best.begin(), best.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> out;
    for (int j = 0; j < k; ++j) out.push_back(ranked[static_cast<size_t>(j)].first);
    return out;
}

// Mean of the center 2k embedding frames at the chosen layer.
template <typename T>
Eigen::VectorXd extract_features(const ad::Mat<T>& spec, const BrainBertParams<T>& params,
                                 int k = 5, int layer = -1) {
    require(k >= 1, "extract_features: k must be >= 1");
    const long m = spec.cols();
    require(m >= 2 * k, "extract_features: window larger than input");
    auto pv = ParamVars<T>::from(params, false);
    Rng rng(0);
    auto emb = encode<T>(spec, pv, params.cfg, layer < 0 ? params.cfg.n_layers : layer,
                         /*train=*/false, rng);
    const long l = m / 2;
    ad::Mat<T> center = emb.val().middleRows(l - k, 2 * k);
    return center.colwise().mean().transpose().template cast<double>();
}

enum class BaselineKind { lin_time_5s, lin_time_250ms, deep_5ff, lin_stft, lin_superlet };

inline BaselineKind parse_baseline(const std::string& s) {
    if (s == "lin_time_5s") return BaselineKind::lin_time_5s;
    if (s == "lin_time_250ms") return BaselineKind::lin_time_250ms;
    if (s == "deep_5ff") return BaselineKind::deep_5ff;
    if (s == "lin_stft") return BaselineKind::lin_stft;
    if (s == "lin_superlet") return BaselineKind::lin_superlet;
    throw parameter_error("unknown baseline kind: " + s);
}

inline const char* baseline_name(BaselineKind k) {
    switch (k) {
        case BaselineKind::lin_time_5s: return "lin_time_5s";
        case BaselineKind::lin_time_250ms: return "lin_time_250ms";
        case BaselineKind::deep_5ff: return "deep_5ff";
        case BaselineKind::lin_stft: return "lin_stft";
        default: return "lin_superlet";
    }
}

// Feed-forward classifier: ReLU hidden layers, a single logit out.
template <typename T>
struct MlpModel {
    std::vector<long> dims;  // e.g. {10240, 1024, 512, 256, 128, 1}
    ParamMap<T> tensors;

    static MlpModel init(std::vector<long> dims, uint64_t seed) {
        require(dims.size() >= 2 && dims.back() == 1, "mlp: need input dim and a single output");
        MlpModel out;
        out.dims = std::move(dims);
        for (size_t i = 0; i + 1 < out.dims.size(); ++i) {
            out.tensors["w" + std::to_string(i)] = xavier_uniform_init<T>(
                out.dims[i], out.dims[i + 1], Rng::derive(seed, i + 1));
            out.tensors["b" + std::to_string(i)] = ad::Mat<T>::Zero(1, out.dims[i + 1]);
        }
        return out;
    }

    long n_params() const {
        long n = 0;
        for (const auto& [name, t] : tensors) n += t.size();
        return n;
    }

    // Logits for a k x d_in batch.
    ad::Var<T> forward(const ad::Var<T>& x, const std::map<std::string, ad::Var<T>>& vars) const {
        ad::Var<T> h = x;
        for (size_t i = 0; i + 1 < dims.size(); ++i) {
            h = ad::add_rowwise(ad::matmul(h, vars.at("w" + std::to_string(i))),
                                vars.at("b" + std::to_string(i)));
            if (i + 2 < dims.size()) h = ad::relu(h);
        }
        return h;
    }

    Eigen::VectorXd scores(const Eigen::MatrixXd& x) const {
        std::map<std::string, ad::Var<T>> vars;
        for (const auto& [name, t] : tensors) vars[name] = ad::Var<T>::input(t);
        auto logits = forward(ad::Var<T>::input(x.cast<T>()), vars);
        Eigen::VectorXd out(logits.rows());
        for (long i = 0; i < logits.rows(); ++i)
            out(i) = 1.0 / (1.0 + std::exp(-static_cast<double>(logits.val()(i, 0))));
        return out;
    }
};

// Architecture table for the five reference decoders; d_raw is the 5 s
// context length in samples, n_bins the spectrogram height.
template <typename T>
MlpModel<T> build_baseline(BaselineKind kind, uint64_t seed, long d_raw = 10240,
                           long n_bins = 40) {
    switch (kind) {
        case BaselineKind::lin_time_5s: return MlpModel<T>::init({d_raw, 1}, seed);
        case BaselineKind::lin_time_250ms: return MlpModel<T>::init({d_raw / 20, 1}, seed);
        case BaselineKind::deep_5ff:
            return MlpModel<T>::init({d_raw, 1024, 512, 256, 128, 1}, seed);
        case BaselineKind::lin_stft:
        case BaselineKind::lin_superlet: return MlpModel<T>::init({n_bins, 1}, seed);
    }
    throw parameter_error("build_baseline: unknown kind");
}

struct DecodeConfig {
    long updates = 1000;
    int batch_size = 64;
    long val_interval = 100;
    double head_lr = 1e-3;
    double encoder_lr = 1e-4;
    double weight_decay = 0.0;
    int feature_k = 5;
    uint64_t seed = 0;

    // Small profile for CPU acceptance runs.
    static DecodeConfig desk() {
        DecodeConfig c;
        c.updates = 300;
        c.batch_size = 16;
        c.val_interval = 50;
        return c;
    }
};

namespace detail {

inline void check_two_classes(const std::vector<int>& labels, const char* where) {
    bool has0 = false, has1 = false;
    for (int l : labels) (l ? has1 : has0) = true;
    if (!has0 || !has1) throw input_error(std::string(where) + ": single-class split");
}

template <typename T>
Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, const std::vector<long>& idx) {
    Eigen::MatrixXd out(static_cast<long>(idx.size()), x.cols());
    for (size_t i = 0; i < idx.size(); ++i) out.row(static_cast<long>(i)) = x.row(idx[i]);
    return out;
}

}  // namespace detail

// AdamW + BCE training of an MlpModel on a fixed feature matrix; retains the
// weights with the best validation loss.
template <typename T>
MlpModel<T> train_mlp(MlpModel<T> model, const Eigen::MatrixXd& x_train,
                      const std::vector<int>& y_train, const Eigen::MatrixXd& x_val,
                      const std::vector<int>& y_val, const DecodeConfig& cfg) {
    require(x_train.rows() == static_cast<long>(y_train.size()), "train_mlp: size mismatch");
    require(x_val.rows() == static_cast<long>(y_val.size()), "train_mlp: size mismatch");
    detail::check_two_classes(y_train, "train_mlp");
    detail::check_two_classes(y_val, "train_mlp(val)");

    OptConfig opt;
    opt.lr = cfg.head_lr;
    opt.weight_decay = cfg.weight_decay;
    OptState<T> st;
    Rng batch_rng(Rng::derive(cfg.seed, 41));

    auto val_loss = [&](const MlpModel<T>& m) {
        std::map<std::string, ad::Var<T>> vars;
        for (const auto& [name, t] : m.tensors) vars[name] = ad::Var<T>::input(t);
        auto logits = m.forward(ad::Var<T>::input(x_val.cast<T>()), vars);
        return static_cast<double>(ad::bce_with_logits(logits, y_val).val()(0, 0));
    };

    MlpModel<T> best = model;
    double best_val = val_loss(model);
    for (long step = 1; step <= cfg.updates; ++step) {
        std::vector<long> batch(static_cast<size_t>(cfg.batch_size));
        std::vector<int> labels(batch.size());
        for (size_t i = 0; i < batch.size(); ++i) {
            batch[i] = batch_rng.uniform_int(0, static_cast<int>(x_train.rows()) - 1);
            labels[i] = y_train[static_cast<size_t>(batch[i])];
        }
        std::map<std::string, ad::Var<T>> vars;
        for (const auto& [name, t] : model.tensors) vars[name] = ad::Var<T>::param(t);
        auto logits =
            model.forward(ad::Var<T>::input(detail::gather_rows<T>(x_train, batch).template cast<T>()), vars);
        ad::bce_with_logits(logits, labels).backward();
        ParamMap<T> grads;
        for (const auto& [name, v] : vars)
            if (v.grad().size() != 0) grads[name] = v.grad();
        adamw_step(model.tensors, grads, st, opt);

        if (step % cfg.val_interval == 0 || step == cfg.updates) {
            double v = val_loss(model);
            if (v < best_val) {
                best_val = v;
                best = model;
            }
        }
    }
    return best;
}

// Everything decoding needs for one (task, electrode): labels, split tags and
// the per-example tensors each model family consumes.
struct PreparedTask {
    std::string task, electrode;
    std::vector<int> labels;
    std::vector<Split> splits;
    std::vector<Eigen::VectorXd> raw;     // 5 s preprocessed context
    std::vector<Eigen::MatrixXd> specs;   // z-scored spectrogram per context

    std::vector<long> split_indices(Split s) const {
        std::vector<long> out;
        for (size_t i = 0; i < splits.size(); ++i)
            if (splits[i] == s) out.push_back(static_cast<long>(i));
        return out;
    }

    std::vector<int> split_labels(Split s) const {
        std::vector<int> out;
        for (long i : split_indices(s)) out.push_back(labels[static_cast<size_t>(i)]);
        return out;
    }
};

namespace detail {

// Per-example standardization of raw-time inputs (zero mean, unit variance).
inline Eigen::MatrixXd standardized_raw(const PreparedTask& task, long take_center = 0) {
    const long d = task.raw.at(0).size();
    const long width = take_center > 0 ? take_center : d;
    Eigen::MatrixXd x(static_cast<long>(task.raw.size()), width);
    for (size_t i = 0; i < task.raw.size(); ++i) {
        Eigen::VectorXd v = task.raw[i].segment((d - width) / 2, width);
        double mu = v.mean();
        double sd = std::sqrt((v.array() - mu).square().mean());
        x.row(static_cast<long>(i)) = ((v.array() - mu) / std::max(sd, 1e-8)).transpose();
    }
    return x;
}

// Mean spectrogram column over the center +/- 5 frames.
inline Eigen::MatrixXd spec_band_features(const PreparedTask& task) {
    const long n = task.specs.at(0).rows();
    Eigen::MatrixXd x(static_cast<long>(task.specs.size()), n);
    for (size_t i = 0; i < task.specs.size(); ++i) {
        const auto& s = task.specs[i];
        long c = s.cols() / 2;
        long lo = std::max<long>(0, c - 5);
        long hi = std::min<long>(s.cols(), c + 5);
        x.row(static_cast<long>(i)) = s.middleCols(lo, hi - lo).rowwise().mean().transpose();
    }
    return x;
}

}  // namespace detail

enum class DecodeMode { frozen, finetune, baseline };

inline const char* mode_name(DecodeMode m) {
    switch (m) {
        case DecodeMode::frozen: return "frozen";
        case DecodeMode::finetune: return "finetune";
        default: return "baseline";
    }
}

template <typename T>
Eigen::MatrixXd frozen_feature_matrix(const PreparedTask& task, const BrainBertParams<T>& params,
                                      int k) {
    Eigen::MatrixXd x(static_cast<long>(task.specs.size()), params.cfg.d_h);
    parallel_for(static_cast<int>(task.specs.size()), [&](int i) {
        ad::Mat<T> spec = task.specs[static_cast<size_t>(i)].cast<T>();
        x.row(i) = extract_features<T>(spec, params, k).transpose();
    });
    return x;
}

template <typename T>
struct TrainedDecoder {
    MlpModel<T> head;                  // classifier (all modes)
    BrainBertParams<T> encoder;        // finetune mode only
    DecodeMode mode = DecodeMode::baseline;
    BaselineKind kind = BaselineKind::lin_time_5s;
    int feature_k = 5;
    double test_auc = 0.0;
};

namespace detail {

// One fine-tuning item: encode with dropout, center-slice average, logit.
template <typename T>
ad::Var<T> ft_logit(const ad::Mat<T>& spec, const ParamVars<T>& pv,
                    const std::map<std::string, ad::Var<T>>& head_vars,
                    const BrainBertConfig& cfg, int k, bool train, Rng& rng) {
    auto emb = encode<T>(spec, pv, cfg, cfg.n_layers, train, rng);
    const long l = emb.rows() / 2;
    auto center = ad::mean_rows(ad::slice_rows(emb, l - k, 2 * k));  // 1 x d_h
    return ad::add(ad::matmul(center, head_vars.at("w0")), head_vars.at("b0"));
}

}  // namespace detail

// Frozen or fine-tuned decoding with a pretrained (or fresh) encoder.
template <typename T>
TrainedDecoder<T> train_encoder_decoder(const PreparedTask& task,
                                        const BrainBertParams<T>& encoder_init, DecodeMode mode,
                                        const DecodeConfig& cfg) {
    require(mode != DecodeMode::baseline, "train_encoder_decoder: use train_baseline");
    auto tr = task.split_indices(Split::train);
    auto va = task.split_indices(Split::val);
    auto te = task.split_indices(Split::test);
    require(!tr.empty() && !va.empty() && !te.empty(), "decode: every split must be nonempty");
    detail::check_two_classes(task.split_labels(Split::train), "decode");
    detail::check_two_classes(task.split_labels(Split::test), "decode(test)");

    TrainedDecoder<T> out;
    out.mode = mode;
    out.feature_k = cfg.feature_k;
    out.encoder = encoder_init;
    out.head = MlpModel<T>::init({encoder_init.cfg.d_h, 1}, Rng::derive(cfg.seed, 7));

    if (mode == DecodeMode::frozen) {
        Eigen::MatrixXd feats = frozen_feature_matrix(task, encoder_init, cfg.feature_k);
        out.head = train_mlp<T>(out.head, detail::gather_rows<T>(feats, tr),
                                task.split_labels(Split::train), detail::gather_rows<T>(feats, va),
                                task.split_labels(Split::val), cfg);
        Eigen::MatrixXd x_test = detail::gather_rows<T>(feats, te);
        Eigen::VectorXd s = out.head.scores(x_test);
        std::vector<double> scores(s.data(), s.data() + s.size());
        out.test_auc = roc_auc(scores, task.split_labels(Split::test));
        return out;
    }

    // fine-tune: encoder at encoder_lr, head at head_lr, dropout active
    BrainBertParams<T> enc = encoder_init;
    MlpModel<T> head = out.head;
    OptConfig enc_opt, head_opt;
    enc_opt.lr = cfg.encoder_lr;
    head_opt.lr = cfg.head_lr;
    enc_opt.weight_decay = head_opt.weight_decay = cfg.weight_decay;
    OptState<T> enc_st, head_st;
    Rng batch_rng(Rng::derive(cfg.seed, 42));

    auto eval_scores = [&](const BrainBertParams<T>& e, const MlpModel<T>& h,
                           const std::vector<long>& idx) {
        std::vector<double> scores(idx.size());
        parallel_for(static_cast<int>(idx.size()), [&](int i) {
            auto pv = ParamVars<T>::from(e, false);
            std::map<std::string, ad::Var<T>> hv;
            for (const auto& [name, t] : h.tensors) hv[name] = ad::Var<T>::input(t);
            Rng rng(0);
            ad::Mat<T> spec = task.specs[static_cast<size_t>(idx[static_cast<size_t>(i)])].cast<T>();
            auto logit = detail::ft_logit<T>(spec, pv, hv, e.cfg, cfg.feature_k, false, rng);
            scores[static_cast<size_t>(i)] = static_cast<double>(logit.val()(0, 0));
        });
        return scores;
    };
    auto val_loss = [&](const BrainBertParams<T>& e, const MlpModel<T>& h) {
        auto scores = eval_scores(e, h, va);
        auto labels = task.split_labels(Split::val);
        double acc = 0.0;
        for (size_t i = 0; i < scores.size(); ++i) {
            double z = scores[i], y = labels[i];
            acc += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
        }
        return acc / static_cast<double>(scores.size());
    };

    BrainBertParams<T> best_enc = enc;
    MlpModel<T> best_head = head;
    double best_val = val_loss(enc, head);
    const double inv_batch = 1.0 / cfg.batch_size;

    for (long step = 1; step <= cfg.updates; ++step) {
        std::vector<long> batch(static_cast<size_t>(cfg.batch_size));
        for (auto& b : batch)
            b = tr[static_cast<size_t>(batch_rng.uniform_int(0, static_cast<int>(tr.size()) - 1))];

        struct Item {
            ParamMap<T> enc_grads, head_grads;
        };
        std::vector<Item> items(batch.size());
        parallel_for(static_cast<int>(batch.size()), [&](int i) {
            long ex = batch[static_cast<size_t>(i)];
            auto pv = ParamVars<T>::from(enc, true);
            std::map<std::string, ad::Var<T>> hv;
            for (const auto& [name, t] : head.tensors) hv[name] = ad::Var<T>::param(t);
            Rng drop_rng(Rng::derive(cfg.seed, static_cast<uint64_t>(step) * 1000 + 13, i));
            ad::Mat<T> spec = task.specs[static_cast<size_t>(ex)].cast<T>();
            auto logit = detail::ft_logit<T>(spec, pv, hv, enc.cfg, cfg.feature_k, true, drop_rng);
            std::vector<int> lab{task.labels[static_cast<size_t>(ex)]};
            ad::scale(ad::bce_with_logits(logit, lab), T(inv_batch)).backward();
            items[static_cast<size_t>(i)].enc_grads = pv.grads();
            for (const auto& [name, v] : hv)
                if (v.grad().size() != 0) items[static_cast<size_t>(i)].head_grads[name] = v.grad();
        });

        ParamMap<T> enc_grads, head_grads;
        for (const auto& item : items) {  // fixed order for determinism
            for (const auto& [name, g] : item.enc_grads) {
                auto it = enc_grads.find(name);
                it == enc_grads.end() ? void(enc_grads[name] = g) : void(it->second += g);
            }
            for (const auto& [name, g] : item.head_grads) {
                auto it = head_grads.find(name);
                it == head_grads.end() ? void(head_grads[name] = g) : void(it->second += g);
            }
        }
        adamw_step(enc.tensors, enc_grads, enc_st, enc_opt);
        adamw_step(head.tensors, head_grads, head_st, head_opt);

        if (step % cfg.val_interval == 0 || step == cfg.updates) {
            double v = val_loss(enc, head);
            if (v < best_val) {
                best_val = v;
                best_enc = enc;
                best_head = head;
            }
        }
    }

    out.encoder = best_enc;
    out.head = best_head;
    auto scores = eval_scores(best_enc, best_head, te);
    out.test_auc = roc_auc(scores, task.split_labels(Split::test));
    return out;
}

// One of the five reference decoders on precomputed features.
template <typename T>
TrainedDecoder<T> train_baseline(const PreparedTask& task, BaselineKind kind,
                                 const DecodeConfig& cfg) {
    auto tr = task.split_indices(Split::train);
    auto va = task.split_indices(Split::val);
    auto te = task.split_indices(Split::test);
    require(!tr.empty() && !va.empty() && !te.empty(), "decode: every split must be nonempty");
    detail::check_two_classes(task.split_labels(Split::train), "decode");

    Eigen::MatrixXd feats;
    switch (kind) {
        case BaselineKind::lin_time_5s:
        case BaselineKind::deep_5ff: feats = detail::standardized_raw(task); break;
        case BaselineKind::lin_time_250ms:
            feats = detail::standardized_raw(task, task.raw.at(0).size() / 20);
            break;
        case BaselineKind::lin_stft:
        case BaselineKind::lin_superlet: feats = detail::spec_band_features(task); break;
    }

    TrainedDecoder<T> out;
    out.mode = DecodeMode::baseline;
    out.kind = kind;
    auto model = build_baseline<T>(kind, Rng::derive(cfg.seed, 8), task.raw.at(0).size(),
                                   task.specs.at(0).rows());
    require(model.dims.front() == feats.cols(), "train_baseline: feature width mismatch");
    out.head = train_mlp<T>(model, detail::gather_rows<T>(feats, tr),
                            task.split_labels(Split::train), detail::gather_rows<T>(feats, va),
                            task.split_labels(Split::val), cfg);
    Eigen::VectorXd s = out.head.scores(detail::gather_rows<T>(feats, te));
    std::vector<double> scores(s.data(), s.data() + s.size());
    out.test_auc = roc_auc(scores, task.split_labels(Split::test));
    return out;
}

// Data-efficiency sweep: subsample the training split (val/test fixed) and
// report test AUC per (size, seed) for a given training closure.
struct SweepPoint {
    long size;
    uint64_t seed;
    double auc;
};

template <typename TrainFn>
std::vector<SweepPoint> efficiency_sweep(const PreparedTask& task, const std::vector<long>& sizes,
                                         const std::vector<uint64_t>& seeds, TrainFn train_fn) {
    auto tr = task.split_indices(Split::train);
    std::vector<SweepPoint> out;
    for (long size : sizes) {
        require(size >= 1 && size <= static_cast<long>(tr.size()),
                "efficiency_sweep: size exceeds training split");
        for (uint64_t seed : seeds) {
            PreparedTask sub = task;
            if (size < static_cast<long>(tr.size())) {
                std::vector<long> pool = tr;
                Rng rng(Rng::derive(seed, 77, static_cast<uint64_t>(size)));
                for (size_t i = pool.size(); i > 1; --i)
                    std::swap(pool[i - 1], pool[rng.uniform_int(0, static_cast<int>(i) - 1)]);
                for (auto it = pool.begin() + size; it != pool.end(); ++it)
                    sub.splits[static_cast<size_t>(*it)] = Split::unused;
            }
            out.push_back({size, seed, train_fn(sub, seed)});
        }
    }
    return out;
}

}  // namespace ff
