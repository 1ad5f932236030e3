#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ff/decode.hpp"

using namespace ff;

namespace {

// Exhaustive positive-negative pair counting.
double auc_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
    double concordant = 0.0;
    long pairs = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                concordant += 1.0;
            else if (scores[i] == scores[j])
                concordant += 0.5;
        }
    }
    return concordant / static_cast<double>(pairs);
}

// Binary task whose feature clouds are linearly separable by a margin.
PreparedTask separable_task(int n, long d_spec_frames, uint64_t seed, double gap = 2.0) {
    Rng rng(seed);
    PreparedTask task;
    task.task = "toy";
    task.electrode = "e0";
    for (int i = 0; i < n; ++i) {
        int label = (i / 10) % 2;  // alternates per block of 10 so every split sees both classes
        task.labels.push_back(label);
        int r = i % 10;
        task.splits.push_back(r < 8 ? Split::train : (r == 8 ? Split::val : Split::test));
        Eigen::VectorXd raw(200);
        for (long k = 0; k < raw.size(); ++k) raw(k) = rng.normal();
        raw(0) += label ? gap : -gap;
        task.raw.push_back(raw);
        Eigen::MatrixXd spec(8, d_spec_frames);
        for (long a = 0; a < spec.rows(); ++a)
            for (long b = 0; b < spec.cols(); ++b) spec(a, b) = rng.normal() * 0.1;
        spec.row(2).array() += label ? gap : -gap;
        task.specs.push_back(spec);
    }
    return task;
}

}  // namespace

TEST_CASE("auc worked example and boundary cases") {
    CHECK(roc_auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == doctest::Approx(0.75));
    CHECK(roc_auc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
    CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), input_error);
    CHECK_THROWS_AS(roc_auc({0.1}, {2}), parameter_error);
}

TEST_CASE("auc equals exhaustive pair counting, with reversal symmetry") {
    Rng rng(5);
    for (int inst = 0; inst < 300; ++inst) {
        int n = 2 + rng.uniform_int(0, 48);
        std::vector<double> scores(static_cast<size_t>(n));
        std::vector<int> labels(static_cast<size_t>(n));
        bool has0 = false, has1 = false;
        for (int i = 0; i < n; ++i) {
            // coarse grid so ties actually occur
            scores[static_cast<size_t>(i)] = rng.uniform_int(0, 9) / 10.0;
            labels[static_cast<size_t>(i)] = rng.uniform() < 0.5 ? 0 : 1;
            (labels[static_cast<size_t>(i)] ? has1 : has0) = true;
        }
        if (!has0 || !has1) continue;
        double a = roc_auc(scores, labels);
        CHECK(a == doctest::Approx(auc_oracle(scores, labels)).epsilon(1e-12));
        std::vector<double> neg(scores.size());
        for (size_t i = 0; i < scores.size(); ++i) neg[i] = -scores[i];
        CHECK(roc_auc(neg, labels) == doctest::Approx(1.0 - a).epsilon(1e-12));
    }
}

TEST_CASE("top-electrode selection: argmax, ties, monotone invariance") {
    EvalReport rep;
    auto add = [&](const std::string& el, double auc) {
        rep.rows.push_back({"t", el, "lin_time_5s", "baseline", 0, 100, auc});
    };
    add("e3", 0.9);
    add("e1", 0.7);
    add("e2", 0.7);
    add("e4", 0.6);
    auto top1 = select_top_electrodes(rep, "t", 1);
    CHECK(top1 == std::vector<std::string>{"e3"});
    auto top2 = select_top_electrodes(rep, "t", 2);
    CHECK(top2 == std::vector<std::string>{"e3", "e1"});  // lexicographic tie-break

    EvalReport squashed;
    for (const auto& r : rep.rows) {
        EvalRow s = r;
        s.auc = std::tanh(3.0 * r.auc);  // strictly monotone
        squashed.rows.push_back(s);
    }
    CHECK(select_top_electrodes(squashed, "t", 3) == select_top_electrodes(rep, "t", 3));
    CHECK_THROWS_AS(select_top_electrodes(rep, "t", 10), parameter_error);
}

TEST_CASE("baseline architectures have the published shapes") {
    auto lin5 = build_baseline<double>(BaselineKind::lin_time_5s, 1);
    CHECK(lin5.n_params() == 10241);
    auto lin250 = build_baseline<double>(BaselineKind::lin_time_250ms, 1);
    CHECK(lin250.dims == std::vector<long>{512, 1});
    auto stft_lin = build_baseline<double>(BaselineKind::lin_stft, 1);
    CHECK(stft_lin.dims == std::vector<long>{40, 1});
    auto deep = build_baseline<double>(BaselineKind::deep_5ff, 1);
    CHECK(deep.dims == std::vector<long>{10240, 1024, 512, 256, 128, 1});
}

TEST_CASE("extract_features equals the slice-and-average oracle") {
    BrainBertConfig cfg;
    cfg.n_layers = 1;
    cfg.heads = 2;
    cfg.d_h = 16;
    cfg.d_ff = 16;
    cfg.n_bins = 8;
    auto params = BrainBertParams<double>::init(cfg, 2);
    Rng rng(3);
    ad::Mat<double> spec(8, 14);
    for (long r = 0; r < spec.rows(); ++r)
        for (long c = 0; c < spec.cols(); ++c) spec(r, c) = rng.normal();

    auto feat = extract_features<double>(spec, params, 5);
    CHECK(feat.size() == 16);

    auto pv = ParamVars<double>::from(params, false);
    auto emb = encode<double>(spec, pv, cfg);
    Eigen::VectorXd oracle = emb.val().middleRows(14 / 2 - 5, 10).colwise().mean().transpose();
    CHECK((feat - oracle).cwiseAbs().maxCoeff() <= 1e-10);

    // 2l = 2k means the slice covers every frame
    ad::Mat<double> tight = spec.leftCols(10);
    auto all = extract_features<double>(tight, params, 5);
    auto emb2 = encode<double>(tight, pv, cfg);
    Eigen::VectorXd oracle2 = emb2.val().colwise().mean().transpose();
    CHECK((all - oracle2).cwiseAbs().maxCoeff() <= 1e-10);

    CHECK_THROWS_AS(extract_features<double>(spec, params, 8), parameter_error);
}

TEST_CASE("train_mlp separates a separable task and freezes at zero lr") {
    auto task = separable_task(200, 12, 7, 3.0);
    DecodeConfig cfg = DecodeConfig::desk();
    cfg.updates = 1500;
    cfg.val_interval = 250;
    cfg.seed = 1;

    auto trained = train_baseline<double>(task, BaselineKind::lin_time_5s, cfg);
    CHECK(trained.test_auc >= 0.95);

    // shuffled labels give chance-level performance
    auto shuffled = task;
    Rng rng(9);
    for (size_t i = shuffled.labels.size(); i > 1; --i)
        std::swap(shuffled.labels[i - 1],
                  shuffled.labels[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
    auto random_fit = train_baseline<double>(shuffled, BaselineKind::lin_time_5s, cfg);
    CHECK(random_fit.test_auc >= 0.2);
    CHECK(random_fit.test_auc <= 0.8);

    DecodeConfig frozen_cfg = cfg;
    frozen_cfg.head_lr = 0.0;
    auto untouched = train_baseline<double>(task, BaselineKind::lin_time_5s, frozen_cfg);
    auto fresh = build_baseline<double>(BaselineKind::lin_time_5s, Rng::derive(frozen_cfg.seed, 8),
                                        task.raw.at(0).size(), task.specs.at(0).rows());
    for (const auto& [name, t] : fresh.tensors)
        CHECK((untouched.head.tensors.at(name) - t).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spectrogram-band baseline separates the spectral task") {
    auto task = separable_task(200, 12, 8);
    DecodeConfig cfg = DecodeConfig::desk();
    cfg.seed = 2;
    auto trained = train_baseline<double>(task, BaselineKind::lin_stft, cfg);
    CHECK(trained.test_auc >= 0.95);
}

TEST_CASE("frozen decoding never touches the encoder") {
    auto task = separable_task(60, 12, 11);
    BrainBertConfig mc;
    mc.n_layers = 1;
    mc.heads = 2;
    mc.d_h = 16;
    mc.d_ff = 16;
    mc.n_bins = 8;
    auto enc = BrainBertParams<double>::init(mc, 21);
    DecodeConfig cfg = DecodeConfig::desk();
    cfg.updates = 20;
    cfg.val_interval = 10;
    auto trained = train_encoder_decoder<double>(task, enc, DecodeMode::frozen, cfg);
    for (const auto& [name, t] : enc.tensors)
        CHECK((trained.encoder.tensors.at(name) - t).cwiseAbs().maxCoeff() == 0.0);
    CHECK(trained.test_auc >= 0.0);
    CHECK(trained.test_auc <= 1.0);
}

TEST_CASE("fine-tuning runs deterministically") {
    auto task = separable_task(60, 12, 12);
    BrainBertConfig mc;
    mc.n_layers = 1;
    mc.heads = 2;
    mc.d_h = 16;
    mc.d_ff = 16;
    mc.n_bins = 8;
    auto enc = BrainBertParams<double>::init(mc, 22);
    DecodeConfig cfg = DecodeConfig::desk();
    cfg.updates = 10;
    cfg.val_interval = 5;
    cfg.batch_size = 4;
    auto a = train_encoder_decoder<double>(task, enc, DecodeMode::finetune, cfg);
    auto b = train_encoder_decoder<double>(task, enc, DecodeMode::finetune, cfg);
    CHECK(a.test_auc == b.test_auc);
    for (const auto& [name, t] : a.encoder.tensors)
        CHECK((b.encoder.tensors.at(name) - t).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("degenerate single-class splits are rejected") {
    auto task = separable_task(60, 12, 13);
    for (auto& l : task.labels) l = 1;
    DecodeConfig cfg = DecodeConfig::desk();
    CHECK_THROWS_AS(train_baseline<double>(task, BaselineKind::lin_time_5s, cfg), input_error);
}

TEST_CASE("efficiency sweep: full-size point matches a direct run") {
    auto task = separable_task(100, 12, 14);
    auto train_fn = [](const PreparedTask& t, uint64_t seed) {
        DecodeConfig cfg = DecodeConfig::desk();
        cfg.updates = 40;
        cfg.val_interval = 20;
        cfg.seed = seed;
        return train_baseline<double>(t, BaselineKind::lin_stft, cfg).test_auc;
    };
    long full = static_cast<long>(task.split_indices(Split::train).size());
    auto points = efficiency_sweep(task, {10, full}, {1, 2}, train_fn);
    REQUIRE(points.size() == 4);
    CHECK(points[2].auc == doctest::Approx(train_fn(task, 1)));
    CHECK(points[3].auc == doctest::Approx(train_fn(task, 2)));
    for (const auto& p : points) {
        CHECK(p.auc >= 0.0);
        CHECK(p.auc <= 1.0);
    }
    CHECK_THROWS_AS(efficiency_sweep(task, {full + 1}, {1}, train_fn), parameter_error);
}
