#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "ff/autodiff.hpp"
#include "ff/optim.hpp"
#include "ff/rng.hpp"

using namespace ff;
using ad::Mat;
using ad::Var;
using MatD = Mat<double>;

namespace {

MatD random_mat(long r, long c, Rng& rng, double scale = 1.0) {
    MatD m(r, c);
    for (long i = 0; i < r; ++i)
        for (long j = 0; j < c; ++j) m(i, j) = rng.normal() * scale;
    return m;
}

// Central-difference oracle: perturb every entry of every parameter by +/- h
// and compare the analytic gradient against (f(+h) - f(-h)) / 2h.
void grad_check(std::vector<MatD> params,
                const std::function<Var<double>(const std::vector<Var<double>>&)>& build,
                double tol = 1e-4, double h = 1e-5) {
    std::vector<Var<double>> vars;
    for (const auto& p : params) vars.push_back(Var<double>::param(p));
    Var<double> loss = build(vars);
    loss.backward();

    for (size_t k = 0; k < params.size(); ++k) {
        REQUIRE(vars[k].grad().size() == params[k].size());
        for (long r = 0; r < params[k].rows(); ++r)
            for (long c = 0; c < params[k].cols(); ++c) {
                auto eval = [&](double delta) {
                    std::vector<Var<double>> vs;
                    for (size_t i = 0; i < params.size(); ++i) {
                        MatD p = params[i];
                        if (i == k) p(r, c) += delta;
                        vs.push_back(Var<double>::param(p));
                    }
                    return build(vs).val()(0, 0);
                };
                double fd = (eval(h) - eval(-h)) / (2.0 * h);
                double an = vars[k].grad()(r, c);
                double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
                CHECK(std::abs(an - fd) / denom <= tol);
            }
    }
}

}  // namespace

TEST_CASE("backward: sum gives all-ones gradient") {
    Rng rng(1);
    auto w = Var<double>::param(random_mat(3, 4, rng));
    auto loss = ad::sum(w);
    loss.backward();
    CHECK((w.grad() - MatD::Ones(3, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward: (w x)^2 chain rule by hand") {
    auto w = Var<double>::param(MatD::Constant(1, 1, 3.0));
    auto x = Var<double>::input(MatD::Constant(1, 1, 2.0));
    auto loss = ad::square(ad::matmul(w, x));
    loss.backward();
    CHECK(loss.val()(0, 0) == doctest::Approx(36.0));
    CHECK(w.grad()(0, 0) == doctest::Approx(24.0));
}

TEST_CASE("backward: rejects empty variable and non-scalar loss") {
    Var<double> empty;
    CHECK_THROWS_AS(empty.backward(), state_error);
    auto w = Var<double>::param(MatD::Ones(2, 2));
    CHECK_THROWS_AS(w.backward(), parameter_error);
}

TEST_CASE("gradient check: dense chain (matmul, bias, transpose, slices)") {
    Rng rng(11);
    grad_check({random_mat(3, 4, rng), random_mat(1, 4, rng), random_mat(5, 3, rng)},
               [](const std::vector<Var<double>>& v) {
                   auto y = ad::add_rowwise(ad::matmul(v[2], v[0]), v[1]);  // 5 x 4
                   auto t = ad::transpose(ad::slice_cols(y, 1, 2));         // 2 x 5
                   auto s = ad::slice_rows(t, 0, 1);
                   return ad::sum(ad::square(ad::hcat<double>({s, ad::scale(s, 0.5)})));
               });
}

TEST_CASE("gradient check: elementwise nonlinearities") {
    Rng rng(12);
    for (int which = 0; which < 3; ++which) {
        grad_check({random_mat(4, 5, rng)}, [which](const std::vector<Var<double>>& v) {
            auto a = which == 0 ? ad::relu(v[0]) : which == 1 ? ad::gelu(v[0]) : ad::sigmoid(v[0]);
            return ad::sum(ad::square(a));
        });
    }
}

TEST_CASE("gradient check: softmax and mean_rows") {
    Rng rng(13);
    grad_check({random_mat(4, 6, rng)}, [](const std::vector<Var<double>>& v) {
        return ad::sum(ad::square(ad::mean_rows(ad::softmax_rows(v[0]))));
    });
}

TEST_CASE("gradient check: layer norm (input, gain, bias)") {
    Rng rng(14);
    grad_check({random_mat(3, 8, rng, 2.0), random_mat(1, 8, rng), random_mat(1, 8, rng)},
               [](const std::vector<Var<double>>& v) {
                   return ad::sum(ad::square(ad::layer_norm(v[0], v[1], v[2])));
               });
}

TEST_CASE("gradient check: masked L1 and BCE losses") {
    Rng rng(15);
    std::vector<std::pair<int, int>> pos{{0, 0}, {1, 2}, {2, 3}};
    MatD target = random_mat(3, 4, rng);
    grad_check({random_mat(3, 4, rng)}, [&](const std::vector<Var<double>>& v) {
        return ad::masked_l1(v[0], target, pos);
    });
    std::vector<int> labels{1, 0, 1, 1, 0};
    grad_check({random_mat(5, 1, rng)}, [&](const std::vector<Var<double>>& v) {
        return ad::bce_with_logits(v[0], labels);
    });
}

TEST_CASE("layer norm row statistics before gain and bias") {
    Rng rng(16);
    auto x = Var<double>::input(random_mat(6, 32, rng, 3.0));
    auto gain = Var<double>::input(MatD::Ones(1, 32));
    auto bias = Var<double>::input(MatD::Zero(1, 32));
    auto y = ad::layer_norm(x, gain, bias, 1e-12);
    for (long r = 0; r < 6; ++r) {
        double mu = y.val().row(r).mean();
        double var = (y.val().row(r).array() - mu).square().mean();
        CHECK(std::abs(mu) <= 1e-10);
        CHECK(std::abs(var - 1.0) <= 1e-6);
    }
}

TEST_CASE("dropout scales kept activations by 1/q and is identity in eval") {
    auto x = Var<double>::input(MatD::Constant(50, 40, 1.0));
    Rng r1(5);
    auto train = ad::dropout(x, 0.25, r1, true);
    long kept = 0;
    for (long i = 0; i < 50; ++i)
        for (long j = 0; j < 40; ++j) {
            double v = train.val()(i, j);
            CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.75)));
            kept += v != 0.0;
        }
    // eval-mode expectation: mean of the train-mode output approaches 1
    CHECK(std::abs(train.val().mean() - 1.0) <= 0.05);
    CHECK(kept > 0);

    Rng r2(5);
    auto eval = ad::dropout(x, 0.25, r2, false);
    CHECK((eval.val() - x.val()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(ad::dropout(x, 1.0, r2, true), parameter_error);
}

TEST_CASE("lamb: zero gradient leaves parameters unchanged") {
    ParamMap<double> params{{"w", MatD::Constant(2, 2, 1.5)}};
    ParamMap<double> grads{{"w", MatD::Zero(2, 2)}};
    OptState<double> st;
    OptConfig cfg;
    lamb_step(params, grads, st, cfg);
    CHECK((params["w"].array() == 1.5).all());
}

TEST_CASE("lamb: single-scalar first step matches hand arithmetic") {
    ParamMap<double> params{{"w", MatD::Constant(1, 1, 1.0)}};
    ParamMap<double> grads{{"w", MatD::Constant(1, 1, 0.5)}};
    OptState<double> st;
    OptConfig cfg;  // lr 1e-4, betas (0.9, 0.999), eps 1e-6
    lamb_step(params, grads, st, cfg);
    // m_hat = 0.5, v_hat = 0.25, update = 0.5/(0.5 + 1e-6),
    // trust = |p| / |update|, step = lr * trust * update = lr * |p|
    double update = 0.5 / (0.5 + 1e-6);
    double trust = 1.0 / update;
    double expect = 1.0 - 1e-4 * trust * update;
    CHECK(params["w"](0, 0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(st.step == 1);
}

TEST_CASE("lamb: trust-ratio homogeneity, doubling weights doubles the step") {
    Rng rng(21);
    MatD w = random_mat(4, 4, rng);
    MatD g = random_mat(4, 4, rng);
    OptConfig cfg;
    ParamMap<double> p1{{"w", w}}, p2{{"w", 2.0 * w}};
    ParamMap<double> gr{{"w", g}};
    OptState<double> s1, s2;
    lamb_step(p1, gr, s1, cfg);
    lamb_step(p2, gr, s2, cfg);
    double n1 = (p1["w"] - w).norm();
    double n2 = (p2["w"] - 2.0 * w).norm();
    CHECK(std::abs(n2 - 2.0 * n1) <= 1e-9);
}

TEST_CASE("adamw: decoupled decay and first-step magnitude") {
    ParamMap<double> params{{"w", MatD::Constant(1, 1, 2.0)}};
    ParamMap<double> grads{{"w", MatD::Zero(1, 1)}};
    OptState<double> st;
    OptConfig cfg;
    cfg.lr = 1e-3;
    cfg.weight_decay = 0.01;
    adamw_step(params, grads, st, cfg);
    CHECK(params["w"](0, 0) == doctest::Approx(2.0 * (1.0 - 1e-5)).epsilon(1e-12));

    ParamMap<double> p2{{"w", MatD::Zero(1, 1)}};
    ParamMap<double> g2{{"w", MatD::Constant(1, 1, 0.7)}};
    OptState<double> s2;
    OptConfig c2;
    c2.lr = 1e-3;
    adamw_step(p2, g2, s2, c2);
    CHECK(std::abs(p2["w"](0, 0) + c2.lr * 0.7 / (0.7 + c2.eps)) <= 1e-9);

    ParamMap<double> p3{{"w", MatD::Constant(3, 3, 0.4)}};
    ParamMap<double> g3{{"w", MatD::Zero(3, 3)}};
    OptState<double> s3;
    adamw_step(p3, g3, s3, OptConfig{});  // decay 0
    CHECK((p3["w"].array() == 0.4).all());
}

TEST_CASE("xavier uniform: bound, mean, determinism") {
    auto w = xavier_uniform_init<double>(3, 3, 42);
    CHECK(w.cwiseAbs().maxCoeff() <= 1.0);  // bound = sqrt(6/6)

    auto big = xavier_uniform_init<double>(1000, 1000, 7);
    double bound = std::sqrt(6.0 / 2000.0);
    CHECK(big.cwiseAbs().maxCoeff() <= bound);
    // sd of the mean of 1e6 uniforms on [-b, b] is b / sqrt(3e6)
    CHECK(std::abs(big.mean()) <= 3.0 * bound / std::sqrt(3.0e6));

    auto again = xavier_uniform_init<double>(1000, 1000, 7);
    CHECK((big - again).cwiseAbs().maxCoeff() == 0.0);
}
