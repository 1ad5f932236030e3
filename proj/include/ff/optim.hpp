#pragma once

#include <cmath>
#include <map>
#include <string>

#include "ff/autodiff.hpp"
#include "ff/common.hpp"
#include "ff/rng.hpp"

namespace ff {

template <typename T>
using ParamMap = std::map<std::string, ad::Mat<T>>;

template <typename T>
struct OptState {
    ParamMap<T> m, v;  // first and second moments, keyed like the params
    long step = 0;
};

struct OptConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-6;
    double weight_decay = 0.0;
    double trust_clamp_lo = 0.0;  // LAMB only
    double trust_clamp_hi = 10.0;
};

namespace detail {

template <typename T>
void ensure_state(OptState<T>& st, const ParamMap<T>& params) {
    for (const auto& [name, p] : params) {
        if (!st.m.count(name)) st.m[name] = ad::Mat<T>::Zero(p.rows(), p.cols());
        if (!st.v.count(name)) st.v[name] = ad::Mat<T>::Zero(p.rows(), p.cols());
    }
}

}  // namespace detail

// LAMB: Adam-style moment update followed by a per-tensor trust ratio
// ||p|| / ||update||, clamped to [trust_clamp_lo, trust_clamp_hi]. A zero
// numerator or denominator yields ratio 1.
template <typename T>
void lamb_step(ParamMap<T>& params, const ParamMap<T>& grads, OptState<T>& st,
               const OptConfig& cfg) {
    detail::ensure_state(st, params);
    st.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
    for (auto& [name, p] : params) {
        auto git = grads.find(name);
        if (git == grads.end()) continue;
        const auto& g = git->second;
        require(g.rows() == p.rows() && g.cols() == p.cols(), "lamb: gradient shape mismatch");
        auto& m = st.m[name];
        auto& v = st.v[name];
        m = T(cfg.beta1) * m + T(1.0 - cfg.beta1) * g;
        v = T(cfg.beta2) * v + T(1.0 - cfg.beta2) * g.cwiseProduct(g);
        ad::Mat<T> m_hat = m / T(bc1);
        ad::Mat<T> v_hat = v / T(bc2);
        ad::Mat<T> update =
            m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + T(cfg.eps)).matrix());
        if (cfg.weight_decay != 0.0) update += T(cfg.weight_decay) * p;
        const double pn = p.norm(), un = update.norm();
        double ratio = (pn > 0.0 && un > 0.0) ? pn / un : 1.0;
        ratio = std::min(std::max(ratio, cfg.trust_clamp_lo), cfg.trust_clamp_hi);
        p -= T(cfg.lr * ratio) * update;
    }
}

// AdamW: bias-corrected Adam with decoupled weight decay.
template <typename T>
void adamw_step(ParamMap<T>& params, const ParamMap<T>& grads, OptState<T>& st,
                const OptConfig& cfg) {
    detail::ensure_state(st, params);
    st.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
    for (auto& [name, p] : params) {
        auto git = grads.find(name);
        if (git == grads.end()) continue;
        const auto& g = git->second;
        require(g.rows() == p.rows() && g.cols() == p.cols(), "adamw: gradient shape mismatch");
        auto& m = st.m[name];
        auto& v = st.v[name];
        m = T(cfg.beta1) * m + T(1.0 - cfg.beta1) * g;
        v = T(cfg.beta2) * v + T(1.0 - cfg.beta2) * g.cwiseProduct(g);
        ad::Mat<T> m_hat = m / T(bc1);
        ad::Mat<T> v_hat = v / T(bc2);
        p -= T(cfg.lr) * m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + T(cfg.eps)).matrix());
        if (cfg.weight_decay != 0.0) p -= T(cfg.lr * cfg.weight_decay) * p;
    }
}

// Uniform Xavier: entries in +/- sqrt(6 / (fan_in + fan_out)) for a 2-D
// (fan_out-by-fan_in or fan_in-by-fan_out) shape.
template <typename T>
ad::Mat<T> xavier_uniform_init(long rows, long cols, uint64_t rng_seed) {
    require(rows >= 1 && cols >= 1, "xavier: need a 2-D shape");
    Rng rng(rng_seed);
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    ad::Mat<T> out(rows, cols);
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c) out(r, c) = T(rng.uniform(-bound, bound));
    return out;
}

}  // namespace ff
