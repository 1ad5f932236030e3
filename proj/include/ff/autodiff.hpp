#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <set>
#include <utility>
#include <vector>

#include "ff/common.hpp"
#include "ff/rng.hpp"

namespace ff::ad {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// Reverse-mode tape node. Values are matrices; scalars are 1x1.
template <typename T>
struct Node {
    Mat<T> val;
    Mat<T> grad;
    bool needs_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;  // scatters this->grad into parents

    void accumulate(const Mat<T>& g) {
        if (grad.size() == 0)
            grad = g;
        else
            grad += g;
    }
};

template <typename T>
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node<T>> n) : n_(std::move(n)) {}

    static Var input(Mat<T> v) {
        auto n = std::make_shared<Node<T>>();
        n->val = std::move(v);
        return Var(n);
    }

    static Var param(Mat<T> v) {
        auto n = std::make_shared<Node<T>>();
        n->val = std::move(v);
        n->needs_grad = true;
        return Var(n);
    }

    bool valid() const { return n_ != nullptr; }
    const Mat<T>& val() const { return n_->val; }
    const Mat<T>& grad() const { return n_->grad; }
    bool needs_grad() const { return n_->needs_grad; }
    std::shared_ptr<Node<T>> node() const { return n_; }

    long rows() const { return n_->val.rows(); }
    long cols() const { return n_->val.cols(); }

    // Reverse pass from a scalar node; populates gradients of every
    // reachable node with needs_grad set.
    void backward() const {
        if (!n_) throw state_error("backward: empty variable");
        require(n_->val.rows() == 1 && n_->val.cols() == 1, "backward: loss must be scalar");
        std::vector<Node<T>*> order;
        std::set<Node<T>*> done;
        std::function<void(Node<T>*)> dfs = [&](Node<T>* nd) {
            if (done.count(nd)) return;
            done.insert(nd);
            for (auto& p : nd->parents)
                if (p->needs_grad) dfs(p.get());
            order.push_back(nd);
        };
        dfs(n_.get());
        n_->grad = Mat<T>::Constant(1, 1, T(1));
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Node<T>* nd = *it;
            if (nd->backprop && nd->grad.size() != 0) nd->backprop(*nd);
        }
    }

private:
    std::shared_ptr<Node<T>> n_;
};

namespace detail {

template <typename T>
std::shared_ptr<Node<T>> make(Mat<T> val, std::vector<std::shared_ptr<Node<T>>> parents,
                              std::function<void(Node<T>&)> back) {
    auto n = std::make_shared<Node<T>>();
    n->val = std::move(val);
    for (auto& p : parents) n->needs_grad = n->needs_grad || p->needs_grad;
    if (n->needs_grad) {
        n->parents = std::move(parents);
        n->backprop = std::move(back);
    }
    return n;
}

}  // namespace detail

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions disagree");
    auto an = a.node(), bn = b.node();
    return Var<T>(detail::make<T>(a.val() * b.val(), {an, bn}, [an, bn](Node<T>& n) {
        if (an->needs_grad) an->accumulate(n.grad * bn->val.transpose());
        if (bn->needs_grad) bn->accumulate(an->val.transpose() * n.grad);
    }));
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
    auto an = a.node(), bn = b.node();
    return Var<T>(detail::make<T>(a.val() + b.val(), {an, bn}, [an, bn](Node<T>& n) {
        if (an->needs_grad) an->accumulate(n.grad);
        if (bn->needs_grad) bn->accumulate(n.grad);
    }));
}

// x (m x d) + row (1 x d), broadcast over rows.
template <typename T>
Var<T> add_rowwise(const Var<T>& x, const Var<T>& row) {
    require(row.rows() == 1 && row.cols() == x.cols(), "add_rowwise: bad bias shape");
    auto xn = x.node(), rn = row.node();
    Mat<T> v = x.val();
    v.rowwise() += row.val().row(0);
    return Var<T>(detail::make<T>(std::move(v), {xn, rn}, [xn, rn](Node<T>& n) {
        if (xn->needs_grad) xn->accumulate(n.grad);
        if (rn->needs_grad) rn->accumulate(n.grad.colwise().sum());
    }));
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
    auto an = a.node();
    return Var<T>(detail::make<T>(Mat<T>(a.val() * s), {an}, [an, s](Node<T>& n) {
        if (an->needs_grad) an->accumulate(n.grad * s);
    }));
}

template <typename T>
Var<T> transpose(const Var<T>& a) {
    auto an = a.node();
    return Var<T>(detail::make<T>(Mat<T>(a.val().transpose()), {an}, [an](Node<T>& n) {
        if (an->needs_grad) an->accumulate(n.grad.transpose());
    }));
}

template <typename T>
Var<T> slice_cols(const Var<T>& a, long start, long count) {
    require(start >= 0 && start + count <= a.cols(), "slice_cols: out of range");
    auto an = a.node();
    return Var<T>(
        detail::make<T>(Mat<T>(a.val().middleCols(start, count)), {an}, [an, start, count](Node<T>& n) {
            if (!an->needs_grad) return;
            Mat<T> g = Mat<T>::Zero(an->val.rows(), an->val.cols());
            g.middleCols(start, count) = n.grad;
            an->accumulate(g);
        }));
}

template <typename T>
Var<T> slice_rows(const Var<T>& a, long start, long count) {
    require(start >= 0 && start + count <= a.rows(), "slice_rows: out of range");
    auto an = a.node();
    return Var<T>(
        detail::make<T>(Mat<T>(a.val().middleRows(start, count)), {an}, [an, start, count](Node<T>& n) {
            if (!an->needs_grad) return;
            Mat<T> g = Mat<T>::Zero(an->val.rows(), an->val.cols());
            g.middleRows(start, count) = n.grad;
            an->accumulate(g);
        }));
}

template <typename T>
Var<T> hcat(const std::vector<Var<T>>& parts) {
    require(!parts.empty(), "hcat: nothing to concatenate");
    long rows = parts[0].rows(), cols = 0;
    for (const auto& p : parts) {
        require(p.rows() == rows, "hcat: row mismatch");
        cols += p.cols();
    }
    Mat<T> v(rows, cols);
    std::vector<std::shared_ptr<Node<T>>> ps;
    std::vector<long> offsets;
    long off = 0;
    for (const auto& p : parts) {
        v.middleCols(off, p.cols()) = p.val();
        offsets.push_back(off);
        off += p.cols();
        ps.push_back(p.node());
    }
    auto parents = ps;
    return Var<T>(detail::make<T>(std::move(v), std::move(parents), [ps, offsets](Node<T>& n) {
        for (size_t i = 0; i < ps.size(); ++i)
            if (ps[i]->needs_grad)
                ps[i]->accumulate(n.grad.middleCols(offsets[i], ps[i]->val.cols()));
    }));
}

template <typename T>
Var<T> relu(const Var<T>& a) {
    auto an = a.node();
    return Var<T>(
        detail::make<T>(Mat<T>(a.val().cwiseMax(T(0))), {an}, [an](Node<T>& n) {
            if (!an->needs_grad) return;
            an->accumulate(
                (an->val.array() > T(0)).template cast<T>().matrix().cwiseProduct(n.grad));
        }));
}

// Exact (erf-based) GeLU.
template <typename T>
Var<T> gelu(const Var<T>& a) {
    auto an = a.node();
    Mat<T> v = a.val().unaryExpr([](T x) {
        return T(0.5) * x * (T(1) + T(std::erf(static_cast<double>(x) / std::sqrt(2.0))));
    });
    return Var<T>(detail::make<T>(std::move(v), {an}, [an](Node<T>& n) {
        if (!an->needs_grad) return;
        Mat<T> d = an->val.unaryExpr([](T x) {
            double xd = static_cast<double>(x);
            double phi = std::exp(-0.5 * xd * xd) / std::sqrt(2.0 * M_PI);
            return T(0.5 * (1.0 + std::erf(xd / std::sqrt(2.0))) + xd * phi);
        });
        an->accumulate(d.cwiseProduct(n.grad));
    }));
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
    auto an = a.node();
    Mat<T> v = a.val().unaryExpr([](T x) { return T(1) / (T(1) + T(std::exp(-static_cast<double>(x)))); });
    auto vn = detail::make<T>(std::move(v), {an}, nullptr);
    auto* raw = vn.get();
    if (vn->needs_grad)
        vn->backprop = [an, raw](Node<T>& n) {
            Mat<T> d = raw->val.cwiseProduct(Mat<T>(Mat<T>::Ones(raw->val.rows(), raw->val.cols()) - raw->val));
            an->accumulate(d.cwiseProduct(n.grad));
        };
    return Var<T>(vn);
}

// Row-wise softmax.
template <typename T>
Var<T> softmax_rows(const Var<T>& a) {
    auto an = a.node();
    Mat<T> v = a.val();
    for (long r = 0; r < v.rows(); ++r) {
        T mx = v.row(r).maxCoeff();
        v.row(r) = (v.row(r).array() - mx).exp();
        v.row(r) /= v.row(r).sum();
    }
    auto vn = detail::make<T>(std::move(v), {an}, nullptr);
    auto* raw = vn.get();
    if (vn->needs_grad)
        vn->backprop = [an, raw](Node<T>& n) {
            Mat<T> g(n.grad.rows(), n.grad.cols());
            for (long r = 0; r < g.rows(); ++r) {
                T dot = raw->val.row(r).dot(n.grad.row(r));
                g.row(r) = raw->val.row(r).cwiseProduct(
                    (n.grad.row(r).array() - dot).matrix());
            }
            an->accumulate(g);
        };
    return Var<T>(vn);
}

// Row-wise layer normalization with learned gain/bias (each 1 x d).
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias, T eps = T(1e-5)) {
    require(gain.rows() == 1 && gain.cols() == x.cols(), "layer_norm: bad gain shape");
    require(bias.rows() == 1 && bias.cols() == x.cols(), "layer_norm: bad bias shape");
    auto xn = x.node(), gn = gain.node(), bn = bias.node();
    const long m = x.rows(), d = x.cols();
    auto norm = std::make_shared<Mat<T>>(m, d);      // (x - mu) / sigma
    auto inv_sigma = std::make_shared<Mat<T>>(m, 1);
    Mat<T> v(m, d);
    for (long r = 0; r < m; ++r) {
        T mu = x.val().row(r).mean();
        T var = (x.val().row(r).array() - mu).square().mean();
        T is = T(1) / T(std::sqrt(static_cast<double>(var + eps)));
        (*inv_sigma)(r, 0) = is;
        norm->row(r) = (x.val().row(r).array() - mu).matrix() * is;
        v.row(r) = norm->row(r).cwiseProduct(gain.val().row(0)) + bias.val().row(0);
    }
    return Var<T>(detail::make<T>(std::move(v), {xn, gn, bn},
                                  [xn, gn, bn, norm, inv_sigma, d](Node<T>& n) {
        if (gn->needs_grad) {
            Mat<T> gg(1, d);
            for (long c = 0; c < d; ++c) gg(0, c) = norm->col(c).dot(n.grad.col(c));
            gn->accumulate(gg);
        }
        if (bn->needs_grad) bn->accumulate(n.grad.colwise().sum());
        if (xn->needs_grad) {
            Mat<T> gx(norm->rows(), d);
            for (long r = 0; r < norm->rows(); ++r) {
                // dy = grad * gain; dx = (dy - mean(dy) - norm * mean(dy*norm)) / sigma
                Eigen::Matrix<T, 1, Eigen::Dynamic> dy =
                    n.grad.row(r).cwiseProduct(gn->val.row(0));
                T mean_dy = dy.mean();
                T mean_dyn = dy.cwiseProduct(norm->row(r)).mean();
                gx.row(r) = ((dy.array() - mean_dy).matrix() -
                             norm->row(r) * mean_dyn) *
                            (*inv_sigma)(r, 0);
            }
            xn->accumulate(gx);
        }
    }));
}

// Inverted dropout: keeps with probability 1-p, scales kept entries by
// 1/(1-p). Identity when p == 0.
template <typename T>
Var<T> dropout(const Var<T>& x, double p, Rng& rng, bool train) {
    require(p >= 0.0 && p < 1.0, "dropout: p must lie in [0, 1)");
    if (!train || p == 0.0) return x;
    auto xn = x.node();
    auto mask = std::make_shared<Mat<T>>(x.rows(), x.cols());
    const T keep_scale = T(1.0 / (1.0 - p));
    for (long r = 0; r < x.rows(); ++r)
        for (long c = 0; c < x.cols(); ++c)
            (*mask)(r, c) = rng.uniform() < p ? T(0) : keep_scale;
    return Var<T>(detail::make<T>(Mat<T>(x.val().cwiseProduct(*mask)), {xn}, [xn, mask](Node<T>& n) {
        if (xn->needs_grad) xn->accumulate(n.grad.cwiseProduct(*mask));
    }));
}

template <typename T>
Var<T> mean_rows(const Var<T>& x) {
    auto xn = x.node();
    Mat<T> v = x.val().colwise().mean();
    const T inv = T(1) / T(x.rows());
    return Var<T>(detail::make<T>(std::move(v), {xn}, [xn, inv](Node<T>& n) {
        if (!xn->needs_grad) return;
        Mat<T> g(xn->val.rows(), xn->val.cols());
        for (long r = 0; r < g.rows(); ++r) g.row(r) = n.grad.row(0) * inv;
        xn->accumulate(g);
    }));
}

template <typename T>
Var<T> sum(const Var<T>& x) {
    auto xn = x.node();
    Mat<T> v = Mat<T>::Constant(1, 1, x.val().sum());
    return Var<T>(detail::make<T>(std::move(v), {xn}, [xn](Node<T>& n) {
        if (xn->needs_grad)
            xn->accumulate(Mat<T>::Constant(xn->val.rows(), xn->val.cols(), n.grad(0, 0)));
    }));
}

template <typename T>
Var<T> square(const Var<T>& x) {
    auto xn = x.node();
    return Var<T>(detail::make<T>(Mat<T>(x.val().cwiseProduct(x.val())), {xn}, [xn](Node<T>& n) {
        if (xn->needs_grad) xn->accumulate(Mat<T>(T(2) * xn->val.cwiseProduct(n.grad)));
    }));
}

// Mean absolute error between pred and a constant target, over the listed
// positions. Returns 0 for an empty set.
template <typename T>
Var<T> masked_l1(const Var<T>& pred, const Mat<T>& target,
                 const std::vector<std::pair<int, int>>& positions) {
    require(pred.rows() == target.rows() && pred.cols() == target.cols(),
            "masked_l1: shape mismatch");
    auto pn = pred.node();
    if (positions.empty())
        return Var<T>(detail::make<T>(Mat<T>::Zero(1, 1), {pn}, [](Node<T>&) {}));
    T acc = T(0);
    for (auto [r, c] : positions) acc += T(std::abs(static_cast<double>(pred.val()(r, c) - target(r, c))));
    acc /= T(positions.size());
    auto tgt = std::make_shared<Mat<T>>(target);
    auto pos = std::make_shared<std::vector<std::pair<int, int>>>(positions);
    return Var<T>(detail::make<T>(Mat<T>::Constant(1, 1, acc), {pn}, [pn, tgt, pos](Node<T>& n) {
        if (!pn->needs_grad) return;
        Mat<T> g = Mat<T>::Zero(pn->val.rows(), pn->val.cols());
        const T w = n.grad(0, 0) / T(pos->size());
        for (auto [r, c] : *pos) {
            T diff = pn->val(r, c) - (*tgt)(r, c);
            g(r, c) += diff > T(0) ? w : (diff < T(0) ? -w : T(0));
        }
        pn->accumulate(g);
    }));
}

// Mean of binary cross-entropy over a column of logits (k x 1), computed in
// the numerically stable log-sum-exp form.
template <typename T>
Var<T> bce_with_logits(const Var<T>& logits, const std::vector<int>& labels) {
    require(logits.cols() == 1 && logits.rows() == static_cast<long>(labels.size()),
            "bce: logits must be k x 1 matching labels");
    auto ln = logits.node();
    const long k = logits.rows();
    double acc = 0.0;
    for (long i = 0; i < k; ++i) {
        double z = static_cast<double>(logits.val()(i, 0));
        double y = labels[static_cast<size_t>(i)];
        // log(1 + e^z) - y z, stable for both signs
        acc += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
    }
    acc /= static_cast<double>(k);
    auto lab = std::make_shared<std::vector<int>>(labels);
    return Var<T>(detail::make<T>(Mat<T>::Constant(1, 1, T(acc)), {ln}, [ln, lab, k](Node<T>& n) {
        if (!ln->needs_grad) return;
        Mat<T> g(k, 1);
        for (long i = 0; i < k; ++i) {
            double z = static_cast<double>(ln->val(i, 0));
            double s = 1.0 / (1.0 + std::exp(-z));
            g(i, 0) = T((s - (*lab)[static_cast<size_t>(i)]) / static_cast<double>(k));
        }
        ln->accumulate(g * n.grad(0, 0));
    }));
}

}  // namespace ff::ad
