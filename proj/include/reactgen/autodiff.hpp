#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "reactgen/errors.hpp"

// Reverse-mode tape over dense row-major matrices.
//
// Matrix products use fixed-order accumulation kernels instead of Eigen's
// blocked GEMM: the partial-sum order for one output element must not depend
// on how many rows the other operands have, otherwise incremental (prefix)
// evaluation and whole-sequence evaluation of the same causal network drift
// in the last bits and the online/offline equality contract breaks.

namespace reactgen::ad {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class S>
S neg_inf() {
    return -std::numeric_limits<S>::infinity();
}

// out += a * b; summation over the inner dimension in ascending order.
template <class S>
void gemm_acc(Mat<S>& out, const Mat<S>& a, const Mat<S>& b) {
    const Eigen::Index m = a.rows(), k = a.cols();
    for (Eigen::Index i = 0; i < m; ++i) {
        auto orow = out.row(i);
        for (Eigen::Index q = 0; q < k; ++q) {
            orow += a(i, q) * b.row(q);
        }
    }
}

template <class S>
Mat<S> gemm(const Mat<S>& a, const Mat<S>& b) {
    Mat<S> out = Mat<S>::Zero(a.rows(), b.cols());
    gemm_acc(out, a, b);
    return out;
}

// a * b^T; each element is one contiguous-row dot product.
template <class S>
Mat<S> gemm_nt(const Mat<S>& a, const Mat<S>& b) {
    Mat<S> out(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            out(i, j) = a.row(i).dot(b.row(j));
        }
    }
    return out;
}

// out += a^T * b, rank-1 row updates in ascending row order.
template <class S>
void gemm_tn_acc(Mat<S>& out, const Mat<S>& a, const Mat<S>& b) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index q = 0; q < a.cols(); ++q) {
            out.row(q) += a(i, q) * b.row(i);
        }
    }
}

template <class S>
class Tape;

// Lightweight handle into a tape; cheap to copy, invalid when default-made.
template <class S>
struct Var {
    Tape<S>* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr; }
    const Mat<S>& val() const { return tape->node(id).val; }
    Eigen::Index rows() const { return val().rows(); }
    Eigen::Index cols() const { return val().cols(); }
    S scalar() const { return val()(0, 0); }
};

template <class S>
class Tape {
public:
    struct Node {
        Mat<S> val;
        Mat<S> grad; // empty until the backward sweep touches it
        std::function<void()> back;
        bool needs_grad = false;
    };

    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {
        nodes_.reserve(1024);
    }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool grad_enabled() const { return grad_enabled_; }

    void clear() { nodes_.clear(); }
    std::size_t size() const { return nodes_.size(); }

    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

    Var<S> put(Mat<S> v, bool needs_grad = false) {
        Node n;
        n.val = std::move(v);
        n.needs_grad = needs_grad && grad_enabled_;
        nodes_.push_back(std::move(n));
        return Var<S>{this, static_cast<int>(nodes_.size() - 1)};
    }

    Var<S> constant(Mat<S> v) { return put(std::move(v), false); }

    Var<S> scalar(S v) {
        Mat<S> m(1, 1);
        m(0, 0) = v;
        return constant(std::move(m));
    }

    Var<S> zeros(Eigen::Index r, Eigen::Index c) { return constant(Mat<S>::Zero(r, c)); }

    void accum_grad(int id, const Mat<S>& g) {
        Node& n = node(id);
        if (!n.needs_grad) return;
        if (n.grad.size() == 0) n.grad = Mat<S>::Zero(n.val.rows(), n.val.cols());
        n.grad += g;
    }

    const Mat<S>& grad(const Var<S>& v) const {
        const Node& n = node(v.id);
        if (n.grad.size() == 0) {
            static const Mat<S> empty = Mat<S>();
            return empty;
        }
        return n.grad;
    }

    Mat<S> grad_or_zero(const Var<S>& v) const {
        const Node& n = node(v.id);
        if (n.grad.size() == 0) return Mat<S>::Zero(n.val.rows(), n.val.cols());
        return n.grad;
    }

    // Reverse sweep from a 1x1 root.
    void backward(const Var<S>& root) {
        if (!grad_enabled_) throw std::logic_error("backward() on a no-grad tape");
        if (root.rows() != 1 || root.cols() != 1)
            throw std::logic_error("backward() root must be scalar");
        Node& r = node(root.id);
        if (r.grad.size() == 0) r.grad = Mat<S>::Zero(1, 1);
        r.grad(0, 0) += S(1);
        for (int i = root.id; i >= 0; --i) {
            Node& n = nodes_[static_cast<std::size_t>(i)];
            if (n.grad.size() != 0 && n.back) n.back();
        }
    }

    Var<S> derived(Mat<S> v, bool parents_need_grad, std::function<void()> back) {
        Node n;
        n.val = std::move(v);
        n.needs_grad = parents_need_grad && grad_enabled_;
        if (n.needs_grad) n.back = std::move(back);
        nodes_.push_back(std::move(n));
        return Var<S>{this, static_cast<int>(nodes_.size() - 1)};
    }

private:
    std::vector<Node> nodes_;
    bool grad_enabled_;
};

namespace detail {
template <class S>
bool ng(const Var<S>& v) {
    return v.tape->node(v.id).needs_grad;
}
template <class S>
int next_id(const Tape<S>& t) {
    return static_cast<int>(t.size());
}
} // namespace detail

// ---- arithmetic ----

template <class S>
Var<S> add(Var<S> a, Var<S> b) {
    Tape<S>* t = a.tape;
    const int ai = a.id, bi = b.id, self = detail::next_id(*t);
    return t->derived(a.val() + b.val(), detail::ng(a) || detail::ng(b), [t, ai, bi, self]() {
        const Mat<S>& g = t->node(self).grad;
        t->accum_grad(ai, g);
        t->accum_grad(bi, g);
    });
}

template <class S>
Var<S> sub(Var<S> a, Var<S> b) {
    Tape<S>* t = a.tape;
    const int ai = a.id, bi = b.id, self = detail::next_id(*t);
    return t->derived(a.val() - b.val(), detail::ng(a) || detail::ng(b), [t, ai, bi, self]() {
        const Mat<S>& g = t->node(self).grad;
        t->accum_grad(ai, g);
        t->accum_grad(bi, -g);
    });
}

// Hadamard product, same shapes.
template <class S>
Var<S> mul(Var<S> a, Var<S> b) {
    Tape<S>* t = a.tape;
    const int ai = a.id, bi = b.id, self = detail::next_id(*t);
    return t->derived(a.val().cwiseProduct(b.val()), detail::ng(a) || detail::ng(b),
                      [t, ai, bi, self]() {
                          const Mat<S>& g = t->node(self).grad;
                          t->accum_grad(ai, g.cwiseProduct(t->node(bi).val));
                          t->accum_grad(bi, g.cwiseProduct(t->node(ai).val));
                      });
}

template <class S>
Var<S> scale(Var<S> a, S c) {
    Tape<S>* t = a.tape;
    const int ai = a.id, self = detail::next_id(*t);
    return t->derived(Mat<S>(a.val() * c), detail::ng(a), [t, ai, self, c]() {
        t->accum_grad(ai, Mat<S>(t->node(self).grad * c));
    });
}

template <class S>
Var<S> add_scalar(Var<S> a, S c) {
    Tape<S>* t = a.tape;
    const int ai = a.id, self = detail::next_id(*t);
    return t->derived(Mat<S>(a.val().array() + c), detail::ng(a), [t, ai, self]() {
        t->accum_grad(ai, t->node(self).grad);
    });
}

// ---- matrix products ----

template <class S>
Var<S> matmul(Var<S> a, Var<S> b) {
    Tape<S>* t = a.tape;
    if (a.cols() != b.rows()) throw std::logic_error("matmul: inner dims differ");
    const int ai = a.id, bi = b.id, self = detail::next_id(*t);
    return t->derived(gemm(a.val(), b.val()), detail::ng(a) || detail::ng(b),
                      [t, ai, bi, self]() {
                          const Mat<S>& g = t->node(self).grad;
                          const Mat<S>& av = t->node(ai).val;
                          const Mat<S>& bv = t->node(bi).val;
                          if (t->node(ai).needs_grad) t->accum_grad(ai, gemm_nt(g, bv));
                          if (t->node(bi).needs_grad) {
                              Mat<S> gb = Mat<S>::Zero(bv.rows(), bv.cols());
                              gemm_tn_acc(gb, av, g);
                              t->accum_grad(bi, gb);
                          }
                      });
}

// a * b^T
template <class S>
Var<S> matmul_nt(Var<S> a, Var<S> b) {
    Tape<S>* t = a.tape;
    if (a.cols() != b.cols()) throw std::logic_error("matmul_nt: inner dims differ");
    const int ai = a.id, bi = b.id, self = detail::next_id(*t);
    return t->derived(gemm_nt(a.val(), b.val()), detail::ng(a) || detail::ng(b),
                      [t, ai, bi, self]() {
                          const Mat<S>& g = t->node(self).grad;
                          const Mat<S>& av = t->node(ai).val;
                          const Mat<S>& bv = t->node(bi).val;
                          if (t->node(ai).needs_grad) t->accum_grad(ai, gemm(g, bv));
                          if (t->node(bi).needs_grad) {
                              Mat<S> gb = Mat<S>::Zero(bv.rows(), bv.cols());
                              gemm_tn_acc(gb, g, av);
                              t->accum_grad(bi, gb);
                          }
                      });
}

// Broadcast-add a 1xC row vector to every row.
template <class S>
Var<S> add_rowvec(Var<S> a, Var<S> v) {
    Tape<S>* t = a.tape;
    if (v.rows() != 1 || v.cols() != a.cols()) throw std::logic_error("add_rowvec: bad shape");
    Mat<S> out = a.val();
    out.rowwise() += v.val().row(0);
    const int ai = a.id, vi = v.id, self = detail::next_id(*t);
    return t->derived(std::move(out), detail::ng(a) || detail::ng(v), [t, ai, vi, self]() {
        const Mat<S>& g = t->node(self).grad;
        t->accum_grad(ai, g);
        if (t->node(vi).needs_grad) {
            Mat<S> gv(1, g.cols());
            gv.row(0) = g.colwise().sum();
            t->accum_grad(vi, gv);
        }
    });
}

// ---- elementwise nonlinearities ----

template <class S>
Var<S> vexp(Var<S> a) {
    Tape<S>* t = a.tape;
    Mat<S> out = a.val().array().exp().matrix();
    const int ai = a.id, self = detail::next_id(*t);
    return t->derived(std::move(out), detail::ng(a), [t, ai, self]() {
        const Mat<S>& g = t->node(self).grad;
        t->accum_grad(ai, g.cwiseProduct(t->node(self).val));
    });
}

template <class S>
Var<S> vlog(Var<S> a) {
    Tape<S>* t = a.tape;
    Mat<S> out = a.val().array().log().matrix();
    const int ai = a.id, self = detail::next_id(*t);
    return t->derived(std::move(out), detail::ng(a), [t, ai, self]() {
        const Mat<S>& g = t->node(self).grad;
        t->accum_grad(ai, g.cwiseQuotient(t->node(ai).val));
    });
}

template <class S>
Var<S> vabs(Var<S> a) {
    Tape<S>* t = a.tape;
    Mat<S> out = a.val().array().abs().matrix();
    const int ai = a.id, self = detail::next_id(*t);
    return t->derived(std::move(out), detail::ng(a), [t, ai, self]() {
        const Mat<S>& g = t->node(self).grad;
        Mat<S> sign = t->node(ai).val.array().sign().matrix();
        t->accum_grad(ai, g.cwiseProduct(sign));
    });
}

template <class S>
Var<S> vsquare(Var<S> a) {
    Tape<S>* t = a.tape;
    Mat<S> out = a.val().array().square().matrix();
    const int ai = a.id, self = detail::next_id(*t);
    return t->derived(std::move(out), detail::ng(a), [t, ai, self]() {
        const Mat<S>& g = t->node(self).grad;
        t->accum_grad(ai, Mat<S>(S(2) * g.cwiseProduct(t->node(ai).val)));
    });
}

// Derivative is 1 strictly inside (lo, hi), 0 outside.
template <class S>
Var<S> clamp(Var<S> a, S lo, S hi) {
    Tape<S>* t = a.tape;
    Mat<S> out = a.val().array().min(hi).max(lo).matrix();
    const int ai = a.id, self = detail::next_id(*t);
    return t->derived(std::move(out), detail::ng(a), [t, ai, self, lo, hi]() {
        const Mat<S>& g = t->node(self).grad;
        const Mat<S>& x = t->node(ai).val;
        Mat<S> gi = ((x.array() > lo && x.array() < hi).template cast<S>() * g.array()).matrix();
        t->accum_grad(ai, gi);
    });
}

// Exact GELU: x * Phi(x). Smooth activation keeps finite-difference gradient
// checks clean.
template <class S>
Var<S> gelu(Var<S> a) {
    Tape<S>* t = a.tape;
    const S inv_sqrt2 = S(1) / std::sqrt(S(2));
    Mat<S> out = a.val().unaryExpr(
        [inv_sqrt2](S x) { return x * S(0.5) * (S(1) + std::erf(x * inv_sqrt2)); });
    const int ai = a.id, self = detail::next_id(*t);
    return t->derived(std::move(out), detail::ng(a), [t, ai, self, inv_sqrt2]() {
        const Mat<S>& g = t->node(self).grad;
        const S inv_sqrt2pi = S(1) / std::sqrt(S(2) * std::numbers::pi_v<S>);
        Mat<S> d = t->node(ai).val.unaryExpr([inv_sqrt2, inv_sqrt2pi](S x) {
            const S cdf = S(0.5) * (S(1) + std::erf(x * inv_sqrt2));
            const S pdf = std::exp(-x * x * S(0.5)) * inv_sqrt2pi;
            return cdf + x * pdf;
        });
        t->accum_grad(ai, Mat<S>(g.cwiseProduct(d)));
    });
}

// ---- softmax with additive bias mask ----

// Row-wise softmax of (logits + bias). Bias entries of -inf receive exactly
// zero weight; the bias itself is a constant (never differentiated). A row
// whose bias is all -inf is a caller bug and throws.
template <class S>
Var<S> softmax_bias_rows(Var<S> logits, const Mat<S>& bias) {
    Tape<S>* t = logits.tape;
    const Eigen::Index R = logits.rows(), C = logits.cols();
    if (bias.rows() != R || bias.cols() != C)
        throw std::logic_error("softmax_bias_rows: bias shape mismatch");
    Mat<S> out = Mat<S>::Zero(R, C);
    const Mat<S>& lv = logits.val();
    for (Eigen::Index i = 0; i < R; ++i) {
        S mx = neg_inf<S>();
        for (Eigen::Index j = 0; j < C; ++j) {
            if (bias(i, j) == neg_inf<S>()) continue;
            mx = std::max(mx, lv(i, j) + bias(i, j));
        }
        if (mx == neg_inf<S>())
            throw std::logic_error(
                "softmax_bias_rows: degenerate mask, a query row has no finite bias entry");
        S denom = S(0);
        for (Eigen::Index j = 0; j < C; ++j) {
            if (bias(i, j) == neg_inf<S>()) continue;
            S e = std::exp(lv(i, j) + bias(i, j) - mx);
            out(i, j) = e;
            denom += e;
        }
        for (Eigen::Index j = 0; j < C; ++j) out(i, j) /= denom;
    }
    const int ai = logits.id, self = detail::next_id(*t);
    return t->derived(std::move(out), detail::ng(logits), [t, ai, self]() {
        const Mat<S>& g = t->node(self).grad;
        const Mat<S>& y = t->node(self).val;
        Mat<S> gi(y.rows(), y.cols());
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            S dot = y.row(i).dot(g.row(i));
            gi.row(i) = y.row(i).cwiseProduct(g.row(i).array().matrix());
            gi.row(i) -= dot * y.row(i);
        }
        t->accum_grad(ai, gi);
    });
}

// ---- layer norm ----

template <class S>
Var<S> layer_norm_rows(Var<S> x, Var<S> gamma, Var<S> beta, S eps = S(1e-5)) {
    Tape<S>* t = x.tape;
    const Eigen::Index R = x.rows(), C = x.cols();
    if (gamma.rows() != 1 || gamma.cols() != C || beta.rows() != 1 || beta.cols() != C)
        throw std::logic_error("layer_norm_rows: gamma/beta shape mismatch");
    Mat<S> xhat(R, C);
    Mat<S> inv_sd(R, 1);
    const Mat<S>& xv = x.val();
    for (Eigen::Index i = 0; i < R; ++i) {
        S mean = xv.row(i).mean();
        S var = (xv.row(i).array() - mean).square().sum() / S(C);
        S inv = S(1) / std::sqrt(var + eps);
        inv_sd(i, 0) = inv;
        xhat.row(i) = ((xv.row(i).array() - mean) * inv).matrix();
    }
    Mat<S> out(R, C);
    for (Eigen::Index i = 0; i < R; ++i)
        out.row(i) = xhat.row(i).cwiseProduct(gamma.val().row(0)) + beta.val().row(0);
    const int xi = x.id, gi_ = gamma.id, bi = beta.id, self = detail::next_id(*t);
    bool needs = detail::ng(x) || detail::ng(gamma) || detail::ng(beta);
    return t->derived(std::move(out), needs,
                      [t, xi, gi_, bi, self, xhat = std::move(xhat), inv_sd = std::move(inv_sd)]() {
                          const Mat<S>& g = t->node(self).grad;
                          const Mat<S>& gam = t->node(gi_).val;
                          const Eigen::Index R2 = g.rows(), C2 = g.cols();
                          if (t->node(gi_).needs_grad) {
                              Mat<S> gg(1, C2);
                              gg.row(0) = g.cwiseProduct(xhat).colwise().sum();
                              t->accum_grad(gi_, gg);
                          }
                          if (t->node(bi).needs_grad) {
                              Mat<S> gb(1, C2);
                              gb.row(0) = g.colwise().sum();
                              t->accum_grad(bi, gb);
                          }
                          if (t->node(xi).needs_grad) {
                              Mat<S> gx(R2, C2);
                              for (Eigen::Index i = 0; i < R2; ++i) {
                                  Eigen::Matrix<S, 1, Eigen::Dynamic> dy =
                                      g.row(i).cwiseProduct(gam.row(0));
                                  S s1 = dy.sum();
                                  S s2 = dy.dot(xhat.row(i));
                                  gx.row(i) = (inv_sd(i, 0) / S(C2)) *
                                              (S(C2) * dy.array() - s1 - xhat.row(i).array() * s2)
                                                  .matrix();
                              }
                              t->accum_grad(xi, gx);
                          }
                      });
}

// ---- slicing / concatenation ----

template <class S>
Var<S> slice_rows(Var<S> a, Eigen::Index r0, Eigen::Index n) {
    Tape<S>* t = a.tape;
    if (r0 < 0 || n < 0 || r0 + n > a.rows()) throw std::logic_error("slice_rows: out of range");
    Mat<S> out = a.val().middleRows(r0, n);
    const int ai = a.id, self = detail::next_id(*t);
    return t->derived(std::move(out), detail::ng(a), [t, ai, self, r0, n]() {
        const Mat<S>& g = t->node(self).grad;
        const Mat<S>& av = t->node(ai).val;
        Mat<S> ga = Mat<S>::Zero(av.rows(), av.cols());
        ga.middleRows(r0, n) = g;
        t->accum_grad(ai, ga);
    });
}

template <class S>
Var<S> slice_cols(Var<S> a, Eigen::Index c0, Eigen::Index n) {
    Tape<S>* t = a.tape;
    if (c0 < 0 || n < 0 || c0 + n > a.cols()) throw std::logic_error("slice_cols: out of range");
    Mat<S> out = a.val().middleCols(c0, n);
    const int ai = a.id, self = detail::next_id(*t);
    return t->derived(std::move(out), detail::ng(a), [t, ai, self, c0, n]() {
        const Mat<S>& g = t->node(self).grad;
        const Mat<S>& av = t->node(ai).val;
        Mat<S> ga = Mat<S>::Zero(av.rows(), av.cols());
        ga.middleCols(c0, n) = g;
        t->accum_grad(ai, ga);
    });
}

template <class S>
Var<S> concat_rows(const std::vector<Var<S>>& parts) {
    if (parts.empty()) throw std::logic_error("concat_rows: empty");
    Tape<S>* t = parts[0].tape;
    Eigen::Index rows = 0;
    const Eigen::Index cols = parts[0].cols();
    bool needs = false;
    for (const auto& p : parts) {
        if (p.cols() != cols) throw std::logic_error("concat_rows: column mismatch");
        rows += p.rows();
        needs = needs || detail::ng(p);
    }
    Mat<S> out(rows, cols);
    Eigen::Index at = 0;
    std::vector<int> ids;
    std::vector<Eigen::Index> offs, lens;
    for (const auto& p : parts) {
        out.middleRows(at, p.rows()) = p.val();
        ids.push_back(p.id);
        offs.push_back(at);
        lens.push_back(p.rows());
        at += p.rows();
    }
    const int self = detail::next_id(*t);
    return t->derived(std::move(out), needs,
                      [t, self, ids = std::move(ids), offs = std::move(offs),
                       lens = std::move(lens)]() {
                          const Mat<S>& g = t->node(self).grad;
                          for (std::size_t i = 0; i < ids.size(); ++i) {
                              if (lens[i] == 0) continue;
                              t->accum_grad(ids[i], Mat<S>(g.middleRows(offs[i], lens[i])));
                          }
                      });
}

template <class S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
    if (parts.empty()) throw std::logic_error("concat_cols: empty");
    Tape<S>* t = parts[0].tape;
    Eigen::Index cols = 0;
    const Eigen::Index rows = parts[0].rows();
    bool needs = false;
    for (const auto& p : parts) {
        if (p.rows() != rows) throw std::logic_error("concat_cols: row mismatch");
        cols += p.cols();
        needs = needs || detail::ng(p);
    }
    Mat<S> out(rows, cols);
    Eigen::Index at = 0;
    std::vector<int> ids;
    std::vector<Eigen::Index> offs, lens;
    for (const auto& p : parts) {
        out.middleCols(at, p.cols()) = p.val();
        ids.push_back(p.id);
        offs.push_back(at);
        lens.push_back(p.cols());
        at += p.cols();
    }
    const int self = detail::next_id(*t);
    return t->derived(std::move(out), needs,
                      [t, self, ids = std::move(ids), offs = std::move(offs),
                       lens = std::move(lens)]() {
                          const Mat<S>& g = t->node(self).grad;
                          for (std::size_t i = 0; i < ids.size(); ++i) {
                              if (lens[i] == 0) continue;
                              t->accum_grad(ids[i], Mat<S>(g.middleCols(offs[i], lens[i])));
                          }
                      });
}

// ---- reductions ----

template <class S>
Var<S> sum_all(Var<S> a) {
    Tape<S>* t = a.tape;
    Mat<S> out(1, 1);
    out(0, 0) = a.val().sum();
    const int ai = a.id, self = detail::next_id(*t);
    return t->derived(std::move(out), detail::ng(a), [t, ai, self]() {
        const S g = t->node(self).grad(0, 0);
        const Mat<S>& av = t->node(ai).val;
        t->accum_grad(ai, Mat<S>(Mat<S>::Constant(av.rows(), av.cols(), g)));
    });
}

template <class S>
Var<S> mean_all(Var<S> a) {
    return scale(sum_all(a), S(1) / S(a.rows() * a.cols()));
}

// Mean Huber loss with threshold beta over all elements of (a - b).
template <class S>
Var<S> smooth_l1_mean(Var<S> a, Var<S> b, S beta = S(1)) {
    Tape<S>* t = a.tape;
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::logic_error("smooth_l1_mean: shape mismatch");
    const Mat<S> e = a.val() - b.val();
    const S n = S(e.rows() * e.cols());
    S acc = S(0);
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
        for (Eigen::Index j = 0; j < e.cols(); ++j) {
            const S x = std::abs(e(i, j));
            acc += (x < beta) ? S(0.5) * x * x / beta : x - S(0.5) * beta;
        }
    }
    Mat<S> out(1, 1);
    out(0, 0) = acc / n;
    const int ai = a.id, bi = b.id, self = detail::next_id(*t);
    return t->derived(std::move(out), detail::ng(a) || detail::ng(b),
                      [t, ai, bi, self, e = std::move(e), n, beta]() {
                          const S g = t->node(self).grad(0, 0);
                          Mat<S> d(e.rows(), e.cols());
                          for (Eigen::Index i = 0; i < e.rows(); ++i) {
                              for (Eigen::Index j = 0; j < e.cols(); ++j) {
                                  const S x = e(i, j);
                                  d(i, j) = (std::abs(x) < beta) ? x / beta : (x > S(0) ? S(1) : S(-1));
                              }
                          }
                          d *= g / n;
                          t->accum_grad(ai, d);
                          t->accum_grad(bi, -d);
                      });
}

} // namespace reactgen::ad
