#pragma once

#include <cmath>
#include <string>

#include "reactgen/errors.hpp"
#include "reactgen/nn.hpp"

// Temporal bias builders and biased multi-head attention.
//
// Both bias builders produce additive logit matrices that are -inf beyond a
// causal horizon and step down by one for every p query-rate frames of
// distance, so nearer keys get larger weights and frames inside one step
// group share a bias ("recency buckets"). q0 offsets the query indices so a
// window extracted from absolute positions q0..q0+Tq-1 can attend over the
// whole key history with indices that reflect absolute time.

namespace reactgen::attn {

using ad::Mat;
using ad::Var;
using nn::Bind;
using nn::Init;
using nn::ParamStore;

// Same-rate bias: query i may see keys j <= q0+i, weighted -floor((q0+i-j)/p).
template <class S>
Mat<S> build_same_rate_bias(Eigen::Index Tq, Eigen::Index Tk, int p, Eigen::Index q0 = 0) {
    if (Tq < 1 || Tk < 1 || p < 1)
        throw ConfigError("same-rate bias: Tq, Tk, p must all be positive");
    if (q0 < 0) throw ConfigError("same-rate bias: q0 must be non-negative");
    Mat<S> out(Tq, Tk);
    for (Eigen::Index i = 0; i < Tq; ++i) {
        const Eigen::Index qi = q0 + i;
        for (Eigen::Index j = 0; j < Tk; ++j) {
            out(i, j) = (j <= qi) ? static_cast<S>(-((qi - j) / p)) : ad::neg_inf<S>();
        }
    }
    return out;
}

// Cross-rate bias for keys running k times faster than queries: query i may
// see keys j <= k*(q0+i), weighted -floor((k*(q0+i)-j)/(k*p)).
template <class S>
Mat<S> build_cross_rate_bias(Eigen::Index Tq, Eigen::Index Tk, int k, int p,
                             Eigen::Index q0 = 0) {
    if (Tq < 1 || k < 1 || p < 1)
        throw ConfigError("cross-rate bias: Tq, k, p must all be positive");
    if (q0 < 0) throw ConfigError("cross-rate bias: q0 must be non-negative");
    if (Tk != static_cast<Eigen::Index>(k) * (q0 + Tq))
        throw DataError("cross-rate bias: key length must be k*(q0+Tq)");
    Mat<S> out(Tq, Tk);
    const Eigen::Index kp = static_cast<Eigen::Index>(k) * p;
    for (Eigen::Index i = 0; i < Tq; ++i) {
        const Eigen::Index horizon = static_cast<Eigen::Index>(k) * (q0 + i);
        for (Eigen::Index j = 0; j < Tk; ++j) {
            out(i, j) = (j <= horizon) ? static_cast<S>(-((horizon - j) / kp)) : ad::neg_inf<S>();
        }
    }
    return out;
}

// ---- biased multi-head attention ----

template <class S>
void def_mha(ParamStore<S>& ps, const std::string& prefix, Eigen::Index d_q, Eigen::Index d_kv,
             Eigen::Index d) {
    nn::def_linear(ps, prefix + ".q", d_q, d, Init::Xavier);
    nn::def_linear(ps, prefix + ".k", d_kv, d, Init::Xavier);
    nn::def_linear(ps, prefix + ".v", d_kv, d, Init::Xavier);
    // Zero output projection: a fresh residual attachment is the identity.
    nn::def_linear(ps, prefix + ".o", d, d, Init::Zero);
}

// softmax((Q_h K_h^T) / sqrt(d_k) + bias) V_h per head, heads concatenated,
// then the output projection. bias entries of -inf yield exactly zero weight.
template <class S>
Var<S> mha(Bind<S>& b, const std::string& prefix, Var<S> q_in, Var<S> kv_in, const Mat<S>& bias,
           int heads) {
    Var<S> Q = nn::linear(b, prefix + ".q", q_in);
    Var<S> K = nn::linear(b, prefix + ".k", kv_in);
    Var<S> V = nn::linear(b, prefix + ".v", kv_in);
    const Eigen::Index d = Q.cols();
    if (d % heads != 0) throw ConfigError("attention width not divisible by heads");
    const Eigen::Index dk = d / heads;
    const S inv_sqrt_dk = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dk)));
    std::vector<Var<S>> outs;
    outs.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        Var<S> Qh = ad::slice_cols(Q, h * dk, dk);
        Var<S> Kh = ad::slice_cols(K, h * dk, dk);
        Var<S> Vh = ad::slice_cols(V, h * dk, dk);
        Var<S> logits = ad::scale(ad::matmul_nt(Qh, Kh), inv_sqrt_dk);
        Var<S> weights = ad::softmax_bias_rows(logits, bias);
        outs.push_back(ad::matmul(weights, Vh));
    }
    return nn::linear(b, prefix + ".o", ad::concat_cols(outs));
}

// ---- residual blocks (pre-norm) ----

// Self-attention + feed-forward block.
template <class S>
void def_self_block(ParamStore<S>& ps, const std::string& prefix, Eigen::Index d) {
    nn::def_layer_norm(ps, prefix + ".ln1", d);
    def_mha(ps, prefix + ".attn", d, d, d);
    nn::def_layer_norm(ps, prefix + ".ln2", d);
    nn::def_ffn(ps, prefix + ".ffn", d, 2 * d);
}

template <class S>
Var<S> self_block(Bind<S>& b, const std::string& prefix, Var<S> x, const Mat<S>& bias,
                  int heads) {
    Var<S> h = nn::layer_norm(b, prefix + ".ln1", x);
    x = ad::add(x, mha(b, prefix + ".attn", h, h, bias, heads));
    x = ad::add(x, nn::ffn(b, prefix + ".ffn", nn::layer_norm(b, prefix + ".ln2", x)));
    return x;
}

// Residual cross-attention only: q + Attn(LN(q), LN(kv)). With the zero
// output projection this is the identity on q.
template <class S>
void def_cross_attach(ParamStore<S>& ps, const std::string& prefix, Eigen::Index d) {
    nn::def_layer_norm(ps, prefix + ".lnq", d);
    nn::def_layer_norm(ps, prefix + ".lnkv", d);
    def_mha(ps, prefix + ".attn", d, d, d);
}

template <class S>
Var<S> cross_attach(Bind<S>& b, const std::string& prefix, Var<S> q, Var<S> kv,
                    const Mat<S>& bias, int heads) {
    Var<S> qn = nn::layer_norm(b, prefix + ".lnq", q);
    Var<S> kn = nn::layer_norm(b, prefix + ".lnkv", kv);
    return ad::add(q, mha(b, prefix + ".attn", qn, kn, bias, heads));
}

} // namespace reactgen::attn
