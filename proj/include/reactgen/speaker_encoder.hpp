#pragma once

#include <string>

#include "reactgen/attention.hpp"
#include "reactgen/core.hpp"

// Speaker behaviour encoding: audio-feature and facial-coefficient streams
// are embedded causally, the face stream is aligned to the (k x faster)
// audio stream by cross-rate biased attention, and the aligned embeddings
// are projected back to coefficients as an auxiliary reconstruction target.
//
// Every row of every intermediate depends only on input frames at or before
// its own time, so prefix evaluation matches full-sequence evaluation.

namespace reactgen::model {

using ad::Mat;
using ad::Var;
using nn::Bind;
using nn::Init;
using nn::ParamStore;

template <class S>
void def_speaker_encoder(ParamStore<S>& ps, const Config& cfg) {
    const Eigen::Index d = cfg.d;
    nn::def_linear(ps, "speaker_encoder.audio.embed", cfg.d_a, d);
    ps.def("speaker_encoder.audio.conv.W0", d, d, Init::Xavier, true);
    ps.def("speaker_encoder.audio.conv.W1", d, d, Init::Xavier, true);
    ps.def("speaker_encoder.audio.conv.W2", d, d, Init::Xavier, true);
    ps.def("speaker_encoder.audio.conv.b", 1, d, Init::Zero, false);
    for (int l = 0; l < cfg.layers; ++l)
        attn::def_self_block(ps, "speaker_encoder.audio.block" + std::to_string(l), d);
    // Xavier, not zero: the downstream reconstruction head is already
    // zero-initialized, and two zero linears in series would leave the whole
    // encoder without gradient (grad of each is gated by the other's zeros).
    nn::def_linear(ps, "speaker_encoder.audio.out", d, d, Init::Xavier);

    nn::def_linear(ps, "speaker_encoder.face.embed", cfg.D, d);
    for (int l = 0; l < cfg.layers; ++l)
        attn::def_self_block(ps, "speaker_encoder.face.block" + std::to_string(l), d);
    nn::def_linear(ps, "speaker_encoder.face.out", d, d, Init::Xavier);

    attn::def_cross_attach(ps, "speaker_encoder.align", d);
    nn::def_linear(ps, "speaker_encoder.recon", d, cfg.D, Init::Zero);
}

namespace detail {

// Rows shifted down by `by` with zero fill: row i becomes row i-by's content.
template <class S>
Var<S> shift_rows_down(Var<S> x, Eigen::Index by) {
    if (by == 0) return x;
    Var<S> pad = x.tape->zeros(by, x.cols());
    if (x.rows() <= by) return pad;
    return ad::concat_rows<S>({pad, ad::slice_rows(x, 0, x.rows() - by)});
}

} // namespace detail

// Audio features (k*T x d_a) -> causal embeddings (k*T x d): per-frame embed
// + positions, a size-3 causal temporal convolution, recency-biased causal
// self-attention, and a final projection.
template <class S>
Var<S> encode_audio(Bind<S>& b, Var<S> audio, const Config& cfg) {
    if (audio.cols() != cfg.d_a) throw DataError("encode_audio: feature dim != d_a");
    const Eigen::Index L = audio.rows();
    Var<S> x = nn::linear(b, "speaker_encoder.audio.embed", audio);
    x = ad::add(x, b.tape().constant(nn::positional_encoding<S>(0, L, cfg.d)));
    Var<S> conv = ad::matmul(x, b("speaker_encoder.audio.conv.W0"));
    conv = ad::add(conv, ad::matmul(detail::shift_rows_down(x, 1),
                                    b("speaker_encoder.audio.conv.W1")));
    conv = ad::add(conv, ad::matmul(detail::shift_rows_down(x, 2),
                                    b("speaker_encoder.audio.conv.W2")));
    x = ad::add_rowvec(conv, b("speaker_encoder.audio.conv.b"));
    const Mat<S> bias = attn::build_same_rate_bias<S>(L, L, cfg.p);
    for (int l = 0; l < cfg.layers; ++l)
        x = attn::self_block(b, "speaker_encoder.audio.block" + std::to_string(l), x, bias,
                             cfg.heads);
    return nn::linear(b, "speaker_encoder.audio.out", x);
}

// Facial coefficients (T x D) -> causal embeddings (T x d).
template <class S>
Var<S> encode_faces(Bind<S>& b, Var<S> coeffs, const Config& cfg) {
    if (coeffs.cols() != cfg.D) throw DataError("encode_faces: coefficient dim != D");
    const Eigen::Index T = coeffs.rows();
    Var<S> x = nn::linear(b, "speaker_encoder.face.embed", coeffs);
    x = ad::add(x, b.tape().constant(nn::positional_encoding<S>(0, T, cfg.d)));
    const Mat<S> bias = attn::build_same_rate_bias<S>(T, T, cfg.p);
    for (int l = 0; l < cfg.layers; ++l)
        x = attn::self_block(b, "speaker_encoder.face.block" + std::to_string(l), x, bias,
                             cfg.heads);
    return nn::linear(b, "speaker_encoder.face.out", x);
}

// Align face embeddings (T x d) to audio embeddings (k*T x d): residual
// cross-rate attention; with the zero-initialized output projection this is
// the identity on f.
template <class S>
Var<S> align_speaker(Bind<S>& b, Var<S> f, Var<S> a, const Config& cfg) {
    const Mat<S> bias = attn::build_cross_rate_bias<S>(f.rows(), a.rows(), cfg.k, cfg.p);
    return attn::cross_attach(b, "speaker_encoder.align", f, a, bias, cfg.heads);
}

// Aligned embeddings -> D coefficients per frame (auxiliary speaker target).
template <class S>
Var<S> reconstruct_speaker(Bind<S>& b, Var<S> f_bar) {
    return nn::linear(b, "speaker_encoder.recon", f_bar);
}

} // namespace reactgen::model
