#pragma once

#include <string>

#include "reactgen/attention.hpp"
#include "reactgen/core.hpp"

// Speaker-listener synchronization: listener-side embeddings attend over the
// speaker's aligned face embeddings (same frame rate) and then over the
// speaker's audio embeddings (k x rate), each as a residual biased
// cross-attention. The same two operations serve two call sites with their
// own parameters: encoding the past interaction history and conditioning the
// current generation window (where q0 offsets queries to absolute time).

namespace reactgen::model {

using ad::Mat;
using ad::Var;
using nn::Bind;
using nn::Init;
using nn::ParamStore;

// Parameter prefixes for the two synchronization sites.
inline const char* kSyncPast = "sync.past";
inline const char* kSyncWindow = "sync.window";

template <class S>
void def_sync(ParamStore<S>& ps, const Config& cfg) {
    const Eigen::Index d = cfg.d;
    nn::def_linear(ps, "sync.embed", cfg.D, d);
    attn::def_cross_attach(ps, std::string(kSyncPast) + ".face_attn", d);
    attn::def_cross_attach(ps, std::string(kSyncPast) + ".audio_attn", d);
    attn::def_cross_attach(ps, std::string(kSyncWindow) + ".face_attn", d);
    attn::def_cross_attach(ps, std::string(kSyncWindow) + ".audio_attn", d);
}

// Per-frame embedding of listener reaction coefficients with positional
// information for absolute positions start..start+L-1.
template <class S>
Var<S> embed_reactions(Bind<S>& b, Var<S> coeffs, Eigen::Index start, const Config& cfg) {
    Var<S> x = nn::linear(b, "sync.embed", coeffs);
    return ad::add(x, b.tape().constant(nn::positional_encoding<S>(start, coeffs.rows(), cfg.d)));
}

// q rows live at absolute times q0..q0+Tq-1; keys are aligned face
// embeddings covering absolute times 0..q0+Tq-1. Row i attends keys <= q0+i.
template <class S>
Var<S> sync_to_faces(Bind<S>& b, const std::string& prefix, Var<S> q, Var<S> f_bar,
                     Eigen::Index q0, const Config& cfg) {
    if (cfg.disable_face_sync) return q;
    if (f_bar.rows() != q0 + q.rows())
        throw DataError("sync_to_faces: key length must equal q0 + query length");
    const Mat<S> bias = attn::build_same_rate_bias<S>(q.rows(), f_bar.rows(), cfg.p, q0);
    return attn::cross_attach(b, prefix + ".face_attn", q, f_bar, bias, cfg.heads);
}

// Same with audio embeddings at k x the query rate: row i attends keys
// <= k*(q0+i).
template <class S>
Var<S> sync_to_audio(Bind<S>& b, const std::string& prefix, Var<S> q, Var<S> audio,
                     Eigen::Index q0, const Config& cfg) {
    if (cfg.disable_audio_sync) return q;
    const Mat<S> bias = attn::build_cross_rate_bias<S>(q.rows(), audio.rows(), cfg.k, cfg.p, q0);
    return attn::cross_attach(b, prefix + ".audio_attn", q, audio, bias, cfg.heads);
}

// Full causal pass over an entire reaction history: embed, attend to faces,
// attend to audio. Because every op is row-causal, the rows of the result
// for any prefix length equal the rows computed incrementally.
template <class S>
Var<S> encode_past_interaction(Bind<S>& b, Var<S> reaction_coeffs, Var<S> f_bar, Var<S> audio,
                               const Config& cfg) {
    Var<S> h = embed_reactions(b, reaction_coeffs, 0, cfg);
    h = sync_to_faces(b, kSyncPast, h, f_bar, 0, cfg);
    h = sync_to_audio(b, kSyncPast, h, audio, 0, cfg);
    return h;
}

} // namespace reactgen::model
