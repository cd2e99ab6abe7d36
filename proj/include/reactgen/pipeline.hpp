#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "reactgen/checkpoint.hpp"
#include "reactgen/core.hpp"
#include "reactgen/losses.hpp"
#include "reactgen/metrics.hpp"
#include "reactgen/reaction_generator.hpp"
#include "reactgen/rng.hpp"
#include "reactgen/speaker_encoder.hpp"
#include "reactgen/sync.hpp"

// End-to-end model assembly: speaker encoding, window-by-window reaction
// generation, the two training stages, streaming and offline inference, and
// metric evaluation. Every op along the generation path is row-causal, so
// offline full-sequence passes, incremental generation, and streaming
// prefix re-encoding produce bitwise-identical frames.

namespace reactgen::pipe {

using ad::Mat;
using ad::Tape;
using ad::Var;
using nn::Bind;
using nn::ParamStore;

template <class S>
void def_model(ParamStore<S>& ps, const Config& cfg) {
    model::def_speaker_encoder(ps, cfg);
    model::def_sync(ps, cfg);
    model::def_reaction_generator(ps, cfg);
}

template <class S>
Mat<S> castf(const MatF& m) {
    return m.template cast<S>();
}

// Number of generation windows; sequences must tile exactly.
inline Eigen::Index window_count(Eigen::Index frames, int w) {
    if (frames <= 0 || frames % w != 0)
        throw DataError("sequence length must be a positive multiple of the window size");
    return frames / w;
}

// Per-window noise draw. Training streams fold in (stage, epoch) so every
// step resamples; generation streams fold only (sample, window) so a given
// seed always produces the same reaction.
template <class S>
Mat<S> train_eps(const Config& cfg, const std::string& session_id, int stage, long epoch, int m,
                 Eigen::Index n) {
    Rng r = make_stream(cfg.seed, "latent-" + session_id,
                        {static_cast<std::uint64_t>(stage), static_cast<std::uint64_t>(epoch),
                         static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(n)});
    Mat<S> e(1, cfg.latent_dim());
    for (Eigen::Index j = 0; j < e.cols(); ++j) e(0, j) = static_cast<S>(r.normal());
    return e;
}

template <class S>
Mat<S> gen_eps(const Config& cfg, std::uint64_t seed, const std::string& session_id, int sample,
               Eigen::Index n) {
    Rng r = make_stream(seed, "latent-" + session_id,
                        {static_cast<std::uint64_t>(sample), static_cast<std::uint64_t>(n)});
    Mat<S> e(1, cfg.latent_dim());
    for (Eigen::Index j = 0; j < e.cols(); ++j) e(0, j) = static_cast<S>(r.normal());
    return e;
}

// Speaker-side encodings shared by every window of a session.
template <class S>
struct SpeakerEnc {
    Var<S> audio;        // (k*T) x d
    Var<S> faces;        // T x d, audio-aligned
    Var<S> recon;        // T x D, speaker coefficient reconstruction
};

template <class S>
SpeakerEnc<S> encode_speaker(Bind<S>& b, const Config& cfg, const Mat<S>& audio,
                             const Mat<S>& coeffs) {
    SpeakerEnc<S> e;
    e.audio = model::encode_audio(b, b.tape().constant(audio), cfg);
    Var<S> f = model::encode_faces(b, b.tape().constant(coeffs), cfg);
    e.faces = model::align_speaker(b, f, e.audio, cfg);
    e.recon = model::reconstruct_speaker(b, e.faces);
    return e;
}

// One generation window at absolute frames [start, start+w): distribution
// from history, latent draw, momentum + interpolation, embedding, speaker
// synchronization, decode.
template <class S>
struct WindowOut {
    Var<S> coeffs; // w x D
    Var<S> z;      // 1 x d_z, carried into the next window
    model::GaussianLatent<S> dist;
};

template <class S>
WindowOut<S> generate_window(Bind<S>& b, const Config& cfg, Var<S> history, Var<S> faces_prefix,
                             Var<S> audio_prefix, Var<S> z_prev, const Mat<S>& eps,
                             Eigen::Index start) {
    WindowOut<S> wo;
    wo.dist = model::history_distribution(b, history, cfg);
    Var<S> z_star = model::sample_latent(wo.dist, eps, cfg);
    wo.z = model::momentum_blend(z_prev, z_star, cfg.alpha);
    Var<S> Z = model::interpolate_latents(z_prev, wo.z, cfg.w);
    const Mat<S> pe = nn::positional_encoding<S>(start, cfg.w, cfg.d);
    Var<S> r = model::latents_to_embeddings(b, Z, pe, cfg);
    r = model::sync_to_faces(b, model::kSyncWindow, r, faces_prefix, start, cfg);
    r = model::sync_to_audio(b, model::kSyncWindow, r, audio_prefix, start, cfg);
    wo.coeffs = model::decode_reaction(b, r, cfg);
    return wo;
}

// Self-generated window loop: each produced window is folded back into the
// interaction history for the next one. Used by stage-2 training and
// inference; stage 1 instead slices a teacher-forced full-sequence history.
template <class S>
class GenerationEngine {
public:
    GenerationEngine(Bind<S>& b, const Config& cfg)
        : b_(&b), cfg_(&cfg), z_prev_(b.tape().zeros(1, cfg.latent_dim())),
          history_(b.tape().zeros(0, cfg.d)) {}

    // faces_prefix/audio_prefix must cover absolute frames [0, start+w).
    Var<S> step(Var<S> faces_prefix, Var<S> audio_prefix, const Mat<S>& eps) {
        const Eigen::Index start = n_ * cfg_->w;
        WindowOut<S> wo =
            generate_window(*b_, *cfg_, history_, faces_prefix, audio_prefix, z_prev_, eps, start);
        Var<S> h = model::embed_reactions(*b_, wo.coeffs, start, *cfg_);
        h = model::sync_to_faces(*b_, model::kSyncPast, h, faces_prefix, start, *cfg_);
        h = model::sync_to_audio(*b_, model::kSyncPast, h, audio_prefix, start, *cfg_);
        history_ = ad::concat_rows<S>({history_, h});
        z_prev_ = wo.z;
        windows_.push_back(wo.coeffs);
        dists_.push_back(wo.dist);
        ++n_;
        return wo.coeffs;
    }

    Var<S> sequence() const { return ad::concat_rows(windows_); }
    const std::vector<model::GaussianLatent<S>>& dists() const { return dists_; }
    Eigen::Index windows_done() const { return n_; }

private:
    Bind<S>* b_;
    const Config* cfg_;
    Eigen::Index n_ = 0;
    Var<S> z_prev_;
    Var<S> history_;
    std::vector<Var<S>> windows_;
    std::vector<model::GaussianLatent<S>> dists_;
};

// Mean KL over a window list.
template <class S>
Var<S> mean_kl(Tape<S>& tape, const std::vector<model::GaussianLatent<S>>& dists) {
    Var<S> acc = tape.scalar(S(0));
    for (const auto& d : dists) acc = ad::add(acc, loss::kl_loss(d.mu, d.log_sigma));
    return ad::scale(acc, S(1) / static_cast<S>(dists.size()));
}

// ---- stage losses ----

template <class S>
struct Stage1Parts {
    Var<S> rec, kl, smo;
};

// Teacher forcing: the past-interaction history comes from the ground-truth
// listener in one full causal pass; window n slices the first n*w rows.
template <class S>
Stage1Parts<S> stage1_session_loss(Bind<S>& b, const Config& cfg, const Session& s,
                                   const std::function<Mat<S>(Eigen::Index)>& eps) {
    const Eigen::Index T = s.speaker_coeffs.rows();
    const Eigen::Index N = window_count(T, cfg.w);
    const Mat<S> spk = castf<S>(s.speaker_coeffs);
    const Mat<S> lst = castf<S>(s.listener_coeffs);
    const Mat<S> aud = castf<S>(s.speaker_audio);

    SpeakerEnc<S> enc = encode_speaker(b, cfg, aud, spk);
    Var<S> gt_l = b.tape().constant(lst);
    Var<S> hist_full = model::encode_past_interaction(b, gt_l, enc.faces, enc.audio, cfg);

    Var<S> z_prev = b.tape().zeros(1, cfg.latent_dim());
    std::vector<Var<S>> windows;
    std::vector<model::GaussianLatent<S>> dists;
    for (Eigen::Index n = 0; n < N; ++n) {
        Var<S> h = ad::slice_rows(hist_full, 0, n * cfg.w);
        Var<S> f = ad::slice_rows(enc.faces, 0, (n + 1) * cfg.w);
        Var<S> a = ad::slice_rows(enc.audio, 0, cfg.k * (n + 1) * cfg.w);
        WindowOut<S> wo = generate_window(b, cfg, h, f, a, z_prev, eps(n), n * cfg.w);
        windows.push_back(wo.coeffs);
        dists.push_back(wo.dist);
        z_prev = wo.z;
    }
    Var<S> pred = ad::concat_rows(windows);

    Stage1Parts<S> parts;
    parts.rec = loss::rec_loss(pred, gt_l, enc.recon, b.tape().constant(spk));
    parts.kl = mean_kl(b.tape(), dists);
    parts.smo = loss::smooth_loss(pred, gt_l);
    return parts;
}

template <class S>
struct Stage2Parts {
    Var<S> rec_a, kl, div, smo;
};

// Self-generated histories, M independent latent streams per session, min
// reconstruction over the appropriate-neighbor set, diversity across the M
// samples. Speaker encodings are shared across samples on the same tape.
template <class S>
Stage2Parts<S> stage2_session_loss(Bind<S>& b, const Config& cfg, const Session& s,
                                   const std::vector<const MatF*>& neighbor_listeners,
                                   const std::function<Mat<S>(int, Eigen::Index)>& eps) {
    const Eigen::Index T = s.speaker_coeffs.rows();
    const Eigen::Index N = window_count(T, cfg.w);
    const Mat<S> spk = castf<S>(s.speaker_coeffs);
    const Mat<S> lst = castf<S>(s.listener_coeffs);
    const Mat<S> aud = castf<S>(s.speaker_audio);
    if (neighbor_listeners.empty() && !cfg.disable_neighbor_min)
        throw DataError("stage2_session_loss: no neighbor reactions for " + s.id);

    SpeakerEnc<S> enc = encode_speaker(b, cfg, aud, spk);
    Var<S> gt_l = b.tape().constant(lst);
    std::vector<Mat<S>> neigh;
    neigh.reserve(neighbor_listeners.size());
    for (const MatF* nl : neighbor_listeners) neigh.push_back(castf<S>(*nl));

    Var<S> rec_acc = b.tape().scalar(S(0));
    Var<S> kl_acc = b.tape().scalar(S(0));
    Var<S> smo_acc = b.tape().scalar(S(0));
    std::vector<Var<S>> preds;
    for (int m = 0; m < cfg.M; ++m) {
        GenerationEngine<S> eng(b, cfg);
        for (Eigen::Index n = 0; n < N; ++n) {
            Var<S> f = ad::slice_rows(enc.faces, 0, (n + 1) * cfg.w);
            Var<S> a = ad::slice_rows(enc.audio, 0, cfg.k * (n + 1) * cfg.w);
            eng.step(f, a, eps(m, n));
        }
        Var<S> pred = eng.sequence();
        preds.push_back(pred);
        Var<S> rec_m = cfg.disable_neighbor_min
                           ? loss::smooth_l1(pred, gt_l)
                           : loss::appropriate_rec_loss(pred, neigh).first;
        rec_acc = ad::add(rec_acc, rec_m);
        kl_acc = ad::add(kl_acc, mean_kl(b.tape(), eng.dists()));
        smo_acc = ad::add(smo_acc, loss::smooth_loss(pred, gt_l));
    }
    const S invM = S(1) / static_cast<S>(cfg.M);
    Stage2Parts<S> parts;
    parts.rec_a = ad::scale(rec_acc, invM);
    parts.kl = ad::scale(kl_acc, invM);
    parts.smo = ad::scale(smo_acc, invM);
    parts.div = loss::diversity_loss(preds, cfg.diversity_bandwidth(static_cast<int>(T)));
    return parts;
}

// ---- training ----

struct TrainHooks {
    std::function<void(long, const loss::LossReport&)> on_step;
    std::function<void(const ckpt::Meta&)> on_epoch;
    long max_steps = -1; // stop after this many optimizer steps (total, not per call)
};

// Neighbor listener lookup across the corpus a session may reference.
inline std::map<std::string, const Session*> index_by_id(const std::vector<Session>& corpus) {
    std::map<std::string, const Session*> m;
    for (const auto& s : corpus) m.emplace(s.id, &s);
    return m;
}

inline std::vector<const MatF*> neighbor_listeners(const Session& s,
                                                   const std::map<std::string, const Session*>& by_id) {
    std::vector<const MatF*> out;
    for (const auto& id : s.neighbor_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw DataError("unknown neighbor session id: " + id);
        out.push_back(&it->second->listener_coeffs);
    }
    return out;
}

// Run one stage until target_epochs (resuming from meta.epoch) or until
// hooks.max_steps optimizer steps have been taken. Deterministic given the
// config, the parameter store, and meta; interrupting at an epoch boundary
// and resuming from its checkpoint reproduces the uninterrupted run.
template <class S>
ckpt::Meta train_stage(ParamStore<S>& ps, const Config& cfg, const std::vector<Session>& train,
                       const std::vector<Session>& corpus, int stage, long target_epochs,
                       ckpt::Meta meta, const TrainHooks& hooks = {}) {
    if (train.empty()) throw DataError("train_stage: no training sessions");
    meta.stage = stage;
    const auto by_id = index_by_id(corpus);
    nn::AdamWConfig oc{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};

    for (long epoch = meta.epoch; epoch < target_epochs; ++epoch) {
        std::vector<std::size_t> order(train.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle = make_stream(cfg.seed, "shuffle",
                                  {static_cast<std::uint64_t>(stage),
                                   static_cast<std::uint64_t>(epoch)});
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(
                shuffle.uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }

        for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t bn =
                std::min(order.size() - b0, static_cast<std::size_t>(cfg.batch_size));
            Tape<S> tape;
            Bind<S> bind(ps, tape);
            const S invB = S(1) / static_cast<S>(bn);

            loss::LossReport rep;
            rep.stage = stage;
            Var<S> total = tape.scalar(S(0));
            Var<S> rec = tape.scalar(S(0)), kl = tape.scalar(S(0));
            Var<S> div = tape.scalar(S(0)), smo = tape.scalar(S(0));
            for (std::size_t bi = 0; bi < bn; ++bi) {
                const Session& s = train[order[b0 + bi]];
                if (stage == 1) {
                    auto parts = stage1_session_loss<S>(
                        bind, cfg, s, [&](Eigen::Index n) {
                            return train_eps<S>(cfg, s.id, stage, epoch, 0, n);
                        });
                    rec = ad::add(rec, ad::scale(parts.rec, invB));
                    kl = ad::add(kl, ad::scale(parts.kl, invB));
                    smo = ad::add(smo, ad::scale(parts.smo, invB));
                } else {
                    auto parts = stage2_session_loss<S>(
                        bind, cfg, s, neighbor_listeners(s, by_id), [&](int m, Eigen::Index n) {
                            return train_eps<S>(cfg, s.id, stage, epoch, m, n);
                        });
                    rec = ad::add(rec, ad::scale(parts.rec_a, invB));
                    kl = ad::add(kl, ad::scale(parts.kl, invB));
                    div = ad::add(div, ad::scale(parts.div, invB));
                    smo = ad::add(smo, ad::scale(parts.smo, invB));
                }
            }
            total = (stage == 1) ? loss::stage1_total(rec, kl, smo, cfg)
                                 : loss::stage2_total(rec, kl, div, smo, cfg);
            if (stage == 1) rep.rec = static_cast<double>(rec.scalar());
            else rep.rec_a = static_cast<double>(rec.scalar());
            rep.kl = static_cast<double>(kl.scalar());
            rep.div = static_cast<double>(div.scalar());
            rep.smo = static_cast<double>(smo.scalar());
            rep.total = static_cast<double>(total.scalar());
            if (!std::isfinite(rep.total))
                throw DivergenceError("non-finite training loss at step " +
                                      std::to_string(meta.step + 1));

            tape.backward(total);
            auto grads = bind.grads();
            nn::clip_grad_norm(grads, cfg.grad_clip);
            ++meta.adam_t;
            nn::adamw_step(ps, grads, oc, meta.adam_t);
            ++meta.step;
            if (hooks.on_step) hooks.on_step(meta.step, rep);
            if (hooks.max_steps >= 0 && meta.step >= hooks.max_steps) {
                meta.epoch = epoch;
                return meta;
            }
        }
        meta.epoch = epoch + 1;
        if (hooks.on_epoch) hooks.on_epoch(meta);
    }
    return meta;
}

// ---- inference ----

// Offline generation: encode the speaker once, then run the self-generated
// window loop over prefix slices. The production path.
template <class S>
Mat<S> generate_reaction(const ParamStore<S>& ps, const Config& cfg, const Session& s,
                         std::uint64_t seed, int sample_index) {
    const Eigen::Index T = s.speaker_coeffs.rows();
    const Eigen::Index N = window_count(T, cfg.w);
    Tape<S> tape(false);
    Bind<S> b(ps, tape);
    SpeakerEnc<S> enc = encode_speaker(b, cfg, castf<S>(s.speaker_audio),
                                       castf<S>(s.speaker_coeffs));
    GenerationEngine<S> eng(b, cfg);
    for (Eigen::Index n = 0; n < N; ++n) {
        Var<S> f = ad::slice_rows(enc.faces, 0, (n + 1) * cfg.w);
        Var<S> a = ad::slice_rows(enc.audio, 0, cfg.k * (n + 1) * cfg.w);
        eng.step(f, a, gen_eps<S>(cfg, seed, s.id, sample_index, n));
    }
    return eng.sequence().val();
}

// Streaming generation: at window n only speaker frames < (n+1)*w (and their
// audio) exist; everything downstream of them is re-derived from that prefix
// on a fresh tape, with the interaction history and the carried latent kept
// as plain value caches. Bitwise-equal to generate_reaction.
template <class S>
Mat<S> generate_streaming(const ParamStore<S>& ps, const Config& cfg, const Session& s,
                          std::uint64_t seed, int sample_index) {
    const Eigen::Index T = s.speaker_coeffs.rows();
    const Eigen::Index N = window_count(T, cfg.w);
    const Mat<S> spk = castf<S>(s.speaker_coeffs);
    const Mat<S> aud = castf<S>(s.speaker_audio);

    Mat<S> history(0, cfg.d);
    Mat<S> z_prev = Mat<S>::Zero(1, cfg.latent_dim());
    Mat<S> out(T, cfg.D);
    for (Eigen::Index n = 0; n < N; ++n) {
        const Eigen::Index start = n * cfg.w, upto = (n + 1) * cfg.w;
        Tape<S> tape(false);
        Bind<S> b(ps, tape);
        SpeakerEnc<S> enc =
            encode_speaker(b, cfg, Mat<S>(aud.topRows(cfg.k * upto)), Mat<S>(spk.topRows(upto)));
        WindowOut<S> wo = generate_window(b, cfg, tape.constant(history), enc.faces, enc.audio,
                                          tape.constant(z_prev),
                                          gen_eps<S>(cfg, seed, s.id, sample_index, n), start);
        Var<S> h = model::embed_reactions(b, wo.coeffs, start, cfg);
        h = model::sync_to_faces(b, model::kSyncPast, h, enc.faces, start, cfg);
        h = model::sync_to_audio(b, model::kSyncPast, h, enc.audio, start, cfg);

        history.conservativeResize(history.rows() + cfg.w, cfg.d);
        history.bottomRows(cfg.w) = h.val();
        z_prev = wo.z.val();
        out.middleRows(start, cfg.w) = wo.coeffs.val();
    }
    return out;
}

// Replay check: given the complete generated sequence, recompute the entire
// interaction history in one causal pass (as stage-1 does for ground truth)
// and re-derive every window from slices of it with the same noise. Equal to
// the incremental result because every history row is causal in the frames
// before it.
template <class S>
Mat<S> generate_replay(const ParamStore<S>& ps, const Config& cfg, const Session& s,
                       std::uint64_t seed, int sample_index, const Mat<S>& generated) {
    const Eigen::Index T = s.speaker_coeffs.rows();
    const Eigen::Index N = window_count(T, cfg.w);
    Tape<S> tape(false);
    Bind<S> b(ps, tape);
    SpeakerEnc<S> enc = encode_speaker(b, cfg, castf<S>(s.speaker_audio),
                                       castf<S>(s.speaker_coeffs));
    Var<S> hist_full =
        model::encode_past_interaction(b, tape.constant(generated), enc.faces, enc.audio, cfg);
    Var<S> z_prev = tape.zeros(1, cfg.latent_dim());
    Mat<S> out(T, cfg.D);
    for (Eigen::Index n = 0; n < N; ++n) {
        Var<S> h = ad::slice_rows(hist_full, 0, n * cfg.w);
        Var<S> f = ad::slice_rows(enc.faces, 0, (n + 1) * cfg.w);
        Var<S> a = ad::slice_rows(enc.audio, 0, cfg.k * (n + 1) * cfg.w);
        WindowOut<S> wo = generate_window(b, cfg, h, f, a, z_prev,
                                          gen_eps<S>(cfg, seed, s.id, sample_index, n), n * cfg.w);
        z_prev = wo.z;
        out.middleRows(n * cfg.w, cfg.w) = wo.coeffs.val();
    }
    return out;
}

// ---- evaluation ----

// Generate n_samples reactions per test session and score them. Neighbor
// ground truth comes from the full corpus. Deterministic for a given seed
// regardless of the worker count.
template <class S>
metrics::EvalReport evaluate(const ParamStore<S>& ps, const Config& cfg,
                             const std::vector<Session>& test, const std::vector<Session>& corpus,
                             int n_samples, std::uint64_t seed, int workers = 1) {
    if (test.empty()) throw DataError("evaluate: no test sessions");
    if (n_samples < 2) throw ConfigError("evaluate: n_samples must be at least 2");
    const auto by_id = index_by_id(corpus);

    metrics::EvalReport rep;
    rep.per_session.resize(test.size());
    std::vector<MatD> first_samples(test.size());

    auto eval_one = [&](std::size_t i) {
        const Session& s = test[i];
        std::vector<MatD> neigh;
        for (const auto& id : s.neighbor_ids) {
            auto it = by_id.find(id);
            if (it == by_id.end()) throw DataError("unknown neighbor session id: " + id);
            neigh.push_back(it->second->listener_coeffs.cast<double>());
        }
        const MatD spk = s.speaker_coeffs.cast<double>();
        std::vector<MatD> samples;
        samples.reserve(static_cast<std::size_t>(n_samples));
        for (int m = 0; m < n_samples; ++m)
            samples.push_back(
                generate_reaction<S>(ps, cfg, s, seed, m).template cast<double>());

        metrics::SessionEval& se = rep.per_session[i];
        se.id = s.id;
        for (const MatD& p : samples) {
            se.frd += metrics::frd(p, neigh);
            se.frc += metrics::frc(p, neigh);
            se.div_f += metrics::div_f(p);
            se.tlcc += metrics::tlcc(spk, p, cfg.w);
        }
        const double inv = 1.0 / n_samples;
        se.frd *= inv;
        se.frc *= inv;
        se.div_f *= inv;
        se.tlcc *= inv;
        se.s_mse = metrics::s_mse(samples);
        first_samples[i] = samples[0];
    };

    if (workers <= 1) {
        for (std::size_t i = 0; i < test.size(); ++i) eval_one(i);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex mu;
        auto run = [&]() {
            for (;;) {
                std::size_t i;
                {
                    std::lock_guard<std::mutex> lk(mu);
                    if (next >= test.size()) return;
                    i = next++;
                }
                eval_one(i);
            }
        };
        const std::size_t nthreads =
            std::min<std::size_t>(static_cast<std::size_t>(workers), test.size());
        pool.reserve(nthreads);
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(run);
        for (auto& th : pool) th.join();
    }

    for (const auto& se : rep.per_session) {
        rep.frd += se.frd;
        rep.frc += se.frc;
        rep.div_f += se.div_f;
        rep.s_mse += se.s_mse;
        rep.tlcc += se.tlcc;
    }
    const double inv = 1.0 / static_cast<double>(test.size());
    rep.frd *= inv;
    rep.frc *= inv;
    rep.div_f *= inv;
    rep.s_mse *= inv;
    rep.tlcc *= inv;
    rep.div_c = test.size() >= 2 ? metrics::div_c(first_samples) : 0.0;
    return rep;
}

} // namespace reactgen::pipe
