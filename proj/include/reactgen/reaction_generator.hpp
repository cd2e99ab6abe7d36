#pragma once

#include <string>
#include <vector>

#include "reactgen/attention.hpp"
#include "reactgen/core.hpp"

// The variational reaction path. Per window: the interaction history plus
// two learned tokens are encoded into a Gaussian over a latent reaction
// vector; a sample is blended with the previous window's latent, linearly
// interpolated across the window, expanded into embeddings by cross-
// attending positional encodings, and decoded to coefficients.

namespace reactgen::model {

using ad::Mat;
using ad::Var;
using nn::Bind;
using nn::Init;
using nn::ParamStore;

template <class S>
struct GaussianLatent {
    Var<S> mu;        // 1 x d_z
    Var<S> log_sigma; // 1 x d_z, clamped to [-10, 10] before use
};

template <class S>
void def_reaction_generator(ParamStore<S>& ps, const Config& cfg) {
    const Eigen::Index d = cfg.d, dz = cfg.latent_dim();
    ps.def("reaction_generator.dist.mu_token", 1, d, Init::Token, false);
    ps.def("reaction_generator.dist.sigma_token", 1, d, Init::Token, false);
    for (int l = 0; l < cfg.layers; ++l)
        attn::def_self_block(ps, "reaction_generator.dist.block" + std::to_string(l), d);
    // Zero heads: a fresh model outputs mu=0, sigma=1 (the prior).
    nn::def_linear(ps, "reaction_generator.dist.mu_head", d, dz, Init::Zero);
    nn::def_linear(ps, "reaction_generator.dist.sigma_head", d, dz, Init::Zero);

    nn::def_linear(ps, "reaction_generator.latent_dec.in", dz, d);
    nn::def_layer_norm(ps, "reaction_generator.latent_dec.lnq", d);
    attn::def_mha(ps, "reaction_generator.latent_dec.attn", d, d, d);
    nn::def_layer_norm(ps, "reaction_generator.latent_dec.ln2", d);
    nn::def_ffn(ps, "reaction_generator.latent_dec.ffn", d, 2 * d);

    for (int l = 0; l < cfg.layers; ++l)
        attn::def_self_block(ps, "reaction_generator.decoder.block" + std::to_string(l), d);
    nn::def_linear(ps, "reaction_generator.decoder.head", d, cfg.D, Init::Zero);
}

// Encode the interaction history (may have zero rows) together with the two
// learned tokens; the token positions' outputs parameterize the Gaussian.
template <class S>
GaussianLatent<S> history_distribution(Bind<S>& b, Var<S> h_bar, const Config& cfg) {
    Var<S> x = ad::concat_rows<S>(
        {b("reaction_generator.dist.mu_token"), b("reaction_generator.dist.sigma_token"), h_bar});
    const Mat<S> bias = Mat<S>::Zero(x.rows(), x.rows());
    for (int l = 0; l < cfg.layers; ++l)
        x = attn::self_block(b, "reaction_generator.dist.block" + std::to_string(l), x, bias,
                             cfg.heads);
    GaussianLatent<S> out;
    out.mu = nn::linear(b, "reaction_generator.dist.mu_head", ad::slice_rows(x, 0, 1));
    out.log_sigma = nn::linear(b, "reaction_generator.dist.sigma_head", ad::slice_rows(x, 1, 1));
    return out;
}

// Reparameterized draw: mu + exp(log_sigma) ⊙ eps. With sampling disabled
// the mean is used directly (deterministic generator).
template <class S>
Var<S> sample_latent(const GaussianLatent<S>& dist, const Mat<S>& eps, const Config& cfg) {
    if (cfg.disable_sampling) return dist.mu;
    Var<S> sigma = ad::vexp(ad::clamp(dist.log_sigma, S(-10), S(10)));
    Var<S> noise = dist.mu.tape->constant(eps);
    return ad::add(dist.mu, ad::mul(sigma, noise));
}

// z_t = alpha * z_prev + (1 - alpha) * z_star.
template <class S>
Var<S> momentum_blend(Var<S> z_prev, Var<S> z_star, double alpha) {
    return ad::add(ad::scale(z_prev, static_cast<S>(alpha)),
                   ad::scale(z_star, static_cast<S>(1.0 - alpha)));
}

// Linear interpolation from z_prev (exclusive) to z_t (inclusive): w rows,
// row j = ((w-1-j) * z_prev + (j+1) * z_t) / w. The final row is exactly z_t.
template <class S>
Var<S> interpolate_latents(Var<S> z_prev, Var<S> z_t, int w) {
    if (w < 1) throw ConfigError("interpolate_latents: w must be positive");
    std::vector<Var<S>> rows;
    rows.reserve(static_cast<std::size_t>(w));
    for (int j = 0; j < w; ++j) {
        const S a = static_cast<S>(static_cast<double>(w - 1 - j) / w);
        const S c = static_cast<S>(static_cast<double>(j + 1) / w);
        rows.push_back(ad::add(ad::scale(z_prev, a), ad::scale(z_t, c)));
    }
    return ad::concat_rows(rows);
}

// Window latents (w x d_z) cross-attend the window's positional encodings
// (keys and values) to become reaction embeddings (w x d).
template <class S>
Var<S> latents_to_embeddings(Bind<S>& b, Var<S> Z, const Mat<S>& pe, const Config& cfg) {
    Var<S> q = nn::linear(b, "reaction_generator.latent_dec.in", Z);
    Var<S> keys = b.tape().constant(pe);
    const Mat<S> bias = Mat<S>::Zero(q.rows(), pe.rows());
    Var<S> qn = nn::layer_norm(b, "reaction_generator.latent_dec.lnq", q);
    Var<S> x = ad::add(q, attn::mha(b, "reaction_generator.latent_dec.attn", qn, keys, bias,
                                    cfg.heads));
    x = ad::add(x, nn::ffn(b, "reaction_generator.latent_dec.ffn",
                           nn::layer_norm(b, "reaction_generator.latent_dec.ln2", x)));
    return x;
}

// Synchronized window embeddings -> coefficients: causal self-attention
// blocks within the window plus a per-frame affine head.
template <class S>
Var<S> decode_reaction(Bind<S>& b, Var<S> r_bar, const Config& cfg) {
    const Mat<S> bias = attn::build_same_rate_bias<S>(r_bar.rows(), r_bar.rows(), cfg.p);
    Var<S> x = r_bar;
    for (int l = 0; l < cfg.layers; ++l)
        x = attn::self_block(b, "reaction_generator.decoder.block" + std::to_string(l), x, bias,
                             cfg.heads);
    return nn::linear(b, "reaction_generator.decoder.head", x);
}

} // namespace reactgen::model
