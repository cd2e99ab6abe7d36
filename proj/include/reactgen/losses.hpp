#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "reactgen/autodiff.hpp"
#include "reactgen/core.hpp"

// Training objectives. All losses are built on the tape, so every term is
// differentiable; scalar read-outs go into a LossReport for logging.

namespace reactgen::loss {

using ad::Mat;
using ad::Tape;
using ad::Var;

// Mean element-wise Huber error with threshold 1.
template <class S>
Var<S> smooth_l1(Var<S> a, Var<S> b) {
    return ad::smooth_l1_mean(a, b, S(1));
}

// Listener + speaker reconstruction against their ground truths.
template <class S>
Var<S> rec_loss(Var<S> listener_hat, Var<S> listener_gt, Var<S> speaker_hat, Var<S> speaker_gt) {
    return ad::add(smooth_l1(listener_hat, listener_gt), smooth_l1(speaker_hat, speaker_gt));
}

// Min over the neighbor set of the smooth-L1 to each appropriate reaction;
// gradient flows only through the winning term. Ties break toward the lowest
// index. Returns (loss, winning index).
template <class S>
std::pair<Var<S>, std::size_t> appropriate_rec_loss(Var<S> pred,
                                                    const std::vector<Mat<S>>& neighbors) {
    if (neighbors.empty()) throw DataError("appropriate_rec_loss: empty neighbor set");
    Tape<S>* t = pred.tape;
    std::size_t best = 0;
    Var<S> best_var;
    S best_val = S(0);
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        Var<S> li = smooth_l1(pred, t->constant(neighbors[i]));
        if (i == 0 || li.scalar() < best_val) {
            best = i;
            best_var = li;
            best_val = li.scalar();
        }
    }
    return {best_var, best};
}

// Energy diversity over M decoded samples: mean over ordered pairs of
// exp(-||R_i - R_j||^2 / sigma_d). In (0, 1]; 1 iff all samples coincide.
template <class S>
Var<S> diversity_loss(const std::vector<Var<S>>& samples, double sigma_d) {
    const std::size_t M = samples.size();
    if (M < 2) throw ConfigError("diversity_loss: needs at least 2 samples");
    if (sigma_d <= 0.0) throw ConfigError("diversity_loss: sigma_d must be positive");
    Tape<S>* t = samples[0].tape;
    Var<S> acc = t->scalar(S(0));
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = i + 1; j < M; ++j) {
            Var<S> d2 = ad::sum_all(ad::vsquare(ad::sub(samples[i], samples[j])));
            acc = ad::add(acc, ad::vexp(ad::scale(d2, static_cast<S>(-1.0 / sigma_d))));
        }
    }
    // Each unordered pair stands for two ordered pairs.
    return ad::scale(acc, static_cast<S>(2.0 / (static_cast<double>(M) * (M - 1))));
}

// KL divergence of N(mu, diag sigma^2) from the standard normal:
// 1/2 sum(mu^2 + sigma^2 - log sigma^2 - 1), with log sigma clamped as in
// sampling so the loss matches the distribution actually sampled from.
template <class S>
Var<S> kl_loss(Var<S> mu, Var<S> log_sigma) {
    Var<S> ls = ad::clamp(log_sigma, S(-10), S(10));
    Var<S> two_ls = ad::scale(ls, S(2));
    Var<S> sig2 = ad::vexp(two_ls);
    Var<S> inner = ad::sub(ad::add(ad::vsquare(mu), sig2), ad::add_scalar(two_ls, S(1)));
    return ad::scale(ad::sum_all(inner), S(0.5));
}

// Temporal smoothness: mean absolute difference of second differences,
// normalized over the T-2 interior frames and all dims. Invariant to adding
// any per-dimension affine function of time to both sequences.
template <class S>
Var<S> smooth_loss(Var<S> pred, Var<S> gt) {
    const Eigen::Index T = pred.rows();
    if (T < 3) throw DataError("smooth_loss: needs at least 3 frames");
    auto second_diff = [](Var<S> x) {
        const Eigen::Index n = x.rows();
        Var<S> a = ad::slice_rows(x, 2, n - 2);
        Var<S> b = ad::slice_rows(x, 1, n - 2);
        Var<S> c = ad::slice_rows(x, 0, n - 2);
        return ad::add(ad::sub(a, ad::scale(b, S(2))), c);
    };
    return ad::mean_all(ad::vabs(ad::sub(second_diff(pred), second_diff(gt))));
}

// Scalar snapshot of one training step's objective.
struct LossReport {
    int stage = 1;
    double rec = 0.0;   // stage 1: listener+speaker reconstruction
    double rec_a = 0.0; // stage 2: neighbor-set reconstruction
    double kl = 0.0;
    double div = 0.0;
    double smo = 0.0;
    double total = 0.0;

    std::string line(long step) const {
        std::ostringstream o;
        o.precision(10);
        o << "step=" << step << " stage=" << stage << " rec=" << rec << " rec_a=" << rec_a
          << " kl=" << kl << " div=" << div << " smo=" << smo << " total=" << total;
        return o.str();
    }
};

template <class S>
Var<S> stage1_total(Var<S> rec, Var<S> kl, Var<S> smo, const Config& cfg) {
    return ad::add(rec, ad::add(ad::scale(kl, static_cast<S>(cfg.lambda_kl)),
                                ad::scale(smo, static_cast<S>(cfg.lambda_smo))));
}

template <class S>
Var<S> stage2_total(Var<S> rec_a, Var<S> kl, Var<S> div, Var<S> smo, const Config& cfg) {
    Var<S> t = ad::add(rec_a, ad::scale(kl, static_cast<S>(cfg.lambda_kl)));
    t = ad::add(t, ad::scale(div, static_cast<S>(cfg.lambda_div)));
    return ad::add(t, ad::scale(smo, static_cast<S>(cfg.lambda_smo)));
}

} // namespace reactgen::loss
