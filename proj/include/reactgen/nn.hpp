#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "reactgen/autodiff.hpp"
#include "reactgen/errors.hpp"
#include "reactgen/rng.hpp"

// Named-parameter store, layer helpers, and the AdamW update.
//
// Every parameter is keyed by a module-qualified name ("speaker_encoder.
// audio.embed.W"). Initialization draws from a stream folded from the name,
// so adding or removing unrelated parameters never shifts anyone's init.

namespace reactgen::nn {

using ad::Mat;
using ad::Tape;
using ad::Var;

enum class Init { Zero, One, Xavier, Token };

template <class S>
class ParamStore {
public:
    struct Entry {
        Mat<S> value;
        Mat<S> m, v; // AdamW moments
        bool decay = false;
    };

    explicit ParamStore(std::uint64_t init_seed = 0) : init_seed_(init_seed) {}

    void def(const std::string& name, Eigen::Index rows, Eigen::Index cols, Init kind,
             bool decay) {
        if (entries_.count(name)) throw std::logic_error("parameter redefined: " + name);
        Entry e;
        e.value = Mat<S>::Zero(rows, cols);
        switch (kind) {
        case Init::Zero: break;
        case Init::One: e.value.setOnes(); break;
        case Init::Xavier: {
            Rng r = make_stream(init_seed_, "init/" + name, {});
            const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
            for (Eigen::Index i = 0; i < rows; ++i)
                for (Eigen::Index j = 0; j < cols; ++j)
                    e.value(i, j) = static_cast<S>(r.uniform(-limit, limit));
            break;
        }
        case Init::Token: {
            Rng r = make_stream(init_seed_, "init/" + name, {});
            for (Eigen::Index i = 0; i < rows; ++i)
                for (Eigen::Index j = 0; j < cols; ++j)
                    e.value(i, j) = static_cast<S>(0.02 * r.normal());
            break;
        }
        }
        e.m = Mat<S>::Zero(rows, cols);
        e.v = Mat<S>::Zero(rows, cols);
        e.decay = decay;
        entries_.emplace(name, std::move(e));
    }

    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    Entry& at(const std::string& name) {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw std::logic_error("unknown parameter: " + name);
        return it->second;
    }
    const Entry& at(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw std::logic_error("unknown parameter: " + name);
        return it->second;
    }

    // Deterministic (sorted) iteration.
    std::map<std::string, Entry>& entries() { return entries_; }
    const std::map<std::string, Entry>& entries() const { return entries_; }

    std::uint64_t init_seed() const { return init_seed_; }

    template <class S2>
    ParamStore<S2> cast() const {
        ParamStore<S2> out(init_seed_);
        for (const auto& [name, e] : entries_) {
            typename ParamStore<S2>::Entry e2;
            e2.value = e.value.template cast<S2>();
            e2.m = e.m.template cast<S2>();
            e2.v = e.v.template cast<S2>();
            e2.decay = e.decay;
            out.entries().emplace(name, std::move(e2));
        }
        return out;
    }

private:
    std::map<std::string, Entry> entries_;
    std::uint64_t init_seed_;
};

// Per-tape binding of parameters: each name maps to one tape node so that
// repeated use accumulates gradient into a single slot. Reads only; updates
// go through adamw_step.
template <class S>
class Bind {
public:
    Bind(const ParamStore<S>& store, Tape<S>& tape) : store_(&store), tape_(&tape) {}

    Var<S> operator()(const std::string& name) {
        auto it = bound_.find(name);
        if (it != bound_.end()) return it->second;
        Var<S> v = tape_->put(store_->at(name).value, tape_->grad_enabled());
        bound_.emplace(name, v);
        return v;
    }

    // After backward(): gradient per bound parameter (zero if untouched).
    std::map<std::string, Mat<S>> grads() const {
        std::map<std::string, Mat<S>> out;
        for (const auto& [name, v] : bound_) out.emplace(name, tape_->grad_or_zero(v));
        return out;
    }

    const ParamStore<S>& store() const { return *store_; }
    Tape<S>& tape() { return *tape_; }

private:
    const ParamStore<S>* store_;
    Tape<S>* tape_;
    std::map<std::string, Var<S>> bound_;
};

// ---- layer definitions (def_* registers parameters, matching forward below) ----

template <class S>
void def_linear(ParamStore<S>& ps, const std::string& prefix, Eigen::Index in, Eigen::Index out,
                Init weight_init = Init::Xavier) {
    ps.def(prefix + ".W", in, out, weight_init, /*decay=*/true);
    ps.def(prefix + ".b", 1, out, Init::Zero, /*decay=*/false);
}

template <class S>
Var<S> linear(Bind<S>& b, const std::string& prefix, Var<S> x) {
    return add_rowvec(matmul(x, b(prefix + ".W")), b(prefix + ".b"));
}

template <class S>
void def_layer_norm(ParamStore<S>& ps, const std::string& prefix, Eigen::Index dim) {
    ps.def(prefix + ".gamma", 1, dim, Init::One, /*decay=*/false);
    ps.def(prefix + ".beta", 1, dim, Init::Zero, /*decay=*/false);
}

template <class S>
Var<S> layer_norm(Bind<S>& b, const std::string& prefix, Var<S> x) {
    return ad::layer_norm_rows(x, b(prefix + ".gamma"), b(prefix + ".beta"));
}

// Two-layer feed-forward with GELU; the output projection starts at zero so a
// fresh residual block is the identity.
template <class S>
void def_ffn(ParamStore<S>& ps, const std::string& prefix, Eigen::Index dim,
             Eigen::Index hidden) {
    def_linear(ps, prefix + ".in", dim, hidden, Init::Xavier);
    def_linear(ps, prefix + ".out", hidden, dim, Init::Zero);
}

template <class S>
Var<S> ffn(Bind<S>& b, const std::string& prefix, Var<S> x) {
    return linear(b, prefix + ".out", ad::gelu(linear(b, prefix + ".in", x)));
}

// Sinusoidal positional encoding rows for absolute positions
// start .. start+length-1: even columns sin(t / 10000^(2i/d)), odd cos.
template <class S>
Mat<S> positional_encoding(Eigen::Index start, Eigen::Index length, Eigen::Index d) {
    if (d % 2 != 0) throw ConfigError("positional_encoding: d must be even");
    Mat<S> out(length, d);
    for (Eigen::Index r = 0; r < length; ++r) {
        const double t = static_cast<double>(start + r);
        for (Eigen::Index i = 0; i < d / 2; ++i) {
            const double denom =
                std::pow(10000.0, (2.0 * static_cast<double>(i)) / static_cast<double>(d));
            out(r, 2 * i) = static_cast<S>(std::sin(t / denom));
            out(r, 2 * i + 1) = static_cast<S>(std::cos(t / denom));
        }
    }
    return out;
}

// ---- optimization ----

// Global-norm gradient clipping; returns the pre-clip norm.
template <class S>
double clip_grad_norm(std::map<std::string, Mat<S>>& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) sq += static_cast<double>(g.template cast<double>().squaredNorm());
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const S scale = static_cast<S>(max_norm / norm);
        for (auto& [name, g] : grads) g *= scale;
    }
    return norm;
}

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// Decoupled-weight-decay adaptive-moment step; t is the 1-based step count
// after this update (caller increments and passes it).
template <class S>
void adamw_step(ParamStore<S>& ps, const std::map<std::string, Mat<S>>& grads,
                const AdamWConfig& oc, long t) {
    const S b1 = static_cast<S>(oc.beta1), b2 = static_cast<S>(oc.beta2);
    const S bc1 = static_cast<S>(1.0 - std::pow(oc.beta1, static_cast<double>(t)));
    const S bc2 = static_cast<S>(1.0 - std::pow(oc.beta2, static_cast<double>(t)));
    const S lr = static_cast<S>(oc.lr), eps = static_cast<S>(oc.eps);
    for (const auto& [name, g] : grads) {
        auto& e = ps.at(name);
        e.m = b1 * e.m + (S(1) - b1) * g;
        e.v = (b2 * e.v.array() + (S(1) - b2) * g.array().square()).matrix();
        Mat<S> mhat = e.m / bc1;
        Mat<S> vhat = e.v / bc2;
        Mat<S> update = (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
        if (e.decay && oc.weight_decay > 0.0)
            update += static_cast<S>(oc.weight_decay) * e.value;
        e.value -= lr * update;
    }
}

} // namespace reactgen::nn
