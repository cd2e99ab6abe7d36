#pragma once

// Shared helpers for the test binaries: finite-difference gradient checking
// against the tape, random matrices, and parameter-store perturbation (zero-
// initialised heads otherwise hide entire paths from behavioural tests).
// Doctest-free so the acceptance binary can use it too; violations throw,
// which every harness reports with the message.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "reactgen/autodiff.hpp"
#include "reactgen/nn.hpp"
#include "reactgen/rng.hpp"

namespace testutil {

using reactgen::Rng;

template <class S>
reactgen::ad::Mat<S> random_mat(Rng& r, Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
    reactgen::ad::Mat<S> m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = static_cast<S>(sd * r.normal());
    return m;
}

// Central-difference check of d(scalar)/d(inputs[0..n)) for a graph that can
// be rebuilt from plain matrices. Returns the worst relative error seen.
inline double check_grads_impl(
    std::vector<reactgen::ad::Mat<double>> inputs,
    const std::function<reactgen::ad::Var<double>(reactgen::ad::Tape<double>&,
                                                  std::vector<reactgen::ad::Var<double>>&)>& build,
    double eps, double tol, bool assert_each) {
    using reactgen::ad::Mat;
    using reactgen::ad::Tape;
    using reactgen::ad::Var;
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (auto& m : inputs) vars.push_back(tape.put(m, true));
    Var<double> out = build(tape, vars);
    if (out.rows() != 1 || out.cols() != 1)
        throw std::logic_error("check_grads: build must return a scalar");
    tape.backward(out);
    std::vector<Mat<double>> analytic;
    for (auto& v : vars) analytic.push_back(tape.grad_or_zero(v));

    auto eval = [&](const std::vector<Mat<double>>& xs) {
        Tape<double> t2(false);
        std::vector<Var<double>> vs;
        for (const auto& m : xs) vs.push_back(t2.put(m, false));
        return build(t2, vs).scalar();
    };

    double worst = 0.0;
    for (std::size_t vi = 0; vi < inputs.size(); ++vi) {
        for (Eigen::Index i = 0; i < inputs[vi].rows(); ++i) {
            for (Eigen::Index j = 0; j < inputs[vi].cols(); ++j) {
                std::vector<Mat<double>> xs = inputs;
                xs[vi](i, j) += eps;
                const double up = eval(xs);
                xs[vi](i, j) -= 2 * eps;
                const double dn = eval(xs);
                const double fd = (up - dn) / (2 * eps);
                const double an = analytic[vi](i, j);
                const double denom = std::max({1.0, std::abs(fd), std::abs(an)});
                const double rel = std::abs(fd - an) / denom;
                worst = std::max(worst, rel);
                if (assert_each && !(rel < tol)) {
                    std::ostringstream msg;
                    msg << "gradient mismatch at input " << vi << " (" << i << "," << j
                        << "): analytic " << an << " vs finite-difference " << fd
                        << " (rel " << rel << ", tol " << tol << ")";
                    throw std::runtime_error(msg.str());
                }
            }
        }
    }
    return worst;
}

inline void check_grads(
    std::vector<reactgen::ad::Mat<double>> inputs,
    const std::function<reactgen::ad::Var<double>(reactgen::ad::Tape<double>&,
                                                  std::vector<reactgen::ad::Var<double>>&)>& build,
    double eps = 1e-6, double tol = 1e-6) {
    check_grads_impl(std::move(inputs), build, eps, tol, true);
}

// Add seeded noise to every parameter (zero-init heads included) so model
// paths produce non-degenerate outputs and gradients.
template <class S>
void randomize_store(reactgen::nn::ParamStore<S>& ps, std::uint64_t seed, double scale = 0.05) {
    for (auto& [name, e] : ps.entries()) {
        Rng r = reactgen::make_stream(seed, "jitter/" + name, {});
        for (Eigen::Index i = 0; i < e.value.rows(); ++i)
            for (Eigen::Index j = 0; j < e.value.cols(); ++j)
                e.value(i, j) += static_cast<S>(scale * r.normal());
    }
}

} // namespace testutil
