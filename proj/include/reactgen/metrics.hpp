#pragma once

#include <string>
#include <vector>

#include "reactgen/core.hpp"

// Evaluation metrics, all computed at double precision over full sequences.

namespace reactgen::metrics {

// Min over neighbors of the mean per-frame Euclidean distance.
double frd(const MatD& pred, const std::vector<MatD>& neighbors);

// Max over neighbors of the per-dimension Pearson correlation across time,
// averaged over dimensions; a dimension that is constant in either sequence
// contributes 0.
double frc(const MatD& pred, const std::vector<MatD>& neighbors);

// Mean over unordered session pairs of the mean squared element difference
// between their generated reactions (one sample per session).
double div_c(const std::vector<MatD>& preds);

// Mean over dimensions of the population variance across time.
double div_f(const MatD& pred);

// Mean over unordered sample pairs of the mean squared element difference
// (samples generated for one session).
double s_mse(const std::vector<MatD>& samples);

// Synchrony: mean-pool both sequences over dimensions, then find the lag in
// [-max_lag, max_lag] maximizing Pearson correlation between speaker[t] and
// listener[t+lag]; returns |lag|, ties broken toward 0 (then toward the
// positive lag). Constant overlap segments correlate as 0.
int tlcc(const MatD& speaker, const MatD& listener, int max_lag);

struct SessionEval {
    std::string id;
    double frd = 0.0, frc = 0.0, div_f = 0.0, s_mse = 0.0;
    double tlcc = 0.0;
};

struct EvalReport {
    double frd = 0.0, frc = 0.0, div_c = 0.0, div_f = 0.0, s_mse = 0.0, tlcc = 0.0;
    std::vector<SessionEval> per_session;

    // Line-delimited human-readable table.
    std::string text() const;
    // Machine-readable JSON summary.
    std::string json() const;
};

} // namespace reactgen::metrics
