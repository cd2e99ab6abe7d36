#include "reactgen/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace reactgen::metrics {

namespace {

// Pearson correlation of two equal-length vectors; 0 if either is constant.
double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double n = static_cast<double>(x.size());
    const double mx = x.mean(), my = y.mean();
    const Eigen::VectorXd cx = x.array() - mx;
    const Eigen::VectorXd cy = y.array() - my;
    const double sx = cx.squaredNorm() / n;
    const double sy = cy.squaredNorm() / n;
    if (sx == 0.0 || sy == 0.0) return 0.0;
    return (cx.dot(cy) / n) / std::sqrt(sx * sy);
}

} // namespace

double frd(const MatD& pred, const std::vector<MatD>& neighbors) {
    if (neighbors.empty()) throw DataError("frd: empty neighbor set");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& nb : neighbors) {
        if (nb.rows() != pred.rows() || nb.cols() != pred.cols())
            throw DataError("frd: neighbor shape mismatch");
        double acc = 0.0;
        for (Eigen::Index t = 0; t < pred.rows(); ++t)
            acc += (pred.row(t) - nb.row(t)).norm();
        best = std::min(best, acc / static_cast<double>(pred.rows()));
    }
    return best;
}

double frc(const MatD& pred, const std::vector<MatD>& neighbors) {
    if (neighbors.empty()) throw DataError("frc: empty neighbor set");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& nb : neighbors) {
        if (nb.rows() != pred.rows() || nb.cols() != pred.cols())
            throw DataError("frc: neighbor shape mismatch");
        double acc = 0.0;
        for (Eigen::Index j = 0; j < pred.cols(); ++j) acc += pearson(pred.col(j), nb.col(j));
        best = std::max(best, acc / static_cast<double>(pred.cols()));
    }
    return best;
}

double div_c(const std::vector<MatD>& preds) {
    const std::size_t n = preds.size();
    if (n < 2) throw DataError("div_c: needs at least 2 sessions");
    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (preds[i].rows() != preds[j].rows() || preds[i].cols() != preds[j].cols())
                throw DataError("div_c: session output shape mismatch");
            acc += (preds[i] - preds[j]).array().square().mean();
            ++pairs;
        }
    }
    return acc / static_cast<double>(pairs);
}

double div_f(const MatD& pred) {
    const double T = static_cast<double>(pred.rows());
    double acc = 0.0;
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
        const double m = pred.col(j).mean();
        acc += (pred.col(j).array() - m).square().sum() / T;
    }
    return acc / static_cast<double>(pred.cols());
}

double s_mse(const std::vector<MatD>& samples) {
    const std::size_t n = samples.size();
    if (n < 2) throw DataError("s_mse: needs at least 2 samples");
    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            acc += (samples[i] - samples[j]).array().square().mean();
            ++pairs;
        }
    }
    return acc / static_cast<double>(pairs);
}

int tlcc(const MatD& speaker, const MatD& listener, int max_lag) {
    if (speaker.rows() != listener.rows()) throw DataError("tlcc: length mismatch");
    const Eigen::Index T = speaker.rows();
    if (T < 2) throw DataError("tlcc: needs at least 2 frames");
    if (max_lag < 0 || max_lag >= T) throw ConfigError("tlcc: max_lag must be in [0, T)");
    const Eigen::VectorXd s = speaker.rowwise().mean();
    const Eigen::VectorXd l = listener.rowwise().mean();

    auto corr_at = [&](int lag) {
        // Positive lag: listener trails the speaker by `lag` frames.
        const Eigen::Index n = T - std::abs(lag);
        Eigen::VectorXd xs(n), ys(n);
        for (Eigen::Index t = 0; t < n; ++t) {
            if (lag >= 0) {
                xs(t) = s(t);
                ys(t) = l(t + lag);
            } else {
                xs(t) = s(t - lag);
                ys(t) = l(t);
            }
        }
        return pearson(xs, ys);
    };

    // Visit lags by increasing |lag| (positive first) and keep strict
    // improvements only, so ties resolve toward 0.
    int best_lag = 0;
    double best = corr_at(0);
    for (int a = 1; a <= max_lag; ++a) {
        for (const int lag : {a, -a}) {
            const double c = corr_at(lag);
            if (c > best) {
                best = c;
                best_lag = lag;
            }
        }
    }
    return std::abs(best_lag);
}

std::string EvalReport::text() const {
    std::ostringstream o;
    o << std::setprecision(8);
    o << "session frd frc div_f s_mse tlcc\n";
    for (const auto& s : per_session)
        o << s.id << " " << s.frd << " " << s.frc << " " << s.div_f << " " << s.s_mse << " "
          << s.tlcc << "\n";
    o << "total frd=" << frd << " frc=" << frc << " div_c=" << div_c << " div_f=" << div_f
      << " s_mse=" << s_mse << " tlcc=" << tlcc << "\n";
    return o.str();
}

std::string EvalReport::json() const {
    nlohmann::json j;
    j["frd"] = frd;
    j["frc"] = frc;
    j["div_c"] = div_c;
    j["div_f"] = div_f;
    j["s_mse"] = s_mse;
    j["tlcc"] = tlcc;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : per_session) {
        nlohmann::json r;
        r["id"] = s.id;
        r["frd"] = s.frd;
        r["frc"] = s.frc;
        r["div_f"] = s.div_f;
        r["s_mse"] = s.s_mse;
        r["tlcc"] = s.tlcc;
        rows.push_back(r);
    }
    j["sessions"] = rows;
    return j.dump(2) + "\n";
}

} // namespace reactgen::metrics
