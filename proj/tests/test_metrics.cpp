#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "reactgen/metrics.hpp"
#include "reactgen/rng.hpp"

using namespace reactgen;

namespace {

MatD rand_mat(Rng& r, Eigen::Index rows, Eigen::Index cols) {
    MatD m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.normal();
    return m;
}

} // namespace

TEST_CASE("frame distance: mean per-frame euclidean, minimum over neighbors") {
    const MatD pred = MatD::Zero(5, 4);
    // unit offset in one coordinate per frame: distance 1 each frame
    MatD near = MatD::Zero(5, 4);
    near.col(0).setOnes();
    MatD far = MatD::Constant(5, 4, 3.0); // distance sqrt(4*9) = 6
    CHECK(metrics::frd(pred, {far, near}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(metrics::frd(pred, {far}) == doctest::Approx(6.0).epsilon(1e-15));

    // hand-computed mixed case: frame distances 0 and 5 -> mean 2.5
    MatD mix = MatD::Zero(2, 2);
    mix(1, 0) = 3.0;
    mix(1, 1) = 4.0;
    CHECK(metrics::frd(pred.topRows(2).leftCols(2), {mix}) == doctest::Approx(2.5).epsilon(1e-15));

    CHECK_THROWS_AS(metrics::frd(pred, {}), DataError);
    CHECK_THROWS_AS(metrics::frd(pred, {MatD::Zero(4, 4)}), DataError);
}

TEST_CASE("frame correlation: affine matches score 1, constants score 0") {
    Rng r(41);
    const MatD base = rand_mat(r, 20, 3);
    // per-dimension affine transform preserves correlation exactly
    MatD aff = base;
    for (Eigen::Index j = 0; j < 3; ++j)
        aff.col(j) = (2.0 + static_cast<double>(j)) * base.col(j).array() + 7.0;
    CHECK(metrics::frc(base, {aff}) == doctest::Approx(1.0).epsilon(1e-12));

    // anti-correlated neighbor loses to the correlated one (max over neighbors)
    MatD anti = -base;
    CHECK(metrics::frc(base, {anti, aff}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(metrics::frc(base, {anti}) == doctest::Approx(-1.0).epsilon(1e-12));

    // constant dimensions contribute exactly zero
    MatD flat = MatD::Constant(20, 3, 0.25);
    CHECK(metrics::frc(base, {flat}) == 0.0);
    CHECK(metrics::frc(flat, {base}) == 0.0);

    // one live dim + one dead dim: mean of (1, 0)
    MatD half(20, 2), halfn(20, 2);
    half.col(0) = base.col(0);
    half.col(1).setZero();
    halfn.col(0) = base.col(0);
    halfn.col(1).setOnes();
    CHECK(metrics::frc(half, {halfn}) == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(metrics::frc(base, {}), DataError);
}

TEST_CASE("cross-session diversity: mean pairwise squared difference") {
    MatD a = MatD::Zero(3, 2);
    MatD b = MatD::Constant(3, 2, 2.0); // mean squared diff 4
    MatD c = MatD::Constant(3, 2, 3.0); // vs a: 9, vs b: 1
    CHECK(metrics::div_c({a, b}) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(metrics::div_c({a, b, c}) == doctest::Approx((4.0 + 9.0 + 1.0) / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(metrics::div_c({a}), DataError);
    CHECK_THROWS_AS(metrics::div_c({a, MatD::Zero(2, 2)}), DataError);
}

TEST_CASE("within-sequence diversity: population variance over time") {
    // alternating +-1 has mean 0 and population variance exactly 1
    MatD alt(4, 2);
    alt << 1, -1, -1, 1, 1, -1, -1, 1;
    CHECK(metrics::div_f(alt) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(metrics::div_f(MatD::Constant(6, 3, 9.0)) == 0.0);
    // single ramp 0,1,2: mean 1, population variance 2/3
    MatD ramp(3, 1);
    ramp << 0, 1, 2;
    CHECK(metrics::div_f(ramp) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("sample variation: mean pairwise MSE across samples") {
    MatD a = MatD::Zero(3, 2), b = MatD::Constant(3, 2, 2.0);
    CHECK(metrics::s_mse({a, b}) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(metrics::s_mse({a, a, a}) == 0.0);
    CHECK_THROWS_AS(metrics::s_mse({a}), DataError);
}

TEST_CASE("time-lagged correlation recovers an injected shift") {
    Rng r(42);
    const int T = 60;
    Eigen::VectorXd sig(T + 10);
    for (int t = 0; t < T + 10; ++t) sig(t) = r.normal();

    for (int shift = 0; shift <= 5; ++shift) {
        MatD spk(T, 2), lst(T, 2);
        for (int t = 0; t < T; ++t) {
            spk(t, 0) = sig(t);
            spk(t, 1) = sig(t); // mean-pooling across dims keeps the signal
            lst(t, 0) = (t >= shift) ? sig(t - shift) : r.normal();
            lst(t, 1) = lst(t, 0);
        }
        CHECK(metrics::tlcc(spk, lst, 8) == shift);
    }
}

TEST_CASE("time-lagged correlation edge behavior") {
    Rng r(43);
    MatD spk = rand_mat(r, 30, 2);

    SUBCASE("identical signals tie at zero") { CHECK(metrics::tlcc(spk, spk, 5) == 0); }
    SUBCASE("constant listener: all correlations zero, tie resolves to zero") {
        CHECK(metrics::tlcc(spk, MatD::Constant(30, 2, 1.0), 5) == 0);
    }
    SUBCASE("max_lag bounds") {
        CHECK_THROWS_AS(metrics::tlcc(spk, spk, -1), ConfigError);
        CHECK_THROWS_AS(metrics::tlcc(spk, spk, 30), ConfigError);
        CHECK_NOTHROW(metrics::tlcc(spk, spk, 29));
    }
    SUBCASE("length mismatch is a data error") {
        CHECK_THROWS_AS(metrics::tlcc(spk, rand_mat(r, 29, 2), 5), DataError);
    }
    SUBCASE("negative shift (listener leads) reports the magnitude") {
        const int T = 60, shift = 4;
        Rng r2(44);
        Eigen::VectorXd sig(T + 10);
        for (int t = 0; t < T + 10; ++t) sig(t) = r2.normal();
        MatD s(T, 1), l(T, 1);
        for (int t = 0; t < T; ++t) {
            l(t, 0) = sig(t);
            s(t, 0) = (t >= shift) ? sig(t - shift) : r2.normal();
        }
        CHECK(metrics::tlcc(s, l, 8) == shift);
    }
}

TEST_CASE("report serializations carry all totals") {
    metrics::EvalReport rep;
    rep.frd = 1.5;
    rep.frc = 0.25;
    rep.div_c = 2.0;
    rep.div_f = 0.125;
    rep.s_mse = 0.0;
    rep.tlcc = 3.0;
    rep.per_session.push_back({"s1", 1.5, 0.25, 0.125, 0.0, 3.0});
    const std::string txt = rep.text();
    CHECK(txt.find("frd=1.5") != std::string::npos);
    CHECK(txt.find("tlcc=3") != std::string::npos);
    CHECK(txt.find("s1 ") != std::string::npos);
    const std::string js = rep.json();
    CHECK(js.find("\"s_mse\"") != std::string::npos);
    CHECK(js.find("\"div_c\"") != std::string::npos);
}
