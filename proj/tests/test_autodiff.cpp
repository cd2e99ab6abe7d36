#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "reactgen/autodiff.hpp"
#include "reactgen/rng.hpp"

#include <cmath>
#include <functional>
#include <vector>

#include "test_util.hpp"

using namespace reactgen;
using namespace reactgen::ad;
using testutil::check_grads;

using M = Mat<double>;

namespace {

M random_mat(Rng& r, Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
    return testutil::random_mat<double>(r, rows, cols, sd);
}

} // namespace

TEST_CASE("fixed-order product kernels match a reference triple loop") {
    Rng r(3);
    const M a = random_mat(r, 4, 5), b = random_mat(r, 5, 3);
    M ref = M::Zero(4, 3);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j)
            for (int q = 0; q < 5; ++q) ref(i, j) += a(i, q) * b(q, j);
    CHECK((gemm(a, b) - ref).cwiseAbs().maxCoeff() < 1e-12);
    const M bt = b.transpose();
    CHECK((gemm_nt(a, bt) - ref).cwiseAbs().maxCoeff() < 1e-12);
    M acc = M::Zero(5, 3);
    gemm_tn_acc(acc, a, gemm(a, b));
    M ref2 = a.transpose() * (a * b);
    CHECK((acc - ref2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("product of a prefix equals prefix of the product, bitwise") {
    // The property the kernels exist for: appending rows to the left operand
    // leaves earlier output rows bit-identical.
    Rng r(17);
    const M a = random_mat(r, 9, 6), b = random_mat(r, 6, 4);
    const M full = gemm(a, b);
    for (int n = 1; n <= 9; ++n) {
        const M part = gemm(M(a.topRows(n)), b);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 4; ++j) CHECK(part(i, j) == full(i, j));
    }
    const M full_nt = gemm_nt(a, M(random_mat(r, 7, 6)));
    (void)full_nt;
}

TEST_CASE("add sub mul scale gradients") {
    Rng r(5);
    check_grads({random_mat(r, 3, 4), random_mat(r, 3, 4)},
                [](Tape<double>& t, std::vector<Var<double>>& v) {
                    (void)t;
                    return sum_all(mul(add(v[0], v[1]), sub(v[0], scale(v[1], 0.7))));
                });
}

TEST_CASE("matmul gradients") {
    Rng r(6);
    check_grads({random_mat(r, 3, 4), random_mat(r, 4, 5)},
                [](Tape<double>&, std::vector<Var<double>>& v) {
                    return sum_all(vsquare(matmul(v[0], v[1])));
                });
}

TEST_CASE("matmul_nt gradients") {
    Rng r(7);
    check_grads({random_mat(r, 3, 4), random_mat(r, 5, 4)},
                [](Tape<double>&, std::vector<Var<double>>& v) {
                    return sum_all(vsquare(matmul_nt(v[0], v[1])));
                });
}

TEST_CASE("add_rowvec gradients") {
    Rng r(8);
    check_grads({random_mat(r, 4, 3), random_mat(r, 1, 3)},
                [](Tape<double>&, std::vector<Var<double>>& v) {
                    return sum_all(vsquare(add_rowvec(v[0], v[1])));
                });
}

TEST_CASE("elementwise nonlinearity gradients") {
    Rng r(9);
    check_grads({random_mat(r, 3, 3)}, [](Tape<double>&, std::vector<Var<double>>& v) {
        return sum_all(vexp(scale(v[0], 0.3)));
    });
    M pos = (random_mat(r, 3, 3).array().abs() + 0.5).matrix();
    check_grads({pos}, [](Tape<double>&, std::vector<Var<double>>& v) {
        return sum_all(vlog(v[0]));
    });
    check_grads({random_mat(r, 3, 3)}, [](Tape<double>&, std::vector<Var<double>>& v) {
        return sum_all(vsquare(v[0]));
    });
    check_grads({random_mat(r, 4, 4)}, [](Tape<double>&, std::vector<Var<double>>& v) {
        return sum_all(gelu(v[0]));
    });
}

TEST_CASE("vabs gradient away from zero") {
    Rng r(10);
    M x = random_mat(r, 3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (std::abs(x(i, j)) < 0.1) x(i, j) = 0.5;
    check_grads({x}, [](Tape<double>&, std::vector<Var<double>>& v) {
        return sum_all(vabs(v[0]));
    });
}

TEST_CASE("clamp passes gradient only strictly inside the band") {
    Tape<double> t;
    M x(1, 3);
    x << -2.0, 0.25, 3.0;
    auto v = t.put(x, true);
    auto out = sum_all(clamp(v, -1.0, 1.0));
    t.backward(out);
    const M g = t.grad_or_zero(v);
    CHECK(g(0, 0) == 0.0);
    CHECK(g(0, 1) == 1.0);
    CHECK(g(0, 2) == 0.0);
}

TEST_CASE("softmax rows sum to one and masked entries are exactly zero") {
    Tape<double> t;
    Rng r(11);
    auto lg = t.put(random_mat(r, 3, 4), false);
    M bias = M::Zero(3, 4);
    bias(0, 2) = neg_inf<double>();
    bias(1, 0) = neg_inf<double>();
    bias(1, 1) = neg_inf<double>();
    auto y = softmax_bias_rows(lg, bias);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(y.val().row(i).sum() - 1.0) < 1e-12);
    CHECK(y.val()(0, 2) == 0.0);
    CHECK(y.val()(1, 0) == 0.0);
    CHECK(y.val()(1, 1) == 0.0);
}

TEST_CASE("softmax with all-masked row throws") {
    Tape<double> t;
    auto lg = t.put(M::Zero(2, 3), false);
    M bias = M::Zero(2, 3);
    bias.row(1).setConstant(neg_inf<double>());
    CHECK_THROWS_AS((void)softmax_bias_rows(lg, bias), std::logic_error);
}

TEST_CASE("softmax gradients with a partial mask") {
    Rng r(12);
    M bias = M::Zero(3, 5);
    bias(0, 4) = neg_inf<double>();
    bias(2, 0) = neg_inf<double>();
    check_grads({random_mat(r, 3, 5)}, [bias](Tape<double>&, std::vector<Var<double>>& v) {
        auto y = softmax_bias_rows(v[0], bias);
        return sum_all(vsquare(y));
    });
}

TEST_CASE("softmax matches exp-normalize on finite bias") {
    Tape<double> t;
    M lv(1, 3);
    lv << 0.1, 0.7, -0.4;
    M bias(1, 3);
    bias << 0.0, -1.0, 2.0;
    auto y = softmax_bias_rows(t.put(lv, false), bias);
    Eigen::Array3d z = (lv.row(0).array() + bias.row(0).array()).exp();
    Eigen::Array3d ref = z / z.sum();
    for (int j = 0; j < 3; ++j) CHECK(std::abs(y.val()(0, j) - ref(j)) < 1e-12);
}

TEST_CASE("layer norm output has zero mean unit variance before affine") {
    Tape<double> t;
    Rng r(13);
    const int C = 8;
    auto x = t.put(random_mat(r, 4, C), false);
    auto gamma = t.put(M::Ones(1, C), false);
    auto beta = t.put(M::Zero(1, C), false);
    auto y = layer_norm_rows(x, gamma, beta);
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(y.val().row(i).mean()) < 1e-10);
        const double var = (y.val().row(i).array() - y.val().row(i).mean()).square().mean();
        CHECK(std::abs(var - 1.0) < 1e-3); // eps shifts it slightly below one
    }
}

TEST_CASE("layer norm gradients") {
    Rng r(14);
    check_grads({random_mat(r, 3, 6), random_mat(r, 1, 6, 0.3), random_mat(r, 1, 6, 0.3)},
                [](Tape<double>&, std::vector<Var<double>>& v) {
                    auto g = add_scalar(v[1], 1.0);
                    return sum_all(vsquare(layer_norm_rows(v[0], g, v[2])));
                },
                1e-6, 1e-5);
}

TEST_CASE("slice and concat round trip with gradients") {
    Rng r(15);
    check_grads({random_mat(r, 6, 4)}, [](Tape<double>&, std::vector<Var<double>>& v) {
        auto top = slice_rows(v[0], 0, 2);
        auto rest = slice_rows(v[0], 2, 4);
        auto back = concat_rows<double>({top, rest});
        auto left = slice_cols(back, 0, 1);
        auto right = slice_cols(back, 1, 3);
        auto whole = concat_cols<double>({left, right});
        return sum_all(vsquare(whole));
    });
}

TEST_CASE("smooth l1 values at the reference points") {
    Tape<double> t;
    M a(1, 1), b(1, 1);
    a << 0.5;
    b << 0.0;
    CHECK(smooth_l1_mean(t.put(a, false), t.put(b, false)).scalar() == doctest::Approx(0.125).epsilon(1e-12));
    a << 2.0;
    CHECK(smooth_l1_mean(t.put(a, false), t.put(b, false)).scalar() == doctest::Approx(1.5).epsilon(1e-12));
    a << -2.0;
    CHECK(smooth_l1_mean(t.put(a, false), t.put(b, false)).scalar() == doctest::Approx(1.5).epsilon(1e-12));
    a << 1.0;
    CHECK(smooth_l1_mean(t.put(a, false), t.put(b, false)).scalar() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("smooth l1 gradients in both regimes") {
    Rng r(16);
    M a = random_mat(r, 4, 4, 2.0); // spans |e| < 1 and |e| > 1
    M b = random_mat(r, 4, 4, 0.2);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (std::abs(std::abs(a(i, j) - b(i, j)) - 1.0) < 0.05) a(i, j) += 0.2;
    check_grads({a, b}, [](Tape<double>&, std::vector<Var<double>>& v) {
        return smooth_l1_mean(v[0], v[1]);
    });
}

TEST_CASE("gradient accumulates across reuse of one node") {
    Tape<double> t;
    M x(1, 1);
    x << 3.0;
    auto v = t.put(x, true);
    auto y = add(mul(v, v), v); // x^2 + x, d/dx = 2x + 1 = 7
    t.backward(y);
    CHECK(t.grad_or_zero(v)(0, 0) == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("no-grad tape skips backward bookkeeping") {
    Tape<double> t(false);
    M x(2, 2);
    x << 1, 2, 3, 4;
    auto v = t.put(x, true); // request ignored on a no-grad tape
    auto y = sum_all(vsquare(v));
    CHECK(y.scalar() == doctest::Approx(30.0));
    CHECK_THROWS_AS(t.backward(y), std::logic_error);
}
