#include "doctest.h"

#include <cmath>
#include <limits>

#include "prefmod/errors.hpp"
#include "prefmod/losses.hpp"
#include "prefmod/rng.hpp"

using namespace prefmod;
using namespace prefmod::losses;

namespace {

// Central finite difference of a scalar function.
template <typename F>
double central_diff(F f, double x, double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Loss values for the eight (delta_r, m) scenarios, frozen from independent
// evaluation of -ln sigmoid with exact rational inputs.
constexpr double kRegular[8] = {
    0.048587351573742062, 0.048587351573742062, 0.31326168751822286, 0.31326168751822286,
    1.3132616875182228,   1.3132616875182228,   3.0485873515737421,  3.0485873515737421};
constexpr double kMargin[8] = {
    0.12692801104297249, 0.69314718055994529, 0.69314718055994529, 2.1269280110429727,
    2.1269280110429727,  4.0181499279178094,  4.0181499279178094,  6.0024756851377301};
constexpr double kScaled[8] = {
    0.048587351573742062, 0.14576205472122619, 0.31326168751822286, 0.93978506255466865,
    1.3132616875182228,   3.9397850625546686,  3.0485873515737421,  9.1457620547212262};
constexpr double kRegularAvg = 1.1809245195459823;
constexpr double kMarginAvg = 2.4757317419027696;
constexpr double kScaledAvg = 2.3618490390919646;

}  // namespace

TEST_CASE("softplus and sigmoid basics") {
    CHECK(softplus(0.0) == doctest::Approx(0.69314718055994529).epsilon(1e-15));
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(0.5) == doctest::Approx(0.62245933120185459).epsilon(1e-15));
    // Stable at extremes.
    CHECK(softplus(800.0) == 800.0);
    CHECK(softplus(-800.0) == 0.0);
    CHECK(sigmoid(800.0) == 1.0);
    CHECK(sigmoid(-800.0) == 0.0);
    // softplus(x) - softplus(-x) == x.
    for (double x : {-7.5, -1.0, 0.25, 3.0}) {
        CHECK(softplus(x) - softplus(-x) == doctest::Approx(x).epsilon(1e-14));
    }
}

TEST_CASE("pairwise loss values on the scenario grid") {
    const auto& scenarios = table5_scenarios();
    REQUIRE(scenarios.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        const auto [dr, m] = scenarios[i];
        CHECK(loss_regular_bt(dr).loss == doctest::Approx(kRegular[i]).epsilon(1e-14));
        CHECK(loss_margin_bt(dr, m).loss == doctest::Approx(kMargin[i]).epsilon(1e-14));
        CHECK(loss_scaled_bt(dr, m).loss == doctest::Approx(kScaled[i]).epsilon(1e-14));
    }
}

TEST_CASE("loss grid and averages") {
    const Table5 t = table5();
    REQUIRE(t.cells.rows() == 3);
    REQUIRE(t.cells.cols() == 8);
    for (Eigen::Index j = 0; j < 8; ++j) {
        CHECK(t.cells(0, j) == doctest::Approx(kRegular[j]).epsilon(1e-14));
        CHECK(t.cells(1, j) == doctest::Approx(kMargin[j]).epsilon(1e-14));
        CHECK(t.cells(2, j) == doctest::Approx(kScaled[j]).epsilon(1e-14));
    }
    CHECK(t.averages(0) == doctest::Approx(kRegularAvg).epsilon(1e-14));
    CHECK(t.averages(1) == doctest::Approx(kMarginAvg).epsilon(1e-14));
    CHECK(t.averages(2) == doctest::Approx(kScaledAvg).epsilon(1e-14));
}

TEST_CASE("rendered grid matches the golden layout") {
    const std::string expected =
        "variant  (+3,1) (+3,3) (+1,1) (+1,3) (-1,1) (-1,3) (-3,1) (-3,3)     avg\n"
        "Regular  0.0486  0.0486  0.3133  0.3133  1.3133  1.3133  3.0486  3.0486  1.1809\n"
        "Margin   0.1269  0.6931  0.6931  2.1269  2.1269  4.0181  4.0181  6.0025  2.4757\n"
        "Scaled   0.0486  0.1458  0.3133  0.9398  1.3133  3.9398  3.0486  9.1458  2.3618\n";
    CHECK(render_table5(table5()) == expected);
}

TEST_CASE("margin at zero and scaled at one collapse to the regular loss") {
    for (int i = -400; i <= 400; ++i) {
        const double d = i / 100.0;
        const LossGrad reg = loss_regular_bt(d);
        const LossGrad mar = loss_margin_bt(d, 0.0);
        const LossGrad sca = loss_scaled_bt(d, 1.0);
        // Bitwise: the same expressions evaluate with m folded away.
        CHECK(mar.loss == reg.loss);
        CHECK(mar.dloss_ddelta == reg.dloss_ddelta);
        CHECK(sca.loss == reg.loss);
        CHECK(sca.dloss_ddelta == reg.dloss_ddelta);
    }
}

TEST_CASE("analytic gradients match finite differences") {
    Rng rng(20240817);
    for (int trial = 0; trial < 150; ++trial) {
        const double d = rng.uniform(-4.0, 4.0);
        const double m = 1.0 + rng.uniform_int(0, 2);
        const double g_reg = central_diff([](double x) { return loss_regular_bt(x).loss; }, d);
        const double g_mar =
            central_diff([m](double x) { return loss_margin_bt(x, m).loss; }, d);
        const double g_sca =
            central_diff([m](double x) { return loss_scaled_bt(x, m).loss; }, d);
        const auto rel = [](double a, double b) {
            return std::abs(a - b) / std::max(std::abs(b), 1e-2);
        };
        CHECK(rel(loss_regular_bt(d).dloss_ddelta, g_reg) < 1e-5);
        CHECK(rel(loss_margin_bt(d, m).dloss_ddelta, g_mar) < 1e-5);
        CHECK(rel(loss_scaled_bt(d, m).dloss_ddelta, g_sca) < 1e-5);
    }
}

TEST_CASE("gradient sign and saturation") {
    // dloss/ddelta = -sigmoid(-delta): always negative, approaching 0 for
    // confident wins and -1 for confident losses.
    CHECK(loss_regular_bt(50.0).dloss_ddelta > -1e-20);
    CHECK(loss_regular_bt(-50.0).dloss_ddelta == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(loss_scaled_bt(-50.0, 3.0).dloss_ddelta == doctest::Approx(-3.0).epsilon(1e-15));
}

TEST_CASE("mse loss and gradient") {
    Eigen::VectorXd pred(2), target(2);
    pred << 1.0, 2.0;
    target << 0.5, 4.0;
    const MseLossGrad got = loss_regression_mse(pred, target);
    CHECK(got.loss == doctest::Approx(2.125).epsilon(1e-15));
    CHECK(got.dloss_dpred(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(got.dloss_dpred(1) == doctest::Approx(-2.0).epsilon(1e-15));

    // Finite differences, coordinate-wise.
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd p(5), t(5);
        for (int i = 0; i < 5; ++i) {
            p(i) = rng.uniform(-2.0, 2.0);
            t(i) = rng.uniform(-2.0, 2.0);
        }
        const Eigen::VectorXd grad = loss_regression_mse(p, t).dloss_dpred;
        for (int i = 0; i < 5; ++i) {
            const double fd = central_diff(
                [&](double x) {
                    Eigen::VectorXd q = p;
                    q(i) = x;
                    return loss_regression_mse(q, t).loss;
                },
                p(i));
            CHECK(std::abs(grad(i) - fd) / std::max(std::abs(fd), 1e-2) < 1e-5);
        }
    }
}

TEST_CASE("loss input validation") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(loss_regular_bt(nan), NumericalError);
    CHECK_THROWS_AS(loss_margin_bt(1.0, nan), NumericalError);
    CHECK_THROWS_AS(loss_margin_bt(1.0, -0.5), DataError);
    CHECK_THROWS_AS(loss_scaled_bt(1.0, -1.0), DataError);
    Eigen::VectorXd a(2), b(3);
    a << 1, 2;
    b << 1, 2, 3;
    CHECK_THROWS_AS(loss_regression_mse(a, b), DataError);
    CHECK_THROWS_AS(loss_regression_mse(Eigen::VectorXd(), Eigen::VectorXd()), DataError);
    Eigen::VectorXd c(2);
    c << nan, 0.0;
    CHECK_THROWS_AS(loss_regression_mse(c, a), NumericalError);
}
