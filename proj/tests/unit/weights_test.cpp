#include <gtest/gtest.h>

#include <cmath>

#include "fdemle/chaos.hpp"
#include "fdemle/models.hpp"
#include "fdemle/ou_oracle.hpp"
#include "fdemle/random.hpp"
#include "fdemle/weights.hpp"
#include "support.hpp"

using namespace fdemle;

namespace {

ModelSpec unit_noise(double horizon_shift = 0.0) {
    UserModelDescription u;
    u.params = {{"c", 0.0, 1.0}};
    u.initial = {horizon_shift};
    u.drift_a0 = {0.0};
    u.drift_a = {{0.0}};
    u.diffusion_s0 = {1.0};
    return build_user_model(u);
}

ModelSpec sine_unit_noise() {
    UserModelDescription u;
    u.name = "sine-unit";
    u.params = {{"theta", -2.0, 2.0}};
    u.initial = {0.3};
    u.drift_family = "sine";
    u.diffusion_s0 = {1.0};
    return build_user_model(u);
}

// Draws X ~ N(0, G) and averages the chaos polynomial.
test::Moments polynomial_mean(const ChaosPolynomial& poly, const std::vector<Dual>& gram, int m, int draws,
                              std::uint64_t seed) {
    Eigen::MatrixXd g(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) g(a, b) = gram[a * m + b].v;
    Eigen::MatrixXd l = g.llt().matrixL();
    NormalStream ns(seed);
    std::vector<double> out(draws), z(m), x(m);
    for (int s = 0; s < draws; ++s) {
        ns.fill(z);
        for (int a = 0; a < m; ++a) {
            x[a] = 0.0;
            for (int b = 0; b <= a; ++b) x[a] += l(a, b) * z[b];
        }
        out[s] = poly.evaluate(std::span<const double>(x));
    }
    return test::moments(out);
}

}  // namespace

TEST(HWeight, UnitNoiseGivesHermitePolynomials) {
    auto model = unit_noise();
    std::vector<double> theta{0.5};
    for (std::uint64_t seed : {1, 2, 3}) {
        auto fbm = simulate_fbm(TimeGrid(1.0, 64), 1, HurstParam(0.7), seed);
        auto b = make_bundle(model, theta, fbm, model.initial);
        const double b1 = fbm.value(0, 64);
        EXPECT_NEAR(h_weight({1}, b).value, b1, 1e-10);
        EXPECT_NEAR(h_weight({1, 1}, b).value, b1 * b1 - 1.0, 1e-10);
        EXPECT_NEAR(h_weight({1, 1, 1}, b).value, b1 * b1 * b1 - 3.0 * b1, 1e-9);
    }
}

TEST(HWeight, FirstOrderIsYoungSumOfQ) {
    auto model = get_model("fou");
    std::vector<double> theta{0.9};
    auto fbm = simulate_fbm(TimeGrid(1.5, 100), 1, HurstParam(0.6), 4);
    auto y = euler_solve(model, theta, fbm, model.initial);
    auto d1 = derivative_first(model, theta, fbm, y);
    auto path = malliavin_matrix_path(d1, HurstParam(0.6));
    inverse_matrix_path(path, model, theta, fbm, y, d1);
    double want = 0.0;
    for (int c = 0; c < 100; ++c) want += path.eta[100](0, 0) * d1(0, 0, c, 100) * fbm.increment(0, c);
    auto b = make_bundle(model, theta, fbm, model.initial);
    EXPECT_NEAR(h_weight({1}, b).value, want, 1e-10 * (1.0 + std::abs(want)));
}

TEST(HWeight, OuMatchesClosedForms) {
    const double lambda = 0.5;
    auto model = get_model("fou");
    std::vector<double> theta{lambda};
    for (std::uint64_t seed : {5, 6}) {
        auto fine = simulate_fbm(TimeGrid(1.0, 4096), 1, HurstParam(0.6), seed);
        auto o = ou_oracle(lambda, fine);
        auto fbm = fine.coarsen(8);
        auto b = make_bundle(model, theta, fbm, model.initial);
        EXPECT_NEAR(h_weight({1}, b).value, o.h1, 0.02 * (1.0 + std::abs(o.h1)));
        EXPECT_NEAR(h_weight({1, 1}, b).value, o.h11, 0.02 * (1.0 + std::abs(o.h11)));
        auto db = make_dual_bundle(model, theta, fbm, model.initial);
        EXPECT_NEAR(grad_h_weight({1, 1}, db, 1)[0], o.dh11, 0.03 * (1.0 + std::abs(o.dh11)));
    }
}

TEST(HWeight, DualGradientMatchesCommonRandomNumberDifference) {
    auto model = get_model("linear2d");
    std::vector<double> theta{2.0, 4.0};
    auto fbm = simulate_fbm(TimeGrid(0.05, 20), 2, HurstParam(0.6), 7);
    auto db = make_dual_bundle(model, theta, fbm, model.initial);
    const std::vector<int> tuple{1, 2, 1, 2};
    auto g = grad_h_weight(tuple, db, 2);
    const double eps = 1e-5;
    for (int l = 0; l < 2; ++l) {
        auto tp = theta, tm = theta;
        tp[l] += eps;
        tm[l] -= eps;
        const double fd = (h_weight(tuple, make_bundle(model, tp, fbm, model.initial)).value -
                           h_weight(tuple, make_bundle(model, tm, fbm, model.initial)).value) /
                          (2 * eps);
        EXPECT_NEAR(g[l], fd, 1e-5 * (1.0 + std::abs(fd))) << l;
    }
}

TEST(HWeight, GradientVanishesWithoutParameterDependence) {
    auto model = unit_noise();
    std::vector<double> theta{0.3};
    auto fbm = simulate_fbm(TimeGrid(1.0, 32), 1, HurstParam(0.6), 8);
    auto db = make_dual_bundle(model, theta, fbm, model.initial);
    EXPECT_EQ(grad_h_weight({1, 1}, db, 1)[0], 0.0);
}

TEST(HWeight, RandomQLimitedToDepthOne) {
    auto model = sine_unit_noise();
    std::vector<double> theta{1.0};
    auto fbm = simulate_fbm(TimeGrid(1.0, 32), 1, HurstParam(0.7), 9);
    auto b = make_bundle(model, theta, fbm, model.initial);
    EXPECT_FALSE(b.q_deterministic);
    EXPECT_TRUE(std::isfinite(h_weight({1}, b).value));
    EXPECT_THROW(h_weight({1, 1}, b), CapabilityError);
}

TEST(HWeight, RejectsBadTuples) {
    auto model = get_model("fou");
    std::vector<double> theta{0.5};
    auto fbm = simulate_fbm(TimeGrid(1.0, 16), 1, HurstParam(0.6), 10);
    auto b = make_bundle(model, theta, fbm, model.initial);
    EXPECT_THROW(h_weight({}, b), ArgumentError);
    EXPECT_THROW(h_weight({2}, b), ArgumentError);
}

TEST(ChaosWeight, AgreesWithGenericRecursionPathwise) {
    auto model = get_model("linear2d");
    std::vector<double> theta{2.0, 4.0};
    const TimeGrid grid(0.05, 25);
    auto k = linear_kernel(model, theta, grid, HurstParam(0.6));
    for (std::uint64_t seed : {11, 12, 13}) {
        auto fbm = simulate_fbm(grid, 2, HurstParam(0.6), seed);
        auto b = make_bundle(model, theta, fbm, model.initial);
        for (const std::vector<int>& t : {std::vector<int>{1}, {2}, {1, 2}, {2, 1}, {1, 1}, {1, 2, 1, 2}}) {
            const double generic = h_weight(t, b).value;
            const double poly = chaos_weight(t, k.gram, 2).evaluate(std::span<const double>(b.young));
            EXPECT_NEAR(poly, generic, 1e-8 * (1.0 + std::abs(generic)));
        }
    }
}

TEST(ChaosWeight, WeightsHaveZeroMean) {
    struct Case {
        std::string model;
        std::vector<double> theta;
        double horizon;
    };
    for (const auto& c : {Case{"fou", {0.5}, 1.0}, Case{"linear2d", {2.0, 4.0}, 0.05}}) {
        auto model = get_model(c.model);
        auto k = linear_kernel(model, c.theta, TimeGrid(c.horizon, 64), HurstParam(0.6));
        std::vector<std::vector<int>> tuples{{1}, {1, 1}, {1, 1, 1}};
        if (model.m == 2) tuples = {{1}, {2}, {1, 2}, {2, 1}, {2, 2}, {1, 2, 1, 2}};
        for (const auto& t : tuples) {
            auto poly = chaos_weight(t, k.gram, model.m);
            auto mom = polynomial_mean(poly, k.gram, model.m, 100000, 14);
            EXPECT_NEAR(mom.mean, 0.0, 4.0 * mom.se) << c.model << " tuple size " << t.size();
        }
    }
}

TEST(ChaosWeight, HermiteCoefficients) {
    std::vector<Dual> gram{Dual(1.0)};
    auto p = chaos_weight({1, 1, 1}, gram, 1);
    EXPECT_EQ(p.degree(), 3);
    EXPECT_DOUBLE_EQ(p.coefficient({3}).v, 1.0);
    EXPECT_DOUBLE_EQ(p.coefficient({1}).v, -3.0);
    EXPECT_DOUBLE_EQ(p.coefficient({2}).v, 0.0);
}
