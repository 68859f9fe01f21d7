#include <gtest/gtest.h>

#include <cmath>

#include "fdemle/errors.hpp"
#include "fdemle/models.hpp"
#include "fdemle/ou_oracle.hpp"
#include "fdemle/pathwise.hpp"
#include "fdemle/rates.hpp"

using namespace fdemle;

namespace {

ModelSpec affine_model(int m, int d, std::vector<double> a0, std::vector<double> s0) {
    UserModelDescription u;
    u.m = m;
    u.d = d;
    u.params = {{"c", 0.0, 1.0}};
    u.initial.assign(m, 0.0);
    u.drift_a0 = std::move(a0);
    u.drift_a = {std::vector<double>(static_cast<std::size_t>(m) * m, 0.0)};
    u.diffusion_s0 = std::move(s0);
    return build_user_model(u);
}

GridFunction path_values(const FbmPath& f) { return {f.grid, f.values(0)}; }

}  // namespace

TEST(YoungIntegral, ConstantIntegrandTelescopes) {
    auto fbm = simulate_fbm(TimeGrid(1.0, 256), 1, HurstParam(0.7), 1);
    GridFunction one{fbm.grid, std::vector<double>(257, 1.0)};
    EXPECT_NEAR(young_integral(one, path_values(fbm)), fbm.value(0, 256), 1e-12);
}

TEST(YoungIntegral, ChainRuleWithoutCorrection) {
    auto fine = simulate_fbm(TimeGrid(1.0, 1024), 1, HurstParam(0.7), 2);
    const double b1 = fine.value(0, 1024);
    double previous = INFINITY;
    for (int m = 64; m <= 1024; m *= 2) {
        auto f = fine.coarsen(1024 / m);
        const double err = std::abs(young_integral(path_values(f), path_values(f)) - 0.5 * b1 * b1);
        EXPECT_LT(err, previous) << m;
        previous = err;
    }
    EXPECT_LT(previous, 0.05);
}

TEST(YoungIntegral, DeterministicRiemannSum) {
    TimeGrid g(1.0, 1000);
    auto id = sample_function(g, [](double t) { return t; });
    EXPECT_NEAR(young_integral(id, id), 0.5, 1e-3);
}

TEST(EulerSolve, PureNoiseReproducesDriver) {
    auto model = affine_model(2, 2, {0, 0, 0, 0}, {1, 0, 0, 1});
    auto fbm = simulate_fbm(TimeGrid(1.5, 300), 2, HurstParam(0.66), 3);
    std::vector<double> a{0.4, -1.0};
    std::vector<double> theta{0.5};
    auto y = euler_solve(model, theta, fbm, a);
    for (int k = 0; k <= 300; ++k)
        for (int i = 0; i < 2; ++i) EXPECT_NEAR(y.at(k, i), a[i] + fbm.value(i, k), 1e-12);
}

TEST(EulerSolve, ZeroDynamicsStayPut) {
    auto model = affine_model(1, 1, {0}, {0});
    auto fbm = simulate_fbm(TimeGrid(1.0, 50), 1, HurstParam(0.6), 4);
    std::vector<double> a{2.5}, theta{0.1};
    auto y = euler_solve(model, theta, fbm, a);
    for (double v : y.values) EXPECT_EQ(v, 2.5);
}

TEST(EulerSolve, OuTerminalMatchesFineQuadrature) {
    auto ou = get_model("fou");
    std::vector<double> theta{0.5};
    auto fine = simulate_fbm(TimeGrid(1.0, 2048), 1, HurstParam(0.6), 5);
    auto oracle = ou_oracle(0.5, fine);
    auto y = euler_solve(ou, theta, fine.coarsen(16), ou.initial);
    EXPECT_NEAR(y.terminal()[0], oracle.y, 0.02);
}

TEST(EulerSolve, DivergenceGuardFires) {
    auto model = affine_model(1, 1, {60.0}, {1.0});
    auto fbm = simulate_fbm(TimeGrid(10.0, 1000), 1, HurstParam(0.6), 6);
    std::vector<double> a{1.0}, theta{0.5};
    EXPECT_THROW(euler_solve(model, theta, fbm, a), DivergenceError);
}

TEST(EulerSolve, HolderDiagnosticIsControlledByDriver) {
    auto ou = get_model("fou");
    std::vector<double> theta{0.5};
    for (int p = 0; p < 100; ++p) {
        auto fbm = simulate_fbm(TimeGrid(1.0, 128), 1, HurstParam(0.6), 100 + p);
        auto y = euler_solve(ou, theta, fbm, ou.initial);
        SolutionPath b{fbm.grid, 1, fbm.values(0)};
        const double hy = y.holder_seminorm(0.55), hb = b.holder_seminorm(0.55);
        ASSERT_TRUE(std::isfinite(hy));
        EXPECT_LE(hy, 3.0 * (1.0 + std::pow(hb, 1.0 / 0.55)));
    }
}

TEST(EulerSolve, StrongRateSlope) {
    RateStudyOptions o;
    o.paths = 20;
    o.hurst = 0.75;
    o.seed = 7;
    std::vector<double> theta{0.5};
    auto s = rate_study(get_model("fou"), theta, o);
    EXPECT_LE(s.slope, -0.25);
    for (std::size_t i = 1; i < s.points.size(); ++i) EXPECT_LT(s.points[i].error, s.points[i - 1].error);
}

TEST(EulerSolve, RefinementDecreasesErrorForBuiltins) {
    for (const auto& name : builtin_model_names()) {
        auto model = get_model(name);
        std::vector<double> theta;
        for (const auto& p : model.params) theta.push_back(0.5 * (p.lower + p.upper) * (name == "fou" ? 0.1 : 0.2));
        if (name == "findrift") theta = {0.015, 0.352};
        RateStudyOptions o;
        o.steps = {16, 64, 256};
        o.reference_steps = 1024;
        o.paths = 10;
        o.hurst = 0.7;
        auto s = rate_study(model, theta, o);
        for (std::size_t i = 1; i < s.points.size(); ++i) EXPECT_LT(s.points[i].error, s.points[i - 1].error) << name;
    }
}

TEST(LinearSolve, ZeroCoefficientsKeepInitialValue) {
    auto fbm = simulate_fbm(TimeGrid(1.0, 40), 1, HurstParam(0.6), 8);
    ControlledCoeffs c{1, 1, fbm.grid, std::vector<double>(40, 0.0), std::vector<double>(40, 0.0), {}, {}};
    std::vector<double> a{1.7};
    auto z = linear_solve(c, fbm, a, 10);
    for (int k = 0; k < 10; ++k) EXPECT_EQ(z.at(k, 0), 0.0);
    for (int k = 10; k <= 40; ++k) EXPECT_EQ(z.at(k, 0), 1.7);
}

TEST(LinearSolve, PathwiseExponential) {
    const int fine = 4096;
    const double s = 0.8;
    auto base = simulate_fbm(TimeGrid(1.0, fine), 1, HurstParam(0.7), 9);
    const double want = std::exp(s * base.value(0, fine));
    double previous = INFINITY;
    for (int m : {64, 512, 4096}) {
        auto fbm = base.coarsen(fine / m);
        ControlledCoeffs c{1, 1, fbm.grid, std::vector<double>(m, 0.0), std::vector<double>(m, s), {}, {}};
        std::vector<double> a{1.0};
        auto z = linear_solve(c, fbm, a, 0);
        double product = 1.0;
        for (int k = 0; k < m; ++k) product *= 1.0 + s * fbm.increment(0, k);
        EXPECT_NEAR(z.terminal()[0], product, 1e-12 * std::abs(product));
        const double err = std::abs(z.terminal()[0] / want - 1.0);
        EXPECT_LT(err, previous);
        previous = err;
    }
    double qv = 0.0;
    for (double v : base.increments) qv += v * v;
    EXPECT_LT(previous, s * s * qv);
}

TEST(LinearSolve, OuDerivativeKernel) {
    const int m = 512;
    const double lambda = 0.5;
    auto fbm = simulate_fbm(TimeGrid(2.0, m), 1, HurstParam(0.6), 10);
    ControlledCoeffs c{1, 1, fbm.grid, std::vector<double>(m, -lambda), std::vector<double>(m, 0.0), {}, {}};
    std::vector<double> a{1.0};
    const int r = 128;
    auto z = linear_solve(c, fbm, a, r);
    for (int k = r; k <= m; k += 32)
        EXPECT_NEAR(z.at(k, 0), std::exp(-lambda * (fbm.grid.node(k) - fbm.grid.node(r))), 2e-3);
}

TEST(LinearSolve, ProductRuleOnGrid) {
    const int fine = 4096;
    auto base = simulate_fbm(TimeGrid(1.0, fine), 1, HurstParam(0.7), 11);
    double previous = INFINITY;
    for (int m : {64, 256, 1024}) {
        auto fbm = base.coarsen(fine / m);
        ControlledCoeffs c1{1, 1, fbm.grid, std::vector<double>(m, -0.3), std::vector<double>(m, 0.5), {}, {}};
        ControlledCoeffs c2{1, 1, fbm.grid, std::vector<double>(m, 0.2), std::vector<double>(m, -0.4), {}, {}};
        std::vector<double> a1{1.0}, a2{2.0};
        auto z = linear_solve(c1, fbm, a1, 0);
        auto w = linear_solve(c2, fbm, a2, 0);
        double rhs = z.at(0, 0) * w.at(0, 0);
        for (int k = 0; k < m; ++k)
            rhs += z.at(k, 0) * (w.at(k + 1, 0) - w.at(k, 0)) + w.at(k, 0) * (z.at(k + 1, 0) - z.at(k, 0));
        const double err = std::abs(z.terminal()[0] * w.terminal()[0] - rhs);
        EXPECT_LT(err, previous);
        previous = err;
    }
    EXPECT_LT(previous, 0.05);
}

TEST(StepJacobians, OuPropagator) {
    auto ou = get_model("fou");
    std::vector<double> theta{0.8};
    auto fbm = simulate_fbm(TimeGrid(1.0, 20), 1, HurstParam(0.6), 12);
    auto y = euler_solve(ou, theta, fbm, ou.initial);
    auto j = step_jacobians(ou, theta, fbm, y);
    for (int k = 0; k < 20; ++k) EXPECT_NEAR(j.at(k)[0], 1.0 - 0.8 * 0.05, 1e-15);
}
