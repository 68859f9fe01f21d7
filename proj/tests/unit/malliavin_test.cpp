#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "fdemle/errors.hpp"
#include "fdemle/malliavin.hpp"
#include "fdemle/models.hpp"
#include "fdemle/ou_oracle.hpp"

using namespace fdemle;

namespace {

ModelSpec trivial_model() {
    UserModelDescription u;
    u.params = {{"c", 0.0, 1.0}};
    u.initial = {0.0};
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

struct OuRun {
    ModelSpec model = get_model("fou");
    std::vector<double> theta;
    FbmPath fbm;
    SolutionPath y;
    FirstDerivative d1;
    OuRun(double lambda, int steps, std::uint64_t seed, double horizon = 1.0)
        : theta{lambda},
          fbm(simulate_fbm(TimeGrid(horizon, steps), 1, HurstParam(0.6), seed)),
          y(euler_solve(model, theta, fbm, model.initial)),
          d1(derivative_first(model, theta, fbm, y)) {}
};

}  // namespace

TEST(DerivativeFirst, AdditiveNoiseActivatesWithColumn) {
    auto m = get_model("linear2d");
    std::vector<double> theta{2.0, 4.0};
    auto fbm = simulate_fbm(TimeGrid(0.5, 40), 2, HurstParam(0.6), 1);
    auto y = euler_solve(m, theta, fbm, m.initial);
    auto d1 = derivative_first(m, theta, fbm, y);
    for (int c : {0, 7, 39})
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 2; ++i) EXPECT_DOUBLE_EQ(d1(i, j, c, c + 1), i == j ? 4.0 : 0.0);
}

TEST(DerivativeFirst, TriangleSupport) {
    auto m = get_model("sine1d");
    std::vector<double> theta{0.8, 1.2};
    auto fbm = simulate_fbm(TimeGrid(1.0, 30), 1, HurstParam(0.7), 2);
    auto y = euler_solve(m, theta, fbm, m.initial);
    auto d1 = derivative_first(m, theta, fbm, y);
    for (int c = 0; c < 30; ++c)
        for (int k = 0; k <= c; ++k) EXPECT_EQ(d1(0, 0, c, k), 0.0);
}

TEST(DerivativeFirst, OuExponentialKernel) {
    OuRun r(0.5, 512, 3);
    const double dt = r.fbm.grid.dt();
    for (int c : {0, 100, 300, 511}) {
        const double lag = 1.0 - (c + 1) * dt;
        EXPECT_NEAR(r.d1(0, 0, c, 512), std::exp(-0.5 * lag), 1e-3);
    }
}

TEST(DerivativeSecond, VanishesForLinearAdditive) {
    auto m = get_model("linear2d");
    std::vector<double> theta{2.0, 4.0};
    auto fbm = simulate_fbm(TimeGrid(0.5, 24), 2, HurstParam(0.6), 4);
    auto y = euler_solve(m, theta, fbm, m.initial);
    auto d1 = derivative_first(m, theta, fbm, y);
    auto d2 = derivative_second(m, theta, fbm, y, d1, 24);
    for (double v : d2.data) EXPECT_EQ(v, 0.0);
}

TEST(DerivativeSecond, SymmetricAndSelfConvergent) {
    auto m = sine_unit_noise();
    std::vector<double> theta{1.0};
    const int coarse = 32, factor = 16;
    auto fine_fbm = simulate_fbm(TimeGrid(1.0, coarse * factor), 1, HurstParam(0.7), 5);
    auto fbm = fine_fbm.coarsen(factor);
    auto y = euler_solve(m, theta, fbm, m.initial);
    auto d1 = derivative_first(m, theta, fbm, y);
    auto d2 = derivative_second(m, theta, fbm, y, d1, coarse);
    for (int a = 0; a < coarse; ++a)
        for (int b = 0; b < coarse; ++b) EXPECT_DOUBLE_EQ(d2(0, 0, a, 0, b), d2(0, 0, b, 0, a));

    auto yf = euler_solve(m, theta, fine_fbm, m.initial);
    auto d1f = derivative_first(m, theta, fine_fbm, yf);
    auto d2f = derivative_second(m, theta, fine_fbm, yf, d1f, coarse * factor);
    double worst = 0.0, scale = 0.0;
    for (int a = 0; a < coarse; a += 3)
        for (int b = 0; b < coarse; b += 5) {
            const double c = d2(0, 0, a, 0, b), f = d2f(0, 0, (a + 1) * factor - 1, 0, (b + 1) * factor - 1);
            worst = std::max(worst, std::abs(c - f));
            scale = std::max(scale, std::abs(f));
        }
    EXPECT_GT(scale, 0.0);
    EXPECT_LT(worst, 0.1 * scale);
}

TEST(ThetaGradient, VanishesWithoutParameterDependence) {
    auto m = trivial_model();
    std::vector<double> theta{0.4};
    auto fbm = simulate_fbm(TimeGrid(1.0, 50), 1, HurstParam(0.6), 6);
    auto y = euler_solve(m, theta, fbm, m.initial);
    auto g = theta_gradient(m, theta, fbm, y);
    for (double v : g.data) EXPECT_EQ(v, 0.0);
}

TEST(ThetaGradient, OuMatchesCommonRandomNumberDifference) {
    OuRun r(0.5, 256, 7, 2.0);
    auto g = theta_gradient(r.model, r.theta, r.fbm, r.y);
    const double eps = 1e-4;
    std::vector<double> tp{0.5 + eps}, tm{0.5 - eps};
    const double fd = (euler_solve(r.model, tp, r.fbm, std::vector<double>{0.0}).terminal()[0] -
                       euler_solve(r.model, tm, r.fbm, std::vector<double>{0.0}).terminal()[0]) /
                      (2 * eps);
    EXPECT_NEAR(g(0, 0, 256), fd, 1e-4 * std::abs(fd));
}

TEST(ThetaGradient, OuClosedFormSign) {
    auto m = get_model("fou");
    std::vector<double> theta{0.5};
    auto fine = simulate_fbm(TimeGrid(1.0, 2048), 1, HurstParam(0.6), 8);
    auto fbm = fine.coarsen(4);
    auto y = euler_solve(m, theta, fbm, m.initial);
    auto g = theta_gradient(m, theta, fbm, y);
    auto o = ou_oracle(0.5, fine);
    EXPECT_NEAR(g(0, 0, 512), o.dlambda_y, 0.02);
}

TEST(MalliavinMatrix, PureNoiseIsPowerOfTime) {
    auto m = trivial_model();
    std::vector<double> theta{0.5};
    auto fbm = simulate_fbm(TimeGrid(1.0, 64), 1, HurstParam(0.65), 9);
    auto y = euler_solve(m, theta, fbm, m.initial);
    auto d1 = derivative_first(m, theta, fbm, y);
    auto path = malliavin_matrix_path(d1, HurstParam(0.65));
    for (int t : {1, 16, 33, 64}) EXPECT_NEAR(path.gamma[t](0, 0), std::pow(fbm.grid.node(t), 1.3), 1e-12);
    inverse_matrix_path(path, m, theta, fbm, y, d1);
    for (int t : {1, 16, 64}) EXPECT_NEAR(path.eta[t](0, 0), std::pow(fbm.grid.node(t), -1.3), 1e-9);
}

TEST(MalliavinMatrix, OuMatchesQuadrature) {
    OuRun r(0.5, 512, 10);
    auto r_cov = increment_autocovariance(r.fbm.grid, HurstParam(0.6));
    auto g = malliavin_matrix(r.d1, r_cov, 512);
    EXPECT_NEAR(g(0, 0), ou_variance(0.5, HurstParam(0.6), 1.0), 1e-3 * g(0, 0));
}

TEST(MalliavinMatrix, SymmetricPositiveSemidefinite) {
    auto m = get_model("linear2d");
    std::vector<double> theta{2.0, 4.0};
    auto fbm = simulate_fbm(TimeGrid(0.4, 40), 2, HurstParam(0.6), 11);
    auto y = euler_solve(m, theta, fbm, m.initial);
    auto d1 = derivative_first(m, theta, fbm, y);
    auto path = malliavin_matrix_path(d1, HurstParam(0.6));
    for (int t = 1; t <= 40; ++t) {
        const auto& g = path.gamma[t];
        EXPECT_EQ(g(0, 1), g(1, 0));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
    }
}

TEST(InverseMatrixPath, InverseIdentityAndEquationAgreement) {
    auto m = get_model("linear2d");
    std::vector<double> theta{2.0, 4.0};
    auto fbm = simulate_fbm(TimeGrid(0.4, 64), 2, HurstParam(0.6), 12);
    auto y = euler_solve(m, theta, fbm, m.initial);
    auto d1 = derivative_first(m, theta, fbm, y);
    auto path = malliavin_matrix_path(d1, HurstParam(0.6));
    inverse_matrix_path(path, m, theta, fbm, y, d1);
    for (int t = 1; t <= 64; ++t)
        EXPECT_LT((path.gamma[t] * path.eta[t] - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(InverseMatrixPath, OuEquationTracksDirectInverse) {
    double previous = INFINITY;
    for (int steps : {64, 256, 1024}) {
        OuRun r(0.5, steps, 13);
        auto path = malliavin_matrix_path(r.d1, HurstParam(0.6));
        inverse_matrix_path(path, r.model, r.theta, r.fbm, r.y, r.d1);
        double worst = 0.0;
        for (int t = path.sde_start; t <= steps; ++t)
            worst = std::max(worst, std::abs(path.eta[t](0, 0) - path.eta_sde[t](0, 0)) / path.eta[t](0, 0));
        EXPECT_LT(worst, previous);
        previous = worst;
    }
    EXPECT_LT(previous, 0.02);
}

TEST(InverseMatrixPath, SingularMatrixIsReported) {
    Eigen::MatrixXd g(2, 2);
    g << 1.0, 1.0, 1.0, 1.0;
    EXPECT_THROW(invert_checked(g, 3), SingularityError);
}

TEST(GradEta, VanishesWithoutParameterDependence) {
    auto m = trivial_model();
    std::vector<double> theta{0.5};
    auto fbm = simulate_fbm(TimeGrid(1.0, 32), 1, HurstParam(0.6), 14);
    auto y = euler_solve(m, theta, fbm, m.initial);
    auto d1 = derivative_first(m, theta, fbm, y);
    auto gy = theta_gradient(m, theta, fbm, y);
    auto gd = grad_derivative_first(m, theta, fbm, y, gy, d1);
    auto path = malliavin_matrix_path(d1, HurstParam(0.6));
    inverse_matrix_path(path, m, theta, fbm, y, d1);
    auto ge = grad_eta(path, d1, gd, HurstParam(0.6));
    for (int t = 1; t <= 32; ++t) EXPECT_EQ(ge[0][t](0, 0), 0.0);
}

TEST(GradEta, OuMatchesFiniteDifferenceAndInverseIdentity) {
    const double lambda = 0.7, eps = 1e-4;
    auto eta_at = [&](double l, Eigen::MatrixXd* gamma = nullptr) {
        OuRun r(l, 200, 15);
        auto path = malliavin_matrix_path(r.d1, HurstParam(0.6));
        inverse_matrix_path(path, r.model, r.theta, r.fbm, r.y, r.d1);
        if (gamma) *gamma = path.gamma[200];
        return path.eta[200](0, 0);
    };
    OuRun r(lambda, 200, 15);
    auto gy = theta_gradient(r.model, r.theta, r.fbm, r.y);
    auto gd = grad_derivative_first(r.model, r.theta, r.fbm, r.y, gy, r.d1);
    auto path = malliavin_matrix_path(r.d1, HurstParam(0.6));
    inverse_matrix_path(path, r.model, r.theta, r.fbm, r.y, r.d1);
    auto ge = grad_eta(path, r.d1, gd, HurstParam(0.6));
    const double fd = (eta_at(lambda + eps) - eta_at(lambda - eps)) / (2 * eps);
    EXPECT_NEAR(ge[0][200](0, 0), fd, 1e-3 * std::abs(fd));

    Eigen::MatrixXd gp, gm;
    eta_at(lambda + eps, &gp);
    eta_at(lambda - eps, &gm);
    const double dgamma = (gp(0, 0) - gm(0, 0)) / (2 * eps);
    const double identity = dgamma * path.eta[200](0, 0) + path.gamma[200](0, 0) * ge[0][200](0, 0);
    EXPECT_NEAR(identity, 0.0, 1e-6);
}

TEST(GradEta, EquationVersionTracksDirect) {
    OuRun r(0.5, 256, 16);
    auto gy = theta_gradient(r.model, r.theta, r.fbm, r.y);
    auto gd = grad_derivative_first(r.model, r.theta, r.fbm, r.y, gy, r.d1);
    auto path = malliavin_matrix_path(r.d1, HurstParam(0.6));
    inverse_matrix_path(path, r.model, r.theta, r.fbm, r.y, r.d1);
    auto ge = grad_eta(path, r.d1, gd, HurstParam(0.6));
    auto gs = grad_eta_sde(path, ge, r.model, r.theta, r.fbm, r.y, gy, r.d1, gd);
    const double direct = ge[0][256](0, 0), sde = gs[0][256](0, 0);
    EXPECT_NEAR(sde, direct, 0.05 * std::abs(direct));
}
