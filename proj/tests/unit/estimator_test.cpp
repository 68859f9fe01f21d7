#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fdemle/errors.hpp"
#include "fdemle/estimator.hpp"
#include "fdemle/models.hpp"
#include "support.hpp"

using namespace fdemle;

TEST(StepSchedule, HarmonicSteps) {
    StepSchedule s{2.0, 3.0, 1.0};
    EXPECT_DOUBLE_EQ(s.step(0), 0.5);
    EXPECT_DOUBLE_EQ(s.step(4), 0.25);
    StepSchedule r{1.0, 0.0, 0.75};
    EXPECT_DOUBLE_EQ(r.step(15), std::pow(16.0, -0.75));
}

TEST(StepSchedule, Validation) {
    EXPECT_FALSE(validate_schedule({1.0, 0.0, 1.0}).has_value());
    EXPECT_FALSE(validate_schedule({0.1, 5.0, 0.6}).has_value());
    EXPECT_TRUE(validate_schedule({0.0, 1.0, 1.0}).has_value());
    EXPECT_TRUE(validate_schedule({1.0, -1.0, 1.0}).has_value());
    EXPECT_TRUE(validate_schedule({1.0, 1.0, 0.5}).has_value());
    EXPECT_TRUE(validate_schedule({1.0, 1.0, 1.2}).has_value());
    ScoreFunction g = [](std::span<const double> t, int) { return ScoreEval{{t[0]}, {0.0}}; };
    std::vector<double> t0{1.0};
    EXPECT_THROW(robbins_monro(g, t0, {1.0, 1.0, 0.4}, {}), ArgumentError);
}

TEST(RobbinsMonro, DeterministicLinearRoot) {
    ScoreFunction g = [](std::span<const double> t, int) {
        return ScoreEval{{2.0 * (t[0] - 1.5), t[1] + 0.5}, {0.0, 0.0}};
    };
    std::vector<double> t0{0.0, 3.0};
    RobbinsMonroOptions o;
    o.iterations = 200;
    auto rep = robbins_monro(g, t0, {1.0, 1.0, 1.0}, o);
    ASSERT_FALSE(rep.aborted);
    EXPECT_EQ(rep.trace.size(), 201u);
    EXPECT_EQ(rep.tail, 40);
    EXPECT_NEAR(rep.theta_hat[0], 1.5, 1e-3);
    EXPECT_NEAR(rep.theta_hat[1], -0.5, 0.05);
}

TEST(RobbinsMonro, TailAverageOfLastFifth) {
    ScoreFunction g = [](std::span<const double>, int) { return ScoreEval{{-1.0}, {0.0}}; };
    std::vector<double> t0{0.0};
    RobbinsMonroOptions o;
    o.iterations = 7;
    auto rep = robbins_monro(g, t0, {1.0, 0.0, 1.0}, o);
    EXPECT_EQ(rep.tail, 2);
    const double want = 0.5 * (rep.trace[6][0] + rep.trace[7][0]);
    EXPECT_DOUBLE_EQ(rep.theta_hat[0], want);
}

TEST(RobbinsMonro, NoisyRootAcrossReplications) {
    std::vector<double> hats;
    for (int r = 0; r < 20; ++r) {
        std::mt19937_64 rng(1000 + r);
        std::normal_distribution<double> noise(0.0, 1.0);
        ScoreFunction g = [&](std::span<const double> t, int) { return ScoreEval{{t[0] - 0.8 + noise(rng)}, {1.0}}; };
        std::vector<double> t0{3.0};
        RobbinsMonroOptions o;
        o.iterations = 10000;
        hats.push_back(robbins_monro(g, t0, {1.0, 1.0, 1.0}, o).theta_hat[0]);
    }
    auto m = test::moments(hats);
    EXPECT_NEAR(m.mean, 0.8, 0.05);
}

TEST(RobbinsMonro, ProjectionKeepsIteratesInBox) {
    ScoreFunction g = [](std::span<const double>, int) { return ScoreEval{{-100.0}, {0.0}}; };
    std::vector<double> t0{0.5};
    RobbinsMonroOptions o;
    o.iterations = 10;
    o.box = {{0.0, 1.0}};
    auto rep = robbins_monro(g, t0, {1.0, 0.0, 1.0}, o);
    for (const auto& t : rep.trace) {
        EXPECT_GE(t[0], 0.0);
        EXPECT_LE(t[0], 1.0);
    }
    EXPECT_DOUBLE_EQ(rep.theta_hat[0], 1.0);
    std::vector<double> outside{2.0};
    EXPECT_THROW(robbins_monro(g, outside, {1.0, 0.0, 1.0}, o), ArgumentError);
}

TEST(RobbinsMonro, RetriesWithFreshPathsThenAborts) {
    std::vector<int> attempts;
    ScoreFunction flaky = [&](std::span<const double> t, int attempt) {
        attempts.push_back(attempt);
        if (attempts.size() == 2) throw UnreliableScoreError("W too small", 3);
        return ScoreEval{{t[0]}, {0.0}};
    };
    std::vector<double> t0{1.0};
    RobbinsMonroOptions o;
    o.iterations = 4;
    auto rep = robbins_monro(flaky, t0, {0.5, 0.0, 1.0}, o);
    EXPECT_FALSE(rep.aborted);
    ASSERT_EQ(rep.failures.size(), 1u);
    EXPECT_EQ(rep.failures[0].kind, "unreliable");
    EXPECT_EQ(rep.failures[0].observation, 3);
    EXPECT_EQ(attempts, (std::vector<int>{0, 0, 1, 1, 1}));

    ScoreFunction broken = [](std::span<const double>, int) -> ScoreEval { throw NumericError("bad"); };
    auto dead = robbins_monro(broken, t0, {0.5, 0.0, 1.0}, o);
    EXPECT_TRUE(dead.aborted);
    EXPECT_EQ(dead.failures.size(), 2u);
    EXPECT_EQ(dead.theta_hat[0], 1.0);

    ScoreFunction unsupported = [](std::span<const double>, int) -> ScoreEval { throw CapabilityError("no"); };
    auto cap = robbins_monro(unsupported, t0, {0.5, 0.0, 1.0}, o);
    EXPECT_TRUE(cap.aborted);
    ASSERT_EQ(cap.failures.size(), 1u);
    EXPECT_EQ(cap.failures[0].kind, "capability");
}

TEST(EstimateParameters, DeterministicForFixedSeed) {
    auto model = get_model("fou");
    std::vector<double> truth{1.0}, t0{0.5};
    auto obs = simulate_observations(model, truth, 0.6, 10, 1.0, 20, 3);
    LikelihoodConfig c;
    c.paths = 200;
    c.steps = 20;
    c.seed = 5;
    c.workers = 1;
    auto a = estimate_parameters(model, obs, t0, {0.5, 1.0, 1.0}, 5, c);
    auto b = estimate_parameters(model, obs, t0, {0.5, 1.0, 1.0}, 5, c);
    EXPECT_EQ(a.trace, b.trace);
    EXPECT_EQ(a.theta_hat, b.theta_hat);
}

TEST(Summarize, MeanAndSpread) {
    auto s = summarize({{1.0, 10.0}, {2.0, 20.0}, {3.0, 30.0}});
    EXPECT_EQ(s.count, 3);
    EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
    EXPECT_DOUBLE_EQ(s.mean[1], 20.0);
    EXPECT_DOUBLE_EQ(s.sd[0], 1.0);
    EXPECT_NEAR(s.se[1], 10.0 / std::sqrt(3.0), 1e-12);
}
