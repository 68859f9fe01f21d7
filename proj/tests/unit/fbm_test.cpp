#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fdemle/errors.hpp"
#include "fdemle/fbm.hpp"
#include "fdemle/random.hpp"
#include "support.hpp"

using namespace fdemle;

TEST(FbmCovariance, DiagonalIsPowerOfTime) {
    EXPECT_DOUBLE_EQ(fbm_covariance(1.0, 1.0, HurstParam(0.6)), 1.0);
    EXPECT_NEAR(fbm_covariance(2.0, 2.0, HurstParam(0.6)), 2.297397, 1e-6);
}

TEST(FbmCovariance, OffDiagonalSubstitution) {
    EXPECT_NEAR(fbm_covariance(1.0, 2.0, HurstParam(0.75)), 1.414214, 1e-6);
}

TEST(FbmCovariance, SymmetricAndMatchesIncrementVariance) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> t(0.0, 5.0), h(0.51, 0.99);
    for (int i = 0; i < 200; ++i) {
        const double s = t(rng), u = t(rng);
        HurstParam hp(h(rng));
        EXPECT_DOUBLE_EQ(fbm_covariance(s, u, hp), fbm_covariance(u, s, hp));
        EXPECT_NEAR(fbm_covariance(u, u, hp), std::pow(u, 2 * hp.h), 1e-12);
        const double inc = fbm_covariance(s, s, hp) + fbm_covariance(u, u, hp) - 2 * fbm_covariance(s, u, hp);
        EXPECT_NEAR(inc, std::pow(std::abs(u - s), 2 * hp.h), 1e-10);
    }
}

TEST(HurstParam, RejectsRoughRegime) {
    EXPECT_THROW(HurstParam(0.4), ArgumentError);
    EXPECT_THROW(HurstParam(1.0), ArgumentError);
}

TEST(SimulateFbm, StartsAtZeroAndIsReproducible) {
    TimeGrid g(2.0, 100);
    auto a = simulate_fbm(g, 2, HurstParam(0.7), 42);
    auto b = simulate_fbm(g, 2, HurstParam(0.7), 42);
    EXPECT_EQ(a.increments, b.increments);
    for (int j = 0; j < 2; ++j) EXPECT_EQ(a.value(j, 0), 0.0);
    auto c = simulate_fbm(g, 2, HurstParam(0.7), 43);
    EXPECT_NE(a.increments, c.increments);
}

TEST(SimulateFbm, BrownianLimitIncrementVariance) {
    const int paths = 100000;
    TimeGrid g(1.0, 8);
    DaviesHarte dh(g, HurstParam(0.500001));
    std::vector<double> x(paths), buf(8);
    for (int p = 0; p < paths; ++p) {
        dh.sample(stream_seed(11, p), 1, buf);
        x[p] = buf[3] * buf[3];
    }
    auto m = test::moments(x);
    EXPECT_NEAR(m.mean, g.dt(), 3 * m.se);
}

TEST(SimulateFbm, CovarianceOfMidpointAndTerminal) {
    const int paths = 100000;
    TimeGrid g(1.0, 16);
    DaviesHarte dh(g, HurstParam(0.6));
    std::vector<double> mid(paths), end(paths), buf(16);
    for (int p = 0; p < paths; ++p) {
        dh.sample(stream_seed(12, p), 1, buf);
        double s = 0.0;
        for (int c = 0; c < 16; ++c) {
            s += buf[c];
            if (c == 7) mid[p] = s;
        }
        end[p] = s;
    }
    auto cv = test::covariance(mid, end);
    EXPECT_NEAR(cv.mean, fbm_covariance(0.5, 1.0, HurstParam(0.6)), 3 * cv.se);
}

TEST(SimulateFbm, IncrementVarianceAcrossLags) {
    const int paths = 100000;
    TimeGrid g(1.0, 16);
    DaviesHarte dh(g, HurstParam(0.7));
    std::vector<double> x(paths), buf(16);
    for (int p = 0; p < paths; ++p) {
        dh.sample(stream_seed(13, p), 1, buf);
        double s = 0.0;
        for (int c = 3; c < 11; ++c) s += buf[c];
        x[p] = s * s;
    }
    auto m = test::moments(x);
    EXPECT_NEAR(m.mean, std::pow(0.5, 1.4), 3 * m.se);
}

TEST(SimulateFbm, ChannelsAreUncorrelated) {
    const int paths = 100000;
    TimeGrid g(1.0, 8);
    DaviesHarte dh(g, HurstParam(0.65));
    std::vector<double> a(paths), b(paths), buf(16);
    for (int p = 0; p < paths; ++p) {
        dh.sample(stream_seed(14, p), 2, buf);
        double s1 = 0.0, s2 = 0.0;
        for (int c = 0; c < 8; ++c) s1 += buf[c];
        for (int c = 0; c < 5; ++c) s2 += buf[8 + c];
        a[p] = s1;
        b[p] = s2;
    }
    auto cv = test::covariance(a, b);
    EXPECT_NEAR(cv.mean, 0.0, 3 * cv.se);
}

TEST(IncrementAutocovariance, MatchesCovarianceFunction) {
    TimeGrid g(3.0, 30);
    HurstParam h(0.8);
    auto r = increment_autocovariance(g, h);
    for (int k = 0; k < 30; ++k) {
        const double a = 0.0, b = g.dt(), c = k * g.dt(), d = (k + 1) * g.dt();
        const double want = fbm_covariance(b, d, h) - fbm_covariance(b, c, h) - fbm_covariance(a, d, h) +
                            fbm_covariance(a, c, h);
        EXPECT_NEAR(r[k], want, 1e-12);
    }
}

TEST(ToeplitzApply, MatchesDenseProduct) {
    std::vector<double> r{2.0, 0.5, 0.25, 0.1, 0.05, 0.01};
    std::vector<double> x{1.0, -2.0, 0.5, 3.0, 1.5};
    std::vector<double> out(5);
    toeplitz_apply(r, x, out);
    for (int a = 0; a < 5; ++a) {
        double s = 0.0;
        for (int b = 0; b < 5; ++b) s += r[std::abs(a - b)] * x[b];
        EXPECT_NEAR(out[a], s, 1e-12);
    }
}

TEST(WeightedInner, IndicatorExamples) {
    TimeGrid g(1.0, 512);
    EXPECT_NEAR(weighted_inner(indicator(g, 0, 1), indicator(g, 0, 1), HurstParam(0.6)), 1.0, 1e-10);
    EXPECT_NEAR(weighted_inner(indicator(g, 0, 0.5), indicator(g, 0, 1), HurstParam(0.6)),
                fbm_covariance(0.5, 1.0, HurstParam(0.6)), 1e-4);
    TimeGrid g7(0.7, 512);
    EXPECT_NEAR(weighted_inner(indicator(g7, 0, 0.7), indicator(g7, 0, 0.7), HurstParam(0.75)), 0.585662, 1e-6);
}

TEST(WeightedInner, CovarianceOnIndicatorPairs) {
    TimeGrid g(2.0, 512);
    HurstParam h(0.72);
    for (double s : {0.25, 0.75, 1.5})
        for (double t : {0.5, 1.0, 2.0})
            EXPECT_NEAR(weighted_inner(indicator(g, 0, s), indicator(g, 0, t), h), fbm_covariance(s, t, h), 1e-4);
}

TEST(WeightedInner, SymmetricBilinearPositive) {
    TimeGrid g(1.0, 64);
    HurstParam h(0.65);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    auto random_fn = [&] {
        GridFunction f{g, std::vector<double>(65)};
        for (double& v : f.values) v = n(rng);
        return f;
    };
    for (int i = 0; i < 20; ++i) {
        auto f = random_fn(), p = random_fn(), q = random_fn();
        const double a = n(rng), b = n(rng);
        GridFunction comb{g, std::vector<double>(65)};
        for (int k = 0; k <= 64; ++k) comb.values[k] = a * p.values[k] + b * q.values[k];
        EXPECT_NEAR(weighted_inner(f, p, h), weighted_inner(p, f, h), 1e-12);
        EXPECT_NEAR(weighted_inner(f, comb, h), a * weighted_inner(f, p, h) + b * weighted_inner(f, q, h), 1e-10);
        EXPECT_GT(weighted_inner(f, f, h), 0.0);
    }
    for (double s : {0.1, 0.4, 0.9}) EXPECT_GT(weighted_inner(indicator(g, 0, s), indicator(g, 0, s), h), 0.0);
}

TEST(HurstRs, WhiteNoiseIsHalf) {
    std::vector<double> x(4096);
    NormalStream ns(21);
    ns.fill(x);
    const double h = estimate_hurst_rs(x).h;
    EXPECT_GE(h, 0.45);
    EXPECT_LE(h, 0.55);
}

TEST(HurstRs, RecoversSimulatorIndex) {
    for (auto [h, lo, hi] : {std::tuple{0.7, 0.6, 0.8}, std::tuple{0.6, 0.5, 0.7}}) {
        auto fbm = simulate_fbm(TimeGrid(1.0, 4096), 1, HurstParam(h), 22);
        const double est = estimate_hurst_rs(fbm.increments).h;
        EXPECT_GE(est, lo) << h;
        EXPECT_LE(est, hi) << h;
    }
}

TEST(HurstRs, RejectsDegenerateInput) {
    std::vector<double> zeros(512, 0.0);
    EXPECT_THROW(estimate_hurst_rs(zeros), ArgumentError);
    std::vector<double> short_series(20, 1.0);
    EXPECT_THROW(estimate_hurst_rs(short_series), ArgumentError);
}

TEST(HurstRs, ShortGroupsUseSmallerWindows) {
    auto fbm = simulate_fbm(TimeGrid(1.0, 50), 1, HurstParam(0.6), 23);
    auto est = estimate_hurst_rs(fbm.increments);
    EXPECT_GE(est.windows.size(), 2u);
    EXPECT_TRUE(std::isfinite(est.h));
}
