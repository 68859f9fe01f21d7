#include <benchmark/benchmark.h>

#include "fdemle/fbm.hpp"
#include "fdemle/likelihood.hpp"
#include "fdemle/malliavin.hpp"
#include "fdemle/models.hpp"
#include "fdemle/random.hpp"
#include "fdemle/weights.hpp"

using namespace fdemle;

static void BM_DaviesHarteSample(benchmark::State& state) {
    const int steps = static_cast<int>(state.range(0));
    DaviesHarte dh(TimeGrid(1.0, steps), HurstParam(0.7));
    std::vector<double> out(steps);
    std::uint64_t p = 0;
    for (auto _ : state) {
        dh.sample(stream_seed(1, p++), 1, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetComplexityN(steps);
}
BENCHMARK(BM_DaviesHarteSample)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

static void BM_EulerSolve(benchmark::State& state) {
    auto model = get_model("linear2d");
    std::vector<double> theta{2.0, 4.0};
    auto fbm = simulate_fbm(TimeGrid(0.02, static_cast<int>(state.range(0))), 2, HurstParam(0.6), 3);
    for (auto _ : state) benchmark::DoNotOptimize(euler_solve(model, theta, fbm, model.initial).values.data());
}
BENCHMARK(BM_EulerSolve)->Arg(100)->Arg(500);

static void BM_GenericWeight(benchmark::State& state) {
    auto model = get_model("fou");
    std::vector<double> theta{0.5};
    auto fbm = simulate_fbm(TimeGrid(1.0, static_cast<int>(state.range(0))), 1, HurstParam(0.6), 4);
    for (auto _ : state) {
        auto b = make_bundle(model, theta, fbm, model.initial);
        benchmark::DoNotOptimize(h_weight({1, 1}, b).value);
    }
}
BENCHMARK(BM_GenericWeight)->Arg(32)->Arg(128);

static void BM_MalliavinMatrixPath(benchmark::State& state) {
    auto model = get_model("sine1d");
    std::vector<double> theta{1.0, 1.0};
    auto fbm = simulate_fbm(TimeGrid(1.0, static_cast<int>(state.range(0))), 1, HurstParam(0.7), 5);
    auto y = euler_solve(model, theta, fbm, model.initial);
    auto d1 = derivative_first(model, theta, fbm, y);
    for (auto _ : state) benchmark::DoNotOptimize(malliavin_matrix_path(d1, HurstParam(0.7)).gamma.data());
}
BENCHMARK(BM_MalliavinMatrixPath)->Arg(64)->Arg(256);

static void BM_ScoreLinear2d(benchmark::State& state) {
    auto model = get_model("linear2d");
    std::vector<double> theta{2.0, 4.0};
    auto obs = simulate_observations(model, theta, 0.6, 10, 0.02, 100, 6);
    LikelihoodConfig c;
    c.steps = 100;
    c.paths = static_cast<int>(state.range(0));
    c.workers = 1;
    c.tail_side = true;
    ScoreEngine engine(model, obs, c);
    std::vector<double> at{2.0, 4.0};
    for (auto _ : state) {
        try {
            benchmark::DoNotOptimize(engine.score(at).score.data());
        } catch (const UnreliableScoreError&) {
            state.SkipWithError("unreliable W at the benchmark point");
            break;
        }
    }
}
BENCHMARK(BM_ScoreLinear2d)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_ScoreOu(benchmark::State& state) {
    auto model = get_model("fou");
    std::vector<double> theta{0.5};
    auto obs = simulate_observations(model, theta, 0.6, 50, 8.0, 500, 7);
    LikelihoodConfig c;
    c.steps = 500;
    c.paths = 500;
    c.workers = 1;
    ScoreEngine engine(model, obs, c);
    for (auto _ : state) benchmark::DoNotOptimize(engine.score(theta).score.data());
}
BENCHMARK(BM_ScoreOu)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
