#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "probeset/calibrate.hpp"
#include "probeset/nested.hpp"
#include "probeset/rng.hpp"
#include "probeset/synthetic.hpp"

using namespace probeset;

namespace {

// One adversarially dense instance: every probe scored and queried, many
// magnitude ties so the trace has interesting breakpoint structure.
std::pair<ScoreVector, UserFeedback> dense_instance(std::int64_t probes, std::uint64_t seed) {
    SplitRng rng(seed);
    ScoreVector scores;
    UserFeedback feedback;
    for (std::int32_t i = 1; i <= probes; ++i) {
        ProbeIndex index{i, -1};
        double magnitude = 0.25 * static_cast<double>(rng.next_u64() % 16);
        scores.scores.emplace(index, rng.next_bernoulli(0.5) ? magnitude : -magnitude);
        feedback.answers.emplace(index, rng.next_bernoulli(0.5) ? Sign{1} : Sign{-1});
    }
    return {std::move(scores), std::move(feedback)};
}

CalibSample ranking_sample(std::size_t n, SetFamily family) {
    RankingModel model;
    model.noise_sigma = 2.0;
    return make_ranking_dataset(model, PairQueryParams{}, family, n, 17);
}

void bm_loss_trace(benchmark::State& state) {
    auto [scores, feedback] = dense_instance(state.range(0), 3);
    for (auto _ : state) benchmark::DoNotOptimize(loss_trace(scores, feedback));
    state.SetComplexityN(state.range(0));
}

void bm_stepdown_score(benchmark::State& state) {
    auto [scores, feedback] = dense_instance(state.range(0), 5);
    PiecewiseTrace trace = loss_trace(scores, feedback);
    for (auto _ : state) benchmark::DoNotOptimize(stepdown_score(trace, 0.2));
}

void bm_hb_pvalue(benchmark::State& state) {
    auto n = state.range(0);
    for (auto _ : state) benchmark::DoNotOptimize(hb_pvalue(0.15, n, 0.2));
}

void bm_calibrate_stepdown(benchmark::State& state) {
    CalibSample sample = ranking_sample(static_cast<std::size_t>(state.range(0)),
                                        SetFamily::threshold);
    for (auto _ : state) benchmark::DoNotOptimize(calibrate_stepdown(sample, 0.2, 0.1));
    state.SetComplexityN(state.range(0));
}

void bm_calibrate_fst_quantile(benchmark::State& state) {
    CalibSample sample = ranking_sample(500, SetFamily::threshold);
    auto grid = default_grid(sample, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(calibrate_fst_quantile(sample, 0.2, 0.1, 0.1, grid));
    state.SetComplexityN(state.range(0));
}

void bm_bernoulli_threshold(benchmark::State& state) {
    CalibSample sample = ranking_sample(1, SetFamily::bernoulli);
    const Example& example = sample.examples.front();
    std::vector<ProbeIndex> queries;
    for (const auto& [index, answer] : example.feedback.answers) queries.push_back(index);
    for (auto _ : state)
        benchmark::DoNotOptimize(bernoulli_threshold(*example.acc, queries, 0.9));
}

void bm_apply_threshold(benchmark::State& state) {
    auto [scores, feedback] = dense_instance(256, 7);
    for (auto _ : state) benchmark::DoNotOptimize(threshold_set(scores, 1.0));
}

}  // namespace

BENCHMARK(bm_loss_trace)->RangeMultiplier(4)->Range(8, 2048)->Complexity();
BENCHMARK(bm_stepdown_score)->Arg(64)->Arg(512);
BENCHMARK(bm_hb_pvalue)->Arg(100)->Arg(2000)->Arg(50000);
BENCHMARK(bm_calibrate_stepdown)->RangeMultiplier(4)->Range(125, 8000)->Complexity();
BENCHMARK(bm_calibrate_fst_quantile)->RangeMultiplier(4)->Range(50, 800)->Complexity();
BENCHMARK(bm_bernoulli_threshold);
BENCHMARK(bm_apply_threshold);

BENCHMARK_MAIN();
