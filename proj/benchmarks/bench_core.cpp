#include <benchmark/benchmark.h>

#include <vector>

#include "hybridssr/inference.hpp"
#include "hybridssr/normal.hpp"
#include "hybridssr/propensity.hpp"
#include "hybridssr/random.hpp"
#include "hybridssr/simulation.hpp"
#include "hybridssr/ssr.hpp"

using namespace hybridssr;

namespace {

Dataset analysis_set(std::size_t n_current, int scenario) {
    const auto data = generate_scenario_data(scenario_preset(scenario, 0.0), n_current, {}, 1, 0);
    return data.current.concat(data.historical);
}

void BM_Philox(benchmark::State& state) {
    RandomStream s(1, 0);
    for (auto _ : state) benchmark::DoNotOptimize(s());
}
BENCHMARK(BM_Philox);

void BM_Normal(benchmark::State& state) {
    RandomStream s(1, 0);
    for (auto _ : state) benchmark::DoNotOptimize(s.normal());
}
BENCHMARK(BM_Normal);

void BM_ZQuantile(benchmark::State& state) {
    double p = 0.0001;
    for (auto _ : state) {
        benchmark::DoNotOptimize(z_quantile(p));
        p = p + 0.00137 >= 1.0 ? 0.0001 : p + 0.00137;
    }
}
BENCHMARK(BM_ZQuantile);

void BM_FitPropensity(benchmark::State& state) {
    const auto d = analysis_set(std::size_t(state.range(0)), 4);
    for (auto _ : state) benchmark::DoNotOptimize(fit_propensity(d));
    state.SetItemsProcessed(state.iterations() * std::int64_t(d.size()));
}
BENCHMARK(BM_FitPropensity)->Arg(160)->Arg(330)->Arg(5000);

void BM_IpwTest(benchmark::State& state) {
    const auto d = analysis_set(std::size_t(state.range(0)), 2);
    const auto w = compute_weights(d, fit_propensity(d));
    for (auto _ : state) benchmark::DoNotOptimize(ipw_test(d, w, {}));
}
BENCHMARK(BM_IpwTest)->Arg(330)->Arg(5000);

void BM_Strategy2(benchmark::State& state) {
    const auto d = analysis_set(330, 3);
    const auto w = compute_weights(d, fit_propensity(d));
    const auto blind = d.masked().without_outcomes();
    for (auto _ : state) benchmark::DoNotOptimize(ssr_strategy2(blind, w, {}));
}
BENCHMARK(BM_Strategy2);

void BM_Replication(benchmark::State& state) {
    const auto sc = scenario_preset(int(state.range(0)), 0.0);
    const SimDesign design;
    std::uint32_t r = 0;
    for (auto _ : state) benchmark::DoNotOptimize(run_replication(sc, design, 7, r++));
}
BENCHMARK(BM_Replication)->DenseRange(1, 5)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
