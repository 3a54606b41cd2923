#include <benchmark/benchmark.h>

#include <dic/hazard_link.hpp>
#include <dic/index_calibration.hpp>
#include <dic/loss_engine.hpp>
#include <dic/normal.hpp>
#include <dic/samc.hpp>
#include <dic/synthetic.hpp>

using namespace dic;

namespace {

const synthetic::DeskMarket& desk() {
    static const auto d = synthetic::desk_market();
    return d;
}

void BM_NormalEtl(benchmark::State& state) {
    double mean = 0.01;
    for (auto _ : state) {
        benchmark::DoNotOptimize(normal_etl({mean, 4e-4}, 0.03, 0.07));
        mean = mean < 0.2 ? mean + 1e-5 : 0.01;
    }
}
BENCHMARK(BM_NormalEtl);

void BM_BivariateNormal(benchmark::State& state) {
    double a = -2.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(bivariate_normal_cdf(a, 0.4, 0.7));
        a = a < 2.0 ? a + 1e-3 : -2.0;
    }
}
BENCHMARK(BM_BivariateNormal);

void BM_CalibrateB(benchmark::State& state) {
    const auto model = desk().model(0.5);
    const auto& [id, spec] = *desk().linkage.begin();
    const auto grid = quarterly_grid(7.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(calibrate_b(spec, model.curve(id), model.laws, model.copula, grid));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(grid.size()));
}
BENCHMARK(BM_CalibrateB);

void BM_BuildCaches(benchmark::State& state) {
    const auto model = desk().model(0.5);
    LinkageCache cache;
    const PortfolioSlice slice(desk().supermix, model, 5.0, &cache);
    for (auto _ : state)
        benchmark::DoNotOptimize(build_caches(slice));
}
BENCHMARK(BM_BuildCaches);

void BM_ModelEtlGrid(benchmark::State& state) {
    const auto model = desk().model(0.5);
    const auto m = single_factor_model(desk().laws[0], desk().curves, desk().linkage);
    LinkageCache cache;
    const PortfolioSlice slice(desk().indices[0], m, 5.0, &cache);
    for (auto _ : state)
        benchmark::DoNotOptimize(model_etl_grid(slice, 0.03, 0.07));
}
BENCHMARK(BM_ModelEtlGrid);

// Supermix tranche stack at 5y; arg 0 = generic path, 1 = many-to-one caches, 2 = caches + control variate.
void BM_SamcSupermix(benchmark::State& state) {
    const auto model = desk().model(0.5);
    const auto tranches = synthetic::tranche_stack({0.0, 0.03, 0.07, 0.1, 0.15, 0.3, 0.6}, 5.0);
    std::vector<TrancheSpec> at5;
    for (const auto& t : tranches)
        at5.emplace_back(t.attach, t.detach, 5.0, std::vector<double>{5.0});
    LinkageCache cache;
    SamcConfig cfg;
    cfg.n_paths = 20000;
    cfg.use_many_to_one = state.range(0) >= 1;
    cfg.use_control_variate = state.range(0) == 2;
    cfg.cache = &cache;
    for (auto _ : state)
        benchmark::DoNotOptimize(run_samc(desk().supermix, at5, model, cfg));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(cfg.n_paths));
}
BENCHMARK(BM_SamcSupermix)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
