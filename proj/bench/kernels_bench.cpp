// Serial reference kernels against the OpenMP versions, plus the two solver
// paths that dominate runtime (one reconciliation and one IPCA run).

#include <benchmark/benchmark.h>

#include "pcarecon/identify_ipca.hpp"
#include "pcarecon/kernels.hpp"
#include "pcarecon/reconcile.hpp"
#include "pcarecon/simulate.hpp"

using namespace pcarecon;

namespace {

Matrix random_data(Eigen::Index n, Eigen::Index samples) {
    std::srand(7);
    return Matrix::Random(n, samples);
}

SimulationSpec flow_spec(int samples) {
    Matrix a(4, 6);
    a << 1, 1, -1, 0, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, 0, 1, -1, -1, 0, -1, 0, 0, 0, 1;
    return {ConstraintModel(a, {"F1", "F2", "F3", "F4", "F5", "F6"}),
            {"F1", "F2"},
            {{"F1", 10.0}, {"F2", 10.0}},
            {{"F1", 1.0}, {"F2", 2.0}},
            {{"F1", 0.1}, {"F2", 0.08}, {"F3", 0.15}, {"F4", 0.2}, {"F5", 0.18}, {"F6", 0.1}},
            samples,
            1};
}

void BM_MultiplyReference(benchmark::State& state) {
    const Matrix y = random_data(6, state.range(0));
    const Matrix a = Matrix::Random(4, 6);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::multiply_columns(a, y));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MultiplyParallel(benchmark::State& state) {
    const Matrix y = random_data(6, state.range(0));
    const Matrix a = Matrix::Random(4, 6);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::multiply_columns(a, y));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SecondMomentReference(benchmark::State& state) {
    const Matrix y = random_data(6, state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::second_moment(y));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SecondMomentParallel(benchmark::State& state) {
    const Matrix y = random_data(6, state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::second_moment(y));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_RowMeanSquareReference(benchmark::State& state) {
    const Matrix e = random_data(6, state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::row_mean_square(e));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_RowMeanSquareParallel(benchmark::State& state) {
    const Matrix e = random_data(6, state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::row_mean_square(e));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ReconcileFull(benchmark::State& state) {
    const auto spec = flow_spec(static_cast<int>(state.range(0)));
    const DataSet data = simulate(spec);
    const auto noise = NoiseModel::from_standard_deviations(
        (Vector(6) << 0.1, 0.08, 0.15, 0.2, 0.18, 0.1).finished());
    for (auto _ : state) benchmark::DoNotOptimize(reconcile_full(spec.model, noise, data));
}

void BM_Ipca(benchmark::State& state) {
    const DataSet data = simulate(flow_spec(static_cast<int>(state.range(0))));
    IpcaConfig config;
    config.assumed_order = 4;
    for (auto _ : state) benchmark::DoNotOptimize(ipca(data, config));
}

}  // namespace

BENCHMARK(BM_MultiplyReference)->Arg(1000)->Arg(100000);
BENCHMARK(BM_MultiplyParallel)->Arg(1000)->Arg(100000);
BENCHMARK(BM_SecondMomentReference)->Arg(1000)->Arg(100000);
BENCHMARK(BM_SecondMomentParallel)->Arg(1000)->Arg(100000);
BENCHMARK(BM_RowMeanSquareReference)->Arg(1000)->Arg(100000);
BENCHMARK(BM_RowMeanSquareParallel)->Arg(1000)->Arg(100000);
BENCHMARK(BM_ReconcileFull)->Arg(1000)->Arg(10000);
BENCHMARK(BM_Ipca)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
