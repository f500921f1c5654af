#include "vk/conformal.hpp"
#include "vk/mollify.hpp"
#include "vk/step.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace vk;

namespace {

Grid2 bench_grid() { return Grid2::make(0, 1, 0, 1, 256, 256, 0.25); }

Field smooth_scalar(const Grid2& g) {
    Field f(g, 1, 1);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            f.at(0, ix, iy) = std::sin(3 * g.x(ix)) * std::cos(2 * g.y(iy));
    return f;
}

void bm_mollify(benchmark::State& state) {
    Grid2 g = bench_grid();
    Field f = smooth_scalar(g);
    for (auto _ : state) benchmark::DoNotOptimize(mollify(f, 0.1));
}
BENCHMARK(bm_mollify)->Unit(benchmark::kMillisecond);

void bm_fd_gradient(benchmark::State& state) {
    Grid2 g = bench_grid();
    Field f = smooth_scalar(g);
    for (auto _ : state) benchmark::DoNotOptimize(fd_gradient(f));
}
BENCHMARK(bm_fd_gradient)->Unit(benchmark::kMillisecond);

void bm_fd_hessian(benchmark::State& state) {
    Grid2 g = bench_grid();
    Field f = smooth_scalar(g);
    for (auto _ : state) benchmark::DoNotOptimize(fd_hessian(f));
}
BENCHMARK(bm_fd_hessian)->Unit(benchmark::kMillisecond);

void bm_vk_metric(benchmark::State& state) {
    Grid2 g = bench_grid();
    Field v(g, 2, 1), w(g, 2, 1);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            v.at(0, ix, iy) = std::sin(g.x(ix));
            w.at(1, ix, iy) = g.y(iy) * g.y(iy);
        }
    for (auto _ : state) benchmark::DoNotOptimize(vk_metric(v, w));
}
BENCHMARK(bm_vk_metric)->Unit(benchmark::kMillisecond);

void bm_solve_dirichlet(benchmark::State& state) {
    Grid2 g = Grid2::make(0, 1, 0, 1, 257, 257, 0.0);
    Field f = smooth_scalar(g);
    for (auto _ : state) benchmark::DoNotOptimize(solve_dirichlet(f));
}
BENCHMARK(bm_solve_dirichlet)->Unit(benchmark::kMillisecond);

void bm_decompose(benchmark::State& state) {
    Grid2 g = bench_grid();
    Field D(g, 2, 2);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            D.at(0, ix, iy) = 1 + 0.2 * std::sin(4 * g.x(ix));
            D.at(3, ix, iy) = 1 + 0.2 * std::cos(3 * g.y(iy));
        }
    for (auto _ : state) benchmark::DoNotOptimize(decompose(D));
}
BENCHMARK(bm_decompose)->Unit(benchmark::kMillisecond);

void bm_apply_step(benchmark::State& state) {
    Grid2 g = bench_grid();
    Field v(g, 2, 1), w(g, 2, 1);
    StepSpec s;
    s.a = Field::constant(g, 1, 1, 0.3);
    s.eta = {0.6, 0.8};
    s.E = {1, 0};
    s.lambda = 40;
    for (auto _ : state) benchmark::DoNotOptimize(apply_step(v, w, s));
}
BENCHMARK(bm_apply_step)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
