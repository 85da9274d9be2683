#include <benchmark/benchmark.h>
#include <omp.h>

#include "jetcas/cli.hpp"
#include "jetcas/reduce.hpp"

using namespace jetcas;

namespace {

// residual of the closed-form log-diffusion solution against its constraints
std::vector<Expr> logdiff_residuals() {
    Expr t = Expr::variable("t"), x = Expr::variable("x"), y = Expr::variable("y");
    Expr u = 1 / (exp((x - t) * tan(t) + y) * cos(t) + x - t);
    Expr ux = partial(u, x.as_atom()), uy = partial(u, y.as_atom()), ut = partial(u, t.as_atom());
    Expr lap = partial(partial(ln(u), x.as_atom()), x.as_atom()) + partial(partial(ln(u), y.as_atom()), y.as_atom());
    return {ut - lap, ux + u * u + (t * u * u - x * u * u + u) * tan(t), uy + t * u * u + u - x * u * u};
}

const Box box{{{"t", {0.1, 0.4}}, {"x", {2, 3}}, {"y", {0, 1}}}};

void BM_ResidualSerial(benchmark::State& state) {
    auto rs = logdiff_residuals();
    for (auto _ : state)
        benchmark::DoNotOptimize(numeric_residual_serial(rs, box, static_cast<int>(state.range(0)), 1).max_abs);
}
BENCHMARK(BM_ResidualSerial)->Arg(1000)->Arg(5000);

void BM_ResidualParallel(benchmark::State& state) {
    auto rs = logdiff_residuals();
    for (auto _ : state)
        benchmark::DoNotOptimize(numeric_residual(rs, box, static_cast<int>(state.range(0)), 1).max_abs);
}
BENCHMARK(BM_ResidualParallel)->Arg(1000)->Arg(5000);

void BM_Corpus(benchmark::State& state) {
    auto entries = cli::list_corpus(cli::default_corpus_dir());
    cli::Options opt;
    int threads = omp_get_max_threads();
    omp_set_num_threads(static_cast<int>(state.range(0)) == 1 ? 1 : threads);
    for (auto _ : state) benchmark::DoNotOptimize(cli::run_corpus(entries, opt).size());
    omp_set_num_threads(threads);
    state.SetLabel(state.range(0) == 1 ? "1 thread" : std::to_string(threads) + " threads");
}
BENCHMARK(BM_Corpus)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace

BENCHMARK_MAIN();
