#include <benchmark/benchmark.h>

#include "exspin/commands.hpp"
#include "exspin/echo.hpp"

namespace {

exspin::RunConfig bench_config(bool decay) {
  exspin::RunConfig c;
  c.system.j_meV = -1.5;
  c.system.field_tesla = 0.35;
  c.echo.tau_step_ns = 1e-4;
  c.echo.n_tau = 32;
  c.echo.n_samples = 32;
  c.echo.decay = decay;
  return c;
}

template <bool Parallel, bool Decay>
void BM_Echo(benchmark::State& state) {
  const auto config = bench_config(Decay);
  const auto exp = exspin::echo_experiment(config);
  const auto setup = exspin::echo_setup(config);
  for (auto _ : state) {
    auto trace = Parallel ? exspin::integrated_echo(exp, setup, config.system.j_meV)
                          : exspin::integrated_echo_serial(exp, setup, config.system.j_meV);
    benchmark::DoNotOptimize(trace.integrated_echo.data());
  }
  state.SetItemsProcessed(state.iterations() * config.echo.n_samples);
}

}  // namespace

BENCHMARK(BM_Echo<false, false>)->Name("echo_closed/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Echo<true, false>)->Name("echo_closed/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Echo<false, true>)->Name("echo_lindblad/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Echo<true, true>)->Name("echo_lindblad/openmp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
