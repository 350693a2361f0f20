#include <benchmark/benchmark.h>

#include "swchan/capacity.hpp"
#include "swchan/entropy.hpp"
#include "swchan/oracle.hpp"

using namespace swchan;

namespace {

kernels::Exec exec_of(const benchmark::State& state) {
  return state.range(0) ? kernels::Exec::Parallel : kernels::Exec::Serial;
}

void BM_MinPlusStep(benchmark::State& state) {
  const GainGraph g(enumerate_states({ChannelKind::NSE, 16, 6, 2}));
  std::vector<double> w(g.size(), 0.0);
  for (auto _ : state) {
    w = reduced_dp_step(g, w, exec_of(state));
    benchmark::DoNotOptimize(w.data());
  }
  state.counters["states"] = static_cast<double>(g.size());
}
BENCHMARK(BM_MinPlusStep)->Arg(0)->Arg(1);

void BM_PerronFrobenius(benchmark::State& state) {
  const StateGraph g = enumerate_states({ChannelKind::NSS, 10, 3, 3});
  for (auto _ : state) benchmark::DoNotOptimize(perron_frobenius(g, 1e-10, 2'000'000, exec_of(state)).lambda_pf);
}
BENCHMARK(BM_PerronFrobenius)->Arg(0)->Arg(1);

void BM_Confusability(benchmark::State& state) {
  const ChannelSpec spec{ChannelKind::NSS, 4, 1, 2};
  for (auto _ : state)
    benchmark::DoNotOptimize(build_confusability(spec, 14, Word{1} << 20, exec_of(state)).degree());
}
BENCHMARK(BM_Confusability)->Arg(0)->Arg(1);

void BM_MinMeanCycle(benchmark::State& state) {
  const GainGraph g(enumerate_states({ChannelKind::NSE, 14, 5, 2}));
  for (auto _ : state) benchmark::DoNotOptimize(min_mean_cycle(g, exec_of(state)).value);
}
BENCHMARK(BM_MinMeanCycle)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
