#include <random>

#include <benchmark/benchmark.h>

#include "dfsq/geo_phase.hpp"
#include "dfsq/optctrl.hpp"
#include "dfsq/pert_gate.hpp"
#include "dfsq/plaquette.hpp"

namespace {

using namespace dfsq;

void BM_EigPlaquette(benchmark::State& state) {
  const Mat H = heisenberg_plaquette(PlaquetteCouplings::diag(1.0, 0.3));
  for (auto _ : state) benchmark::DoNotOptimize(eig_hermitian(H));
}
BENCHMARK(BM_EigPlaquette);

void BM_Propagate(benchmark::State& state) {
  const auto p = random_pulse(7, 20, 1.0);
  const int steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(propagate(p, steps));
}
BENCHMARK(BM_Propagate)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Gradient(benchmark::State& state) {
  const auto p = random_pulse(7, 20, 1.0);
  const int steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fidelity_and_gradient(p, steps));
}
BENCHMARK(BM_Gradient)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_GateFidelity(benchmark::State& state) {
  PertParams p;
  p.d = 0.3;
  p.Jp = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(gate_fidelity(p));
}
BENCHMARK(BM_GateFidelity)->Unit(benchmark::kMillisecond);

void BM_TunnelingPhase(benchmark::State& state) {
  const auto p = OnsiteParams{}.at_resonant_bias(Statistics::boson);
  const auto sec = sector_from_string("ST");
  for (auto _ : state) benchmark::DoNotOptimize(tunneling_phase(sec, p, Statistics::boson));
}
BENCHMARK(BM_TunnelingPhase)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
