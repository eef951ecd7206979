#include <benchmark/benchmark.h>

#include "pdd/solver.hpp"

namespace {

pdd::CsInstance instance(std::size_t n) {
  pdd::CsOptions o;
  o.n_agents = n;
  o.seed = 3;
  return pdd::make_cs_instance(o);
}

void BM_PddStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto inst = instance(n);
  const auto topo = pdd::build_topology(n, pdd::TopologyKind::random_digraph, 0.3, 7);
  const auto a = pdd::metropolis_weights(topo);
  const auto steps = pdd::default_steps(inst.problem);
  auto states = pdd::init_state(inst.problem);
  std::size_t i = 0;
  for (auto _ : state) {
    pdd::pdd_step(states, inst.problem, a, steps, i++);
    benchmark::DoNotOptimize(states.front().y.data());
  }
}
BENCHMARK(BM_PddStep)->Arg(5)->Arg(20)->Arg(50);

void BM_NetworkStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto inst = instance(n);
  const auto topo = pdd::build_topology(n, pdd::TopologyKind::undirected_random, 0.3, 7);
  const auto ops = pdd::network_operators(inst.problem, pdd::metropolis_weights(topo));
  const auto steps = pdd::default_steps(inst.problem);
  auto net = pdd::init_network(inst.problem);
  std::size_t i = 0;
  for (auto _ : state) {
    pdd::network_step(net, inst.problem, ops, steps, i++);
    benchmark::DoNotOptimize(net.y.data());
  }
}
BENCHMARK(BM_NetworkStep)->Arg(5)->Arg(20);

void BM_SolveCentralized(benchmark::State& state) {
  const auto inst = instance(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto truth = pdd::solve_centralized(inst.problem);
    benchmark::DoNotOptimize(truth.w_star.data());
  }
}
BENCHMARK(BM_SolveCentralized)->Arg(5)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
