// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "mvpmcmc/law.hpp"
#include "mvpmcmc/models.hpp"

using namespace mvpmcmc;

namespace {

struct Fixture {
  std::shared_ptr<const Dynamics> dyn;
  EmpiricalMeasure cloud;
  std::vector<double> noise;
  LawPath laws;

  Fixture(bool neuron, std::size_t n, int level) {
    dyn = neuron ? make_neuron_dynamics({}) : make_ou_dynamics({});
    const RandStream root(StreamKey(7));
    cloud = initial_cloud(*dyn, n, root.child("init", 0));
    RandStream s = root.child("noise", 0);
    noise = gaussian_vector(s, n * dyn->dim(), 0.01);
    laws = propagate_law_block(*dyn, cloud, Level{level}, root.child("block", 0));
  }
};

template <bool Omp, bool Neuron>
void BM_EulerStep(benchmark::State& state) {
  const Fixture f(Neuron, static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    auto out = Omp ? kernels::omp::euler_step(*f.dyn, f.cloud, f.cloud, 0.01, f.noise)
                   : kernels::serial::euler_step(*f.dyn, f.cloud, f.cloud, 0.01, f.noise);
    benchmark::DoNotOptimize(out);
  }
  state.SetComplexityN(state.range(0));
}

template <bool Omp>
void BM_TransitionBatch(benchmark::State& state) {
  const Fixture f(false, static_cast<std::size_t>(state.range(0)), 4);
  const RandStream s(StreamKey(11));
  for (auto _ : state) {
    auto out = Omp ? kernels::omp::transition_batch(*f.dyn, f.cloud, f.laws, s, false)
                   : kernels::serial::transition_batch(*f.dyn, f.cloud, f.laws, s, false);
    benchmark::DoNotOptimize(out);
  }
}

}  // namespace

BENCHMARK(BM_EulerStep<false, false>)->Name("euler_step/serial/ou")->RangeMultiplier(4)->Range(64, 4096);
BENCHMARK(BM_EulerStep<true, false>)->Name("euler_step/omp/ou")->RangeMultiplier(4)->Range(64, 4096);
BENCHMARK(BM_EulerStep<false, true>)->Name("euler_step/serial/neuron")->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_EulerStep<true, true>)->Name("euler_step/omp/neuron")->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_TransitionBatch<false>)->Name("transition_batch/serial/ou")->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_TransitionBatch<true>)->Name("transition_batch/omp/ou")->RangeMultiplier(4)->Range(64, 1024);

BENCHMARK_MAIN();
