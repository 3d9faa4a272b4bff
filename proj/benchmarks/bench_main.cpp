#include <benchmark/benchmark.h>

#include "sgdlab/linear_oracle.hpp"
#include "sgdlab/noise.hpp"
#include "sgdlab/sgd.hpp"
#include "sgdlab/stats.hpp"

namespace {

using namespace sgdlab;

ScheduleParams default_schedule() {
  ScheduleParams p;
  p.c_gamma = 1.0;
  p.gamma_exp = 0.8;
  p.rho = 0.0;
  p.beta = 0.9;
  return p;
}

void BM_step_flat(benchmark::State& state) {
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 2.0;
  auto prob = make_flat_quadratic(1, a);
  NoiseModel noise(NoiseKind::gaussian_iid, Mat::Identity(3, 3));
  const auto sched = default_schedule();
  RngStream stream(1, 0);
  StepRng init(7);
  Vec x = prob->sample_tube_point(init, 0.1);
  Vec grad(3), z(3), draw(3), next(3);
  std::uint64_t n = 1000;
  for (auto _ : state) {
    prob->gradient_into(x, grad);
    StepRng rng = stream.at_step(n);
    noise.sample_into(rng, 0.0, z, draw);
    next = x + step_size(n, sched) * (grad + draw);
    x.swap(next);
    ++n;
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_step_flat);

void BM_step_sphere(benchmark::State& state) {
  auto prob = make_sphere_well(2);
  NoiseModel noise(NoiseKind::gaussian_iid, Mat::Identity(2, 2));
  const auto sched = default_schedule();
  RngStream stream(1, 0);
  StepRng init(7);
  Vec x = prob->sample_tube_point(init, 0.1);
  Vec grad(2), z(2), draw(2), next(2);
  std::uint64_t n = 1000;
  for (auto _ : state) {
    prob->gradient_into(x, grad);
    StepRng rng = stream.at_step(n);
    noise.sample_into(rng, 0.0, z, draw);
    next = x + step_size(n, sched) * (grad + draw);
    if (prob->distance(next) < 0.25) x.swap(next);
    ++n;
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_step_sphere);

void BM_hyperbola_projection(benchmark::State& state) {
  auto prob = make_hyperbola(1.0);
  StepRng rng(11);
  std::vector<Vec> points;
  for (int i = 0; i < 512; ++i) points.push_back(prob->sample_tube_point(rng, 0.1));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(prob->project(points[i & 511]));
    ++i;
  }
}
BENCHMARK(BM_hyperbola_projection);

void BM_sigma_n(benchmark::State& state) {
  const auto sched = default_schedule();
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sigma_n(n, sched));
  }
}
BENCHMARK(BM_sigma_n)->Arg(100000)->Arg(1000000);

void BM_window_sum(benchmark::State& state) {
  Mat h(2, 2);
  h << -2.0, 0.3, 0.3, -1.0;
  ProductMatrices pm(h, default_schedule());
  const auto span = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pm.weighted_sum(1000, 1000 + span));
  }
}
BENCHMARK(BM_window_sum)->Arg(1000)->Arg(100000);

void BM_simulated_average(benchmark::State& state) {
  Mat h(1, 1);
  h(0, 0) = -2.0;
  ProductMatrices pm(h, default_schedule());
  Mat gt(1, 1);
  gt(0, 0) = 1.0;
  std::uint64_t j = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        pm.simulate_average(static_cast<std::uint64_t>(state.range(0)), gt, 5, j));
    ++j;
  }
}
BENCHMARK(BM_simulated_average)->Arg(10000)->Arg(100000);

void BM_empirical_covariance(benchmark::State& state) {
  StepRng rng(3);
  std::vector<Vec> samples;
  for (int i = 0; i < state.range(0); ++i) {
    Vec v(3);
    v << rng.next_normal(), rng.next_normal(), rng.next_normal();
    samples.push_back(v);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(empirical_covariance(samples));
  }
}
BENCHMARK(BM_empirical_covariance)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
