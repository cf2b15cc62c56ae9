#include <benchmark/benchmark.h>

#include <random>

#include "combandit/design_state.hpp"
#include "combandit/policies.hpp"
#include "combandit/score_net.hpp"

using namespace combandit;

namespace {

Vector random_vector(Eigen::Index n, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Vector paired(int d, Rng& rng) {
  const Vector z = random_vector(d / 2, rng);
  return pair_context(as_span(Vector(z / z.norm())));
}

}  // namespace

// p = d*m + m for L = 2; d = 20 gives p = 1050 at m = 50 and p = 2100 at m = 100.
static void BM_DesignRankOne(benchmark::State& state) {
  const auto p = static_cast<Eigen::Index>(state.range(0));
  Rng rng(1);
  DesignState s(p, 1.0);
  const Vector u = random_vector(p, rng, 0.05);
  for (auto _ : state) {
    s.rank_one_update(as_span(u));
    benchmark::DoNotOptimize(s.log_det());
  }
}
BENCHMARK(BM_DesignRankOne)->Arg(210)->Arg(1050)->Arg(2100);

static void BM_WeightedNorms(benchmark::State& state) {
  const auto p = static_cast<Eigen::Index>(state.range(0));
  Rng rng(2);
  DesignState s(p, 1.0);
  for (int i = 0; i < 30; ++i) s.rank_one_update(as_span(random_vector(p, rng, 0.05)));
  Matrix vs(p, 10);
  for (int j = 0; j < 10; ++j) vs.col(j) = random_vector(p, rng);
  for (auto _ : state) benchmark::DoNotOptimize(s.weighted_norms(vs));
}
BENCHMARK(BM_WeightedNorms)->Arg(210)->Arg(1050)->Arg(2100);

static void BM_Gradient(benchmark::State& state) {
  const NetworkShape shape{20, static_cast<int>(state.range(0)), static_cast<int>(state.range(1))};
  const NetworkParams p = init_params(shape, 3);
  Rng rng(3);
  const Vector x = paired(20, rng);
  for (auto _ : state) benchmark::DoNotOptimize(gradient(shape, p, as_span(x)));
}
BENCHMARK(BM_Gradient)->Args({50, 2})->Args({100, 2})->Args({100, 3});

static void BM_TrainMiniBatch(benchmark::State& state) {
  const NetworkShape shape{20, 50, 2};
  const NetworkParams init = init_params(shape, 4);
  Rng rng(4);
  std::vector<ObservationGroup> groups(static_cast<std::size_t>(state.range(0)));
  for (auto& g : groups) {
    for (int k = 0; k < 3; ++k) {
      g.contexts.push_back(paired(20, rng));
      g.scores.push_back(random_vector(1, rng)[0]);
    }
  }
  MiniBatchOptions opts;
  opts.lambda = 1.0;
  opts.eta = 0.01;
  opts.epochs = 1;
  opts.batch_groups = 100;
  for (auto _ : state) {
    Rng train_rng(5);
    benchmark::DoNotOptimize(train_minibatch(shape, init, init, groups, opts, train_rng));
  }
}
BENCHMARK(BM_TrainMiniBatch)->Arg(100)->Arg(500);

static void BM_UcbRound(benchmark::State& state) {
  const NetworkShape shape{20, 50, 2};
  TrainingSchedule sched;
  sched.train_every = 0;
  NeuralBandit bandit(shape, 1.0, sched, 1, 2);
  Rng rng(6);
  Matrix x(20, 10);
  for (int i = 0; i < 10; ++i) x.col(i) = paired(20, rng);
  const UcbConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(ucb_scores(bandit, x, cfg));
}
BENCHMARK(BM_UcbRound);

BENCHMARK_MAIN();
