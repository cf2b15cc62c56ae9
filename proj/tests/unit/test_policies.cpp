#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "combandit/errors.hpp"
#include "combandit/policies.hpp"
#include "test_util.hpp"

using namespace combandit;

namespace {

const NetworkShape kShape{8, 16, 2};

Matrix paired_contexts(int n, testutil::Rng& rng) {
  Matrix x(kShape.input_dim, n);
  for (int i = 0; i < n; ++i) x.col(i) = testutil::paired_unit(kShape.input_dim, rng);
  return x;
}

TrainingSchedule quick_schedule() {
  TrainingSchedule s;
  s.train_every = 5;
  s.epochs = 5;
  s.batch_groups = 10;
  s.eta = 0.01;
  return s;
}

NeuralBandit trained_state(int rounds, std::uint64_t seed) {
  testutil::Rng rng(seed);
  NeuralBandit state(kShape, 1.0, quick_schedule(), 7, 8);
  for (int t = 0; t < rounds; ++t) {
    const Matrix x = paired_contexts(2, rng);
    const std::vector<double> v = testutil::uniform_scores(2, rng);
    state.observe(x, v);
  }
  return state;
}

}  // namespace

TEST_CASE("gamma 0 gives the plain network prediction") {
  const NeuralBandit state = trained_state(12, 1);
  testutil::Rng rng(2);
  const Matrix x = paired_contexts(6, rng);
  UcbConfig cfg;
  cfg.gamma_const = 0.0;
  const AdjustedScores u = ucb_scores(state, x, cfg);
  const Vector f = state.predict(x);
  CHECK(u.offset == 0.0);
  for (int i = 0; i < 6; ++i) CHECK(u.scores[static_cast<std::size_t>(i)] == f[i]);
}

TEST_CASE("UCB scores never fall below the prediction") {
  const NeuralBandit state = trained_state(20, 3);
  testutil::Rng rng(4);
  const Matrix x = paired_contexts(10, rng);
  UcbConfig cfg;
  const AdjustedScores u = ucb_scores(state, x, cfg);
  const Vector f = state.predict(x);
  const Vector w = state.widths(x);
  for (int i = 0; i < 10; ++i) {
    CHECK(u.scores[static_cast<std::size_t>(i)] >= f[i]);
    CHECK(u.scores[static_cast<std::size_t>(i)] == doctest::Approx(f[i] + w[i]).epsilon(1e-14));
  }
}

TEST_CASE("theory-mode gamma plug-in example") {
  TrainingSchedule sched = quick_schedule();
  sched.kind = TrainingSchedule::Kind::full_batch;
  sched.gd_steps = 10;
  sched.eta = 1.0 / kShape.width;  // 1 - eta*m*lambda = 0
  const NeuralBandit state(kShape, 1.0, sched, 1, 2);
  UcbConfig cfg;
  cfg.mode = ExplorationMode::theory;
  cfg.c_gamma1 = 0.0;
  cfg.c_gamma2 = 0.0;
  cfg.c_gamma3 = 0.0;
  cfg.sigma_sub = 1.0;
  cfg.s_norm = 1.0;
  cfg.delta = std::exp(-0.5);
  cfg.super_arm_size = 2;
  const UcbTerms terms = ucb_terms(state, cfg);
  CHECK(terms.gamma == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(terms.offset >= 0.0);
}

TEST_CASE("theory-mode gamma grows with the log-det ratio") {
  UcbConfig cfg;
  cfg.mode = ExplorationMode::theory;
  cfg.super_arm_size = 2;
  double prev = 0.0;
  testutil::Rng rng(5);
  TrainingSchedule sched = quick_schedule();
  sched.train_every = 0;
  NeuralBandit state(kShape, 1.0, sched, 1, 2);
  for (int t = 0; t < 10; ++t) {
    const double g = ucb_terms(state, cfg).gamma;
    CHECK(g >= prev);
    prev = g;
    state.observe(paired_contexts(2, rng), testutil::uniform_scores(2, rng));
  }
}

TEST_CASE("practical terms are the configured constant") {
  const NeuralBandit state = trained_state(3, 6);
  UcbConfig cfg;
  cfg.gamma_const = 0.7;
  const UcbTerms terms = ucb_terms(state, cfg);
  CHECK(terms.gamma == 0.7);
  CHECK(terms.offset == 0.0);
  cfg.gamma_const = -1.0;
  CHECK_THROWS_AS(ucb_terms(state, cfg), ConfigError);
}

TEST_CASE("TS with nu 0 returns the prediction for any M") {
  const NeuralBandit state = trained_state(12, 7);
  testutil::Rng rng(8);
  const Matrix x = paired_contexts(5, rng);
  const Vector f = state.predict(x);
  for (int m : {1, 3, 10}) {
    TsConfig cfg;
    cfg.nu = 0.0;
    cfg.samples = m;
    cfg.epsilon = 0.25;
    const AdjustedScores s = ts_sampled_scores(state, x, cfg, rng);
    CHECK(s.offset == 0.25);
    for (int i = 0; i < 5; ++i) CHECK(s.scores[static_cast<std::size_t>(i)] == f[i]);
  }
}

TEST_CASE("TS sample spread uses lambda times the squared width") {
  const double lambda = 4.0;
  NeuralBandit state(kShape, lambda, quick_schedule(), 1, 2);
  testutil::Rng rng(9);
  const Matrix x = paired_contexts(1, rng);
  const double sd_expected = std::sqrt(lambda) * state.widths(x)[0];
  TsConfig cfg;
  cfg.samples = 1;
  const int trials = 20000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < trials; ++i) {
    const double v = ts_sampled_scores(state, x, cfg, rng).scores[0];
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt(sum_sq / trials - mean * mean);
  CHECK(std::abs(mean) < 4.0 * sd_expected / std::sqrt(trials));
  CHECK(sd == doctest::Approx(sd_expected).epsilon(0.03));
}

TEST_CASE("max of M draws exceeds the mean with probability 1 - 2^-M") {
  const NeuralBandit state(kShape, 1.0, quick_schedule(), 1, 2);
  testutil::Rng rng(10);
  const Matrix x = paired_contexts(1, rng);
  const double f = state.predict(x)[0];
  TsConfig cfg;
  cfg.samples = 10;
  const int trials = 100000;
  int above = 0;
  for (int i = 0; i < trials; ++i) {
    if (ts_sampled_scores(state, x, cfg, rng).scores[0] > f) ++above;
  }
  CHECK(static_cast<double>(above) / trials == doctest::Approx(1.0 - std::pow(2.0, -10)).epsilon(0.003));
}

TEST_CASE("sampled scores increase in M on average") {
  const NeuralBandit state(kShape, 1.0, quick_schedule(), 1, 2);
  testutil::Rng rng(11);
  const Matrix x = paired_contexts(1, rng);
  double prev = -1e300;
  for (int m : {1, 5, 10}) {
    TsConfig cfg;
    cfg.samples = m;
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) sum += ts_sampled_scores(state, x, cfg, rng).scores[0];
    CHECK(sum / 10000 > prev);
    prev = sum / 10000;
  }
}

TEST_CASE("optimistic sample count") {
  CHECK(optimistic_probability() ==
        doctest::Approx(1.0 / (4.0 * std::numbers::e * std::sqrt(std::numbers::pi))));
  CHECK(theory_sample_count(1) == 1);
  // Values evaluated independently from ceil(1 - ln K / ln(1 - p)).
  CHECK(theory_sample_count(2) == 15);
  CHECK(theory_sample_count(3) == 22);
  CHECK(theory_sample_count(4) == 28);
  CHECK(theory_sample_count(5) == 32);
  for (int k = 1; k < 200; ++k) CHECK(theory_sample_count(k + 1) >= theory_sample_count(k));
  CHECK_THROWS_AS(theory_sample_count(0), ConfigError);
}

TEST_CASE("theory exploration variance") {
  const double nu = theory_exploration_variance(1.0, 0.5, 3.0, 100.0, 10.0, 1.0);
  CHECK(nu == doctest::Approx(1.0 + 0.5 * std::sqrt(3.0 * std::log1p(1000.0) + 2.0 +
                                                    2.0 * std::log(100.0))));
  CHECK_THROWS_AS(theory_exploration_variance(1, 1, 1, 100, 10, 0.0), ConfigError);
}

TEST_CASE("super arm selection") {
  const TopKOracle oracle;
  AdjustedScores a{{0.9, 0.1, 0.8, 0.2, 0.5}, 0.0};
  CHECK(select_super_arm(a, oracle, 2).arms() == std::vector<int>{0, 2});
  a.offset = -17.5;
  CHECK(select_super_arm(a, oracle, 2).arms() == std::vector<int>{0, 2});
  AdjustedScores ties{{0.3, 0.3, 0.3, 0.1}, 0.0};
  CHECK(select_super_arm(ties, oracle, 2).arms() == std::vector<int>{0, 1});

  testutil::Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    AdjustedScores s{testutil::uniform_scores(7, rng), 0.0};
    const SuperArm base = select_super_arm(s, oracle, 3);
    s.offset = testutil::uniform_scores(1, rng, -5.0, 5.0)[0];
    CHECK(select_super_arm(s, oracle, 3) == base);
    CHECK(base.size() == 3);
  }
}

TEST_CASE("observe updates the design once per chosen arm") {
  TrainingSchedule sched = quick_schedule();
  sched.train_every = 0;
  NeuralBandit state(kShape, 1.0, sched, 1, 2);
  testutil::Rng rng(13);
  state.observe(paired_contexts(3, rng), testutil::uniform_scores(3, rng));
  CHECK(state.design().updates_applied() == 3);
  CHECK(state.round() == 1);
  CHECK(state.history().size() == 1);
  CHECK_THROWS_AS(state.observe(paired_contexts(3, rng), testutil::uniform_scores(2, rng)),
                  ContractError);
}

TEST_CASE("without training the network stays at init and predicts zero") {
  TrainingSchedule sched = quick_schedule();
  sched.train_every = 0;
  NeuralBandit state(kShape, 1.0, sched, 1, 2);
  testutil::Rng rng(14);
  for (int t = 0; t < 20; ++t) state.observe(paired_contexts(2, rng), testutil::uniform_scores(2, rng));
  CHECK(state.params().theta == state.initial_params().theta);
  const Matrix x = paired_contexts(6, rng);
  CHECK(state.predict(x).cwiseAbs().maxCoeff() < 1e-12);
  const AdjustedScores u = ucb_scores(state, x, UcbConfig{});
  const Vector w = state.widths(x);
  for (int i = 0; i < 6; ++i) CHECK(u.scores[static_cast<std::size_t>(i)] == doctest::Approx(w[i]));
}

TEST_CASE("identical inputs reproduce identical selections") {
  const auto play = [](std::uint64_t seed) {
    testutil::Rng env(99);
    testutil::Rng ts_rng(seed);
    NeuralBandit state(kShape, 1.0, quick_schedule(), 3, 4);
    const TopKOracle oracle;
    TsConfig cfg;
    std::vector<SuperArm> picks;
    for (int t = 0; t < 100; ++t) {
      const Matrix x = paired_contexts(6, env);
      const SuperArm s = select_super_arm(ts_sampled_scores(state, x, cfg, ts_rng), oracle, 2);
      Matrix chosen(kShape.input_dim, 2);
      std::vector<double> v;
      for (std::size_t j = 0; j < 2; ++j) {
        chosen.col(static_cast<Eigen::Index>(j)) = x.col(s.arms()[j]);
        v.push_back(x.col(s.arms()[j]).sum());
      }
      state.observe(chosen, v);
      picks.push_back(s);
    }
    return picks;
  };
  CHECK(play(5) == play(5));
}
