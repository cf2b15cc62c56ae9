#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "combandit/config.hpp"
#include "combandit/errors.hpp"
#include "combandit/experiment.hpp"
#include "combandit/random.hpp"

using namespace combandit;

namespace {

RegretTrace trace_from(int id, std::vector<double> instant) {
  RegretTrace t;
  t.run_id = id;
  double c = 0.0;
  for (double v : instant) {
    c += v;
    t.cumulative.push_back(c);
  }
  t.instant = std::move(instant);
  return t;
}

ExperimentConfig tiny(const std::string& extra = "") {
  return ExperimentConfig::from_map(ConfigMap::parse(
      "preset = desk-h2\nT = 30\nruns = 3\nm = 10\nepochs = 5\nworkers = 1\n" + extra));
}

std::string emit(const std::vector<RegretTrace>& traces, const std::string& meta) {
  std::ostringstream out;
  write_traces(out, traces, meta);
  return out.str();
}

}  // namespace

TEST_CASE("summary of one trace") {
  const Summary s = summarize({trace_from(0, {0.5, 0.25, 0.0, 1.0})});
  CHECK(s.mean == std::vector<double>{0.5, 0.75, 0.75, 1.75});
  CHECK(s.std == std::vector<double>(4, 0.0));
  CHECK(s.first_quarter == 0.5);
  CHECK(s.last_quarter == 1.0);
}

TEST_CASE("summary of two constant traces") {
  const Summary s = summarize({trace_from(0, {1, 1, 1, 1}), trace_from(1, {3, 3, 3, 3})});
  for (std::size_t t = 0; t < 4; ++t) {
    CHECK(s.mean[t] == doctest::Approx(2.0 * (t + 1)));
    CHECK(s.std[t] == doctest::Approx(1.0 * (t + 1)));
  }
}

TEST_CASE("summary of a 3 x 5 toy matrix") {
  // Cumulative rows: (1 1 1 1 1), (0 1 1 2 2), (2 2 3 3 3), recomputed by hand.
  const Summary s = summarize({trace_from(0, {1, 0, 0, 0, 0}), trace_from(1, {0, 1, 0, 1, 0}),
                               trace_from(2, {2, 0, 1, 0, 0})});
  const std::vector<double> mean{1.0, 4.0 / 3.0, 5.0 / 3.0, 2.0, 2.0};
  const std::vector<double> sd{std::sqrt(2.0 / 3.0), std::sqrt(2.0 / 9.0), std::sqrt(8.0 / 9.0),
                               std::sqrt(2.0 / 3.0), std::sqrt(2.0 / 3.0)};
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(s.mean[t] == doctest::Approx(mean[t]).epsilon(1e-14));
    CHECK(s.std[t] == doctest::Approx(sd[t]).epsilon(1e-14));
  }
  CHECK(s.first_quarter == doctest::Approx(1.0));
  CHECK(s.last_quarter == doctest::Approx(0.0));
}

TEST_CASE("summary errors") {
  CHECK_THROWS_AS(summarize({}), DataError);
  CHECK_THROWS_AS(summarize({trace_from(0, {1, 2}), trace_from(1, {1})}), DataError);
  CHECK_THROWS_AS(quarter_averages({}), DataError);
  const auto [first, last] = quarter_averages({4, 0, 0, 0, 0, 0, 0, 2});
  CHECK(first == 2.0);
  CHECK(last == 1.0);
}

TEST_CASE("CSV round trip is exact") {
  const std::vector<RegretTrace> traces{trace_from(0, {0.1, 1.0 / 3.0, 2e-17, 0.0}),
                                        trace_from(1, {std::sqrt(2.0), 0.7, 1e300, 5.0})};
  const std::string text = emit(traces, "a=1 b=two");
  CHECK(text.rfind("# a=1 b=two\nrun_id,t,instant_regret,cum_regret\n", 0) == 0);
  std::istringstream in(text);
  const auto [back, meta] = read_traces(in);
  CHECK(back == traces);
  CHECK(meta == "a=1 b=two");
}

TEST_CASE("CSV reader rejects malformed input") {
  std::istringstream bad_header("# x=1\nrun,t,r,c\n0,1,0,0\n");
  CHECK_THROWS_AS(read_traces(bad_header), DataError);
  std::istringstream bad_order("# x=1\nrun_id,t,instant_regret,cum_regret\n0,2,0,0\n");
  CHECK_THROWS_AS(read_traces(bad_order), DataError);
}

TEST_CASE("summary CSV") {
  std::ostringstream out;
  write_summary(out, summarize({trace_from(0, {1, 0, 0, 0})}));
  CHECK(out.str().rfind("# first_quarter_avg=1 last_quarter_avg=0\nt,mean_cum_regret,std_cum_regret\n1,", 0) == 0);
}

TEST_CASE("runs are deterministic and seed-isolated") {
  const ExperimentConfig cfg = tiny();
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  CHECK(emit(a, cfg.metadata_line()) == emit(b, cfg.metadata_line()));

  const auto more = run_experiment(tiny("runs = 4\n"));
  for (std::size_t r = 0; r < a.size(); ++r) CHECK(more[r] == a[r]);

  const auto other = run_experiment(tiny("base_seed = 2\n"));
  CHECK(other[0] != a[0]);

  const auto parallel = run_experiment(tiny("workers = 3\n"));
  CHECK(parallel == a);

  for (const auto& tr : a) {
    CHECK(tr.cumulative.size() == 30);
    for (std::size_t t = 0; t < tr.instant.size(); ++t) {
      CHECK(tr.instant[t] >= 0.0);
      if (t > 0) CHECK(tr.cumulative[t] >= tr.cumulative[t - 1]);
    }
  }
}

TEST_CASE("single round trace is the first regret increment") {
  for (const char* algo : {"cnucb", "cnts", "comblinucb", "comblints"}) {
    const ExperimentConfig cfg = tiny(std::string("T = 1\nruns = 1\nalgorithm = ") + algo + "\n");
    const RunRecord rec = run_single(cfg, 0);
    REQUIRE(rec.trace.instant.size() == 1);
    Environment env(cfg.env, derive_seed(cfg.base_seed ^ 0, 100));
    env.next_round();
    CHECK(rec.trace.instant[0] == env.expected_regret_increment(rec.selections[0]));
    CHECK(rec.trace.cumulative[0] == rec.trace.instant[0]);
  }
}

TEST_CASE("every algorithm and feedback model runs") {
  for (const char* algo : {"cnucb", "cnts", "cnts1", "comblinucb", "comblints", "cnucb-d", "cnts-d"}) {
    const auto traces = run_experiment(tiny(std::string("runs = 1\nalgorithm = ") + algo + "\n"));
    CHECK(traces.size() == 1);
  }
  for (const char* fb : {"document_based", "position_based", "cascade"}) {
    const auto traces = run_experiment(tiny(std::string("runs = 1\nfeedback = ") + fb + "\n"));
    CHECK(traces[0].instant.size() == 30);
    for (double v : traces[0].instant) CHECK(v >= -1e-12);
  }
}

TEST_CASE("alpha oracle at 1 reproduces plain regret") {
  const auto plain = run_experiment(tiny());
  const auto alpha = run_experiment(tiny("alpha_oracle = 1\n"));
  CHECK(plain == alpha);
}

TEST_CASE("config parsing") {
  const ConfigMap m = ConfigMap::parse("# comment\n a = 1 \nb=x # trailing\n\nc = 2.5\n");
  CHECK(m.entries().at("a") == "1");
  CHECK(m.entries().at("b") == "x");
  CHECK(m.entries().size() == 3);
  try {
    (void)ConfigMap::parse("a = 1\nnot a pair\n", "file.conf");
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("file.conf:2") != std::string::npos);
  }
  ConfigMap typed = ConfigMap::parse("n = 3x\n");
  CHECK_THROWS_AS(typed.get_int("n", 0), ConfigError);
  CHECK_THROWS_AS(ConfigMap::load("/nonexistent/x.conf"), ConfigError);
  ConfigMap o;
  CHECK_THROWS_AS(o.apply_override("novalue"), ConfigError);
}

TEST_CASE("experiment config from keys") {
  CHECK_THROWS_AS(tiny("bogus_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(tiny("K = 11\n"), ConfigError);
  CHECK_THROWS_AS(tiny("algorithm = magic\n"), ConfigError);
  CHECK_THROWS_AS(tiny("m = 9\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_map(ConfigMap::parse("preset = exp9\n")), ConfigError);

  const ExperimentConfig lr = tiny("lr = 0.05\n");
  CHECK(lr.training.eta == 0.05);
  const ExperimentConfig d = tiny("algorithm = cnts-d\n");
  CHECK(d.doubling);
  CHECK(d.algorithm == Algorithm::cnts);
  CHECK(tiny("algorithm = cnts1\nM = 10\n").ts_config().samples == 1);

  ConfigMap map = ConfigMap::parse("preset = desk-h1\n");
  map.apply_override("T=50");
  map.apply_override("runs=2");
  const std::string meta = ExperimentConfig::from_map(map).metadata_line();
  CHECK(meta.find(" T=50 ") != std::string::npos);
  CHECK(meta.find(" runs=2 ") != std::string::npos);
  CHECK(meta.rfind("preset=desk-h1 ", 0) == 0);
}

TEST_CASE("presets") {
  const auto names = preset_names();
  for (const char* n : {"exp1-h1", "exp1-h2", "exp1-h3", "exp2-d40", "exp2-d80", "exp2-d120",
                        "desk-h1", "desk-h2", "desk-h3"}) {
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  }
  const ExperimentConfig e = preset("exp1-h3");
  CHECK(e.env.d == 80);
  CHECK(e.env.num_arms == 20);
  CHECK(e.env.super_arm_size == 4);
  CHECK(e.width == 100);
  CHECK(e.depth == 2);
  CHECK(e.horizon == 4000);
  CHECK(e.env.score == ScoreKind::h3_cosine);
  const ExperimentConfig desk = preset("desk-h2");
  CHECK(desk.env.d == 20);
  CHECK(desk.env.num_arms == 10);
  CHECK(desk.env.super_arm_size == 3);
  CHECK(desk.horizon == 500);
  CHECK(desk.width == 50);
  CHECK(desk.runs == 5);
  CHECK(desk.training.train_every == 10);
  CHECK(desk.training.epochs == 50);
  CHECK(desk.training.eta == 0.01);
  CHECK(desk.env.noise_sd == 0.1);
  CHECK(preset("exp2-d120").env.d == 120);
}

TEST_CASE("reward gate rejects a non-monotone plug-in") {
  struct Negated final : RewardFunction {
    double value(std::span<const int> arms, std::span<const double> s) const override {
      double t = 0.0;
      for (int a : arms) t -= s[static_cast<std::size_t>(a)];
      return t;
    }
  };
  CHECK_THROWS_AS(check_reward(Negated{}, 10, 3, 1), ConfigError);
  CHECK_NOTHROW(check_reward(SumReward{}, 10, 3, 1));
}

TEST_CASE("worker resolution") {
  CHECK(resolve_workers(3) == 3);
  CHECK(resolve_workers(0) >= 1);
}
