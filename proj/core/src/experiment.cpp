#include "combandit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "combandit/baselines.hpp"
#include "combandit/errors.hpp"
#include "combandit/random.hpp"

namespace combandit {

namespace {

// Stream ids for derive_seed; the environment stream does not depend on the
// algorithm, so all algorithms see the same contexts and noise for a run.
constexpr std::uint64_t kEnvStream = 100;
constexpr std::uint64_t kInitStream = 200;
constexpr std::uint64_t kTrainStream = 201;
constexpr std::uint64_t kSampleStream = 202;
constexpr std::uint64_t kProbeStream = 300;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt_double(v[i]);
  }
  return out;
}

std::vector<double> default_discounts(int k) {
  std::vector<double> out(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = 1.0 / (i + 1);
  return out;
}

ExperimentConfig practical_base() {
  ExperimentConfig c;
  c.lambda = 1.0;
  c.training.kind = TrainingSchedule::Kind::mini_batch;
  c.training.train_every = 10;
  c.training.epochs = 100;
  c.training.batch_groups = 100;
  c.training.eta = 0.01;
  c.gamma = 1.0;
  c.nu = 1.0;
  c.samples = 10;
  c.epsilon = 0.0;
  c.alpha_lin = 1.0;
  c.env.noise_sd = 0.1;
  c.env.pairing = true;
  c.depth = 2;
  return c;
}

}  // namespace

Algorithm parse_algorithm(const std::string& name) {
  if (name == "cnucb") return Algorithm::cnucb;
  if (name == "cnts") return Algorithm::cnts;
  if (name == "cnts1") return Algorithm::cnts1;
  if (name == "comblinucb") return Algorithm::comblinucb;
  if (name == "comblints") return Algorithm::comblints;
  throw ConfigError("unknown algorithm '" + name +
                    "' (expected cnucb, cnts, cnts1, comblinucb, comblints, cnucb-d or cnts-d)");
}

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::cnucb: return "cnucb";
    case Algorithm::cnts: return "cnts";
    case Algorithm::cnts1: return "cnts1";
    case Algorithm::comblinucb: return "comblinucb";
    case Algorithm::comblints: return "comblints";
  }
  return "?";
}

bool is_neural(Algorithm algorithm) {
  return algorithm == Algorithm::cnucb || algorithm == Algorithm::cnts ||
         algorithm == Algorithm::cnts1;
}

void ExperimentConfig::validate() const {
  env.validate();
  if (horizon < 1) throw ConfigError("T must be at least 1");
  if (runs < 1) throw ConfigError("runs must be at least 1");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (doubling && !is_neural(algorithm)) {
    throw ConfigError("doubling applies to neural algorithms only");
  }
  if (is_neural(algorithm)) {
    NetworkShape{policy_input_dim(), width, depth}.validate();
    if (training.eta <= 0.0) throw ConfigError("eta must be positive");
    if (training.epochs < 0 || training.gd_steps < 0) {
      throw ConfigError("epochs and gd_steps must be non-negative");
    }
    if (training.batch_groups < 1) throw ConfigError("batch_super_arms must be at least 1");
    if (algorithm == Algorithm::cnucb) {
      ucb_config().validate();
    } else {
      ts_config().validate();
    }
    if (doubling) epoch_schedule().validate();
  }
  if (alpha_lin < 0.0) throw ConfigError("alpha_lin must be non-negative");
  if (nu < 0.0) throw ConfigError("nu must be non-negative");
  if (alpha_oracle && !(*alpha_oracle > 0.0 && *alpha_oracle <= 1.0)) {
    throw ConfigError("alpha_oracle must lie in (0, 1]");
  }
  if (alpha_oracle && env.feedback.kind == FeedbackKind::position_based) {
    throw ConfigError("alpha_oracle is not supported with position_based feedback");
  }
  if (ntk_cap < 1) throw ConfigError("ntk_cap must be at least 1");
}

UcbConfig ExperimentConfig::ucb_config() const {
  UcbConfig c;
  c.mode = mode;
  c.gamma_const = gamma;
  c.s_norm = s_norm;
  c.sigma_sub = sigma_sub;
  c.delta = delta;
  c.c_gamma1 = c_gamma1;
  c.c_gamma2 = c_gamma2;
  c.c_gamma3 = c_gamma3;
  c.c_1 = c_1;
  c.c_3 = c_3;
  c.c_4 = c_4;
  c.super_arm_size = env.super_arm_size;
  return c;
}

TsConfig ExperimentConfig::ts_config() const {
  TsConfig c;
  c.mode = mode;
  c.nu = nu;
  c.samples = algorithm == Algorithm::cnts1 ? 1 : samples;
  c.epsilon = epsilon;
  return c;
}

EpochSchedule ExperimentConfig::epoch_schedule() const {
  EpochSchedule s;
  s.initial_period = epoch_t0;
  s.period = epoch_t0;
  s.width_rule = width_schedule;
  s.base_width = width;
  s.max_width = width_max;
  s.synchronized_seeds = true;
  return s;
}

int ExperimentConfig::policy_input_dim() const {
  if (env.feedback.kind == FeedbackKind::position_based) {
    return augmented_dim(env.d, env.super_arm_size, env.pairing);
  }
  return env.d;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::to_key_values() const {
  std::string algo = to_string(algorithm);
  if (doubling) algo += "-d";
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"preset", preset.empty() ? "none" : preset},
      {"algorithm", algo},
      {"doubling", b(doubling)},
      {"d", std::to_string(env.d)},
      {"N", std::to_string(env.num_arms)},
      {"K", std::to_string(env.super_arm_size)},
      {"T", std::to_string(horizon)},
      {"score_fn", to_string(env.score)},
      {"renormalize", b(env.renormalize)},
      {"noise_sd", fmt_double(env.noise_sd)},
      {"feedback", to_string(env.feedback.kind)},
      {"pairing", b(env.pairing)},
      {"position_quality", env.feedback.position_quality.empty()
                               ? "none"
                               : fmt_list(env.feedback.position_quality)},
      {"cascade_discount", env.feedback.cascade_discount.empty()
                               ? "none"
                               : fmt_list(env.feedback.cascade_discount)},
      {"m", std::to_string(width)},
      {"L", std::to_string(depth)},
      {"lambda", fmt_double(lambda)},
      {"eta", fmt_double(training.eta)},
      {"training", training.kind == TrainingSchedule::Kind::full_batch ? "full_batch" : "mini_batch"},
      {"gd_steps", std::to_string(training.gd_steps)},
      {"epochs", std::to_string(training.epochs)},
      {"train_every", std::to_string(training.train_every)},
      {"batch_super_arms", std::to_string(training.batch_groups)},
      {"warm_start", b(training.warm_start)},
      {"mode", mode == ExplorationMode::theory ? "theory" : "practical"},
      {"gamma", fmt_double(gamma)},
      {"nu", fmt_double(nu)},
      {"M", std::to_string(samples)},
      {"epsilon", fmt_double(epsilon)},
      {"alpha_lin", fmt_double(alpha_lin)},
      {"s_norm", fmt_double(s_norm)},
      {"sigma_sub", fmt_double(sigma_sub)},
      {"delta", fmt_double(delta)},
      {"c_gamma1", fmt_double(c_gamma1)},
      {"c_gamma2", fmt_double(c_gamma2)},
      {"c_gamma3", fmt_double(c_gamma3)},
      {"c_1", fmt_double(c_1)},
      {"c_3", fmt_double(c_3)},
      {"c_4", fmt_double(c_4)},
      {"epoch_t0", std::to_string(epoch_t0)},
      {"width_schedule", width_schedule == EpochSchedule::Width::geometric ? "geometric" : "constant"},
      {"width_max", std::to_string(width_max)},
      {"alpha_oracle", alpha_oracle ? fmt_double(*alpha_oracle) : "none"},
      {"runs", std::to_string(runs)},
      {"base_seed", std::to_string(base_seed)},
      {"ntk_cap", std::to_string(ntk_cap)},
  };
}

std::string ExperimentConfig::metadata_line() const {
  std::string out;
  for (const auto& [k, v] : to_key_values()) {
    if (!out.empty()) out += ' ';
    out += k + "=" + v;
  }
  return out;
}

ExperimentConfig ExperimentConfig::from_map(ConfigMap map) {
  const std::string preset_name = map.get_string("preset", "none");
  ExperimentConfig c = preset_name == "none" ? practical_base() : combandit::preset(preset_name);

  std::string algo = map.get_string("algorithm", to_string(c.algorithm) + (c.doubling ? "-d" : ""));
  bool doubled = false;
  if (algo.size() > 2 && algo.substr(algo.size() - 2) == "-d") {
    doubled = true;
    algo.resize(algo.size() - 2);
  }
  c.algorithm = parse_algorithm(algo);
  c.doubling = map.get_bool("doubling", doubled || (c.doubling && !map.contains("algorithm")));
  if (doubled && !c.doubling) throw ConfigError("algorithm " + algo + "-d conflicts with doubling=false");

  c.env.d = map.get_int("d", c.env.d);
  c.env.num_arms = map.get_int("N", c.env.num_arms);
  c.env.super_arm_size = map.get_int("K", c.env.super_arm_size);
  c.horizon = map.get_int("T", c.horizon);
  c.env.score = parse_score_kind(map.get_string("score_fn", to_string(c.env.score)));
  c.env.renormalize = map.get_bool("renormalize", c.env.renormalize);
  c.env.noise_sd = map.get_double("noise_sd", c.env.noise_sd);
  c.env.feedback.kind = parse_feedback_kind(map.get_string("feedback", to_string(c.env.feedback.kind)));
  c.env.pairing = map.get_bool("pairing", c.env.pairing);
  const auto list_or_none = [&](const std::string& key, std::vector<double> current) {
    if (map.contains(key) && map.entries().at(key) == "none") {
      (void)map.get_string(key, "");
      return std::vector<double>{};
    }
    return map.get_doubles(key, current);
  };
  c.env.feedback.position_quality = list_or_none("position_quality", c.env.feedback.position_quality);
  c.env.feedback.cascade_discount = list_or_none("cascade_discount", c.env.feedback.cascade_discount);
  const int k = c.env.super_arm_size;
  if (c.env.feedback.kind == FeedbackKind::position_based && c.env.feedback.position_quality.empty()) {
    c.env.feedback.position_quality = default_discounts(k);
  }
  if (c.env.feedback.kind == FeedbackKind::cascade && c.env.feedback.cascade_discount.empty()) {
    c.env.feedback.cascade_discount = default_discounts(k);
  }

  c.width = map.get_int("m", c.width);
  c.depth = map.get_int("L", c.depth);
  c.lambda = map.get_double("lambda", c.lambda);
  c.training.eta = map.get_double("lr", c.training.eta);
  c.training.eta = map.get_double("eta", c.training.eta);
  const std::string training =
      map.get_string("training", c.training.kind == TrainingSchedule::Kind::full_batch ? "full_batch"
                                                                                       : "mini_batch");
  if (training == "full_batch") {
    c.training.kind = TrainingSchedule::Kind::full_batch;
  } else if (training == "mini_batch") {
    c.training.kind = TrainingSchedule::Kind::mini_batch;
  } else {
    throw ConfigError("training must be full_batch or mini_batch, got '" + training + "'");
  }
  c.training.gd_steps = map.get_int("gd_steps", c.training.gd_steps);
  c.training.epochs = map.get_int("epochs", c.training.epochs);
  c.training.train_every = map.get_int("train_every", c.training.train_every);
  c.training.batch_groups = map.get_int("batch_super_arms", c.training.batch_groups);
  c.training.warm_start = map.get_bool("warm_start", c.training.warm_start);

  const std::string mode = map.get_string("mode", c.mode == ExplorationMode::theory ? "theory" : "practical");
  if (mode == "theory") {
    c.mode = ExplorationMode::theory;
  } else if (mode == "practical") {
    c.mode = ExplorationMode::practical;
  } else {
    throw ConfigError("mode must be theory or practical, got '" + mode + "'");
  }
  c.gamma = map.get_double("gamma", c.gamma);
  c.nu = map.get_double("nu", c.nu);
  c.samples = map.get_int("M", c.samples);
  c.epsilon = map.get_double("epsilon", c.epsilon);
  c.alpha_lin = map.get_double("alpha_lin", c.alpha_lin);
  c.s_norm = map.get_double("s_norm", c.s_norm);
  c.sigma_sub = map.get_double("sigma_sub", c.sigma_sub);
  c.delta = map.get_double("delta", c.delta);
  c.c_gamma1 = map.get_double("c_gamma1", c.c_gamma1);
  c.c_gamma2 = map.get_double("c_gamma2", c.c_gamma2);
  c.c_gamma3 = map.get_double("c_gamma3", c.c_gamma3);
  c.c_1 = map.get_double("c_1", c.c_1);
  c.c_3 = map.get_double("c_3", c.c_3);
  c.c_4 = map.get_double("c_4", c.c_4);

  c.epoch_t0 = map.get_int("epoch_t0", c.epoch_t0);
  const std::string ws = map.get_string(
      "width_schedule", c.width_schedule == EpochSchedule::Width::geometric ? "geometric" : "constant");
  if (ws == "constant") {
    c.width_schedule = EpochSchedule::Width::constant;
  } else if (ws == "geometric") {
    c.width_schedule = EpochSchedule::Width::geometric;
  } else {
    throw ConfigError("width_schedule must be constant or geometric, got '" + ws + "'");
  }
  c.width_max = map.get_int("width_max", c.width_max);

  const std::string alpha = map.get_string("alpha_oracle", c.alpha_oracle ? fmt_double(*c.alpha_oracle) : "none");
  if (alpha == "none") {
    c.alpha_oracle.reset();
  } else {
    ConfigMap tmp;
    tmp.set("alpha_oracle", alpha);
    c.alpha_oracle = tmp.get_double("alpha_oracle", 1.0);
  }

  c.runs = map.get_int("runs", c.runs);
  c.base_seed = map.get_uint64("base_seed", c.base_seed);
  c.workers = map.get_int("workers", c.workers);
  c.ntk_cap = map.get_int("ntk_cap", c.ntk_cap);

  map.require_all_consumed();
  c.validate();
  return c;
}

std::vector<std::string> preset_names() {
  return {"exp1-h1", "exp1-h2", "exp1-h3", "exp2-d40", "exp2-d80",
          "exp2-d120", "desk-h1", "desk-h2", "desk-h3"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c = practical_base();
  c.preset = name;
  const auto score_from = [](char digit) {
    switch (digit) {
      case '1': return ScoreKind::h1_linear;
      case '2': return ScoreKind::h2_quadratic;
      default: return ScoreKind::h3_cosine;
    }
  };
  if (name == "exp1-h1" || name == "exp1-h2" || name == "exp1-h3") {
    c.env.d = 80;
    c.env.num_arms = 20;
    c.env.super_arm_size = 4;
    c.width = 100;
    c.env.score = score_from(name.back());
    c.horizon = name == "exp1-h3" ? 4000 : 2000;
    c.runs = 20;
    c.algorithm = Algorithm::cnucb;
  } else if (name == "exp2-d40" || name == "exp2-d80" || name == "exp2-d120") {
    c.env.d = name == "exp2-d40" ? 40 : name == "exp2-d80" ? 80 : 120;
    c.env.num_arms = 20;
    c.env.super_arm_size = 4;
    c.width = 100;
    c.env.score = ScoreKind::h2_quadratic;
    c.horizon = name == "exp2-d120" ? 4000 : 2000;
    c.runs = 20;
    c.algorithm = Algorithm::cnts;
  } else if (name == "desk-h1" || name == "desk-h2" || name == "desk-h3") {
    c.env.d = 20;
    c.env.num_arms = 10;
    c.env.super_arm_size = 3;
    c.horizon = 500;
    c.width = 50;
    c.runs = 5;
    c.training.train_every = 10;
    c.training.epochs = 50;
    c.training.eta = 0.01;
    c.env.noise_sd = 0.1;
    c.env.score = score_from(name.back());
    c.algorithm = Algorithm::cnucb;
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
  }
  return c;
}

std::string describe_preset(const ExperimentConfig& c) {
  std::ostringstream out;
  out << c.preset << ": d=" << c.env.d << " N=" << c.env.num_arms << " K=" << c.env.super_arm_size
      << " T=" << c.horizon << " m=" << c.width << " L=" << c.depth
      << " score_fn=" << to_string(c.env.score) << " runs=" << c.runs
      << " train_every=" << c.training.train_every << " epochs=" << c.training.epochs
      << " eta=" << c.training.eta << " noise_sd=" << c.env.noise_sd;
  return out.str();
}

void check_reward(const RewardFunction& reward, int num_arms, int k, std::uint64_t seed) {
  Rng rng(derive_seed(seed, kProbeStream));
  const ProbeResult mono = probe_monotonicity(reward, num_arms, k, 1000, rng);
  if (!mono.passed) {
    throw ConfigError("reward function failed the monotonicity probe (worst drop " +
                      fmt_double(mono.worst) + ")");
  }
  // The sum reward is sqrt(K)-Lipschitz in the l2 norm over the chosen arms.
  const double c0 = std::sqrt(static_cast<double>(k));
  const ProbeResult lip = probe_lipschitz(reward, num_arms, k, c0, 1000, rng);
  if (!lip.passed) {
    throw ConfigError("reward function failed the Lipschitz probe with C0 = sqrt(K) = " +
                      fmt_double(c0) + " (worst excess " + fmt_double(lip.worst) + ")");
  }
}

namespace {

/// Uniform view over the neural and linear policies.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual AdjustedScores scores(const Matrix& candidates) = 0;
  virtual void observe(const Matrix& chosen, std::span<const double> values) = 0;
};

class NeuralPolicy final : public Policy {
 public:
  NeuralPolicy(const ExperimentConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), ucb_(cfg.ucb_config()), ts_(cfg.ts_config()),
        sample_rng_(derive_seed(seed, kSampleStream)) {
    const int dim = cfg.policy_input_dim();
    const std::uint64_t init_seed = derive_seed(seed, kInitStream);
    const std::uint64_t train_seed = derive_seed(seed, kTrainStream);
    if (cfg.doubling) {
      doubled_ = std::make_unique<DoublingBandit>(dim, cfg.depth, cfg.lambda, cfg.training,
                                                  cfg.epoch_schedule(), init_seed, train_seed);
    } else {
      plain_ = std::make_unique<NeuralBandit>(NetworkShape{dim, cfg.width, cfg.depth}, cfg.lambda,
                                              cfg.training, init_seed, train_seed);
    }
  }

  AdjustedScores scores(const Matrix& candidates) override {
    const NeuralBandit& s = doubled_ ? doubled_->state() : *plain_;
    if (cfg_.algorithm == Algorithm::cnucb) return ucb_scores(s, candidates, ucb_);
    return ts_sampled_scores(s, candidates, ts_, sample_rng_);
  }

  void observe(const Matrix& chosen, std::span<const double> values) override {
    if (doubled_) {
      doubled_->observe(chosen, values);
    } else {
      plain_->observe(chosen, values);
    }
  }

 private:
  const ExperimentConfig& cfg_;
  UcbConfig ucb_;
  TsConfig ts_;
  Rng sample_rng_;
  std::unique_ptr<NeuralBandit> plain_;
  std::unique_ptr<DoublingBandit> doubled_;
};

class LinearPolicy final : public Policy {
 public:
  LinearPolicy(const ExperimentConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), state_(cfg.policy_input_dim(), cfg.lambda),
        sample_rng_(derive_seed(seed, kSampleStream)) {}

  AdjustedScores scores(const Matrix& candidates) override {
    const Vector v = cfg_.algorithm == Algorithm::comblinucb
                         ? comblinucb_scores(state_, candidates, cfg_.alpha_lin)
                         : comblints_scores(state_, candidates, cfg_.nu, sample_rng_);
    AdjustedScores out;
    out.scores.assign(v.data(), v.data() + v.size());
    return out;
  }

  void observe(const Matrix& chosen, std::span<const double> values) override {
    state_.observe(chosen, values);
  }

 private:
  const ExperimentConfig& cfg_;
  LinearState state_;
  Rng sample_rng_;
};

std::unique_ptr<Policy> make_policy(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (is_neural(cfg.algorithm)) return std::make_unique<NeuralPolicy>(cfg, seed);
  return std::make_unique<LinearPolicy>(cfg, seed);
}

Matrix candidate_contexts(const ExperimentConfig& cfg, const Matrix& contexts) {
  if (cfg.env.feedback.kind != FeedbackKind::position_based) return contexts;
  const int n = cfg.env.num_arms;
  const int k = cfg.env.super_arm_size;
  Matrix out(cfg.policy_input_dim(), static_cast<Eigen::Index>(n) * k);
  for (int i = 0; i < n; ++i) {
    const Vector x = contexts.col(i);
    for (int p = 0; p < k; ++p) {
      out.col(static_cast<Eigen::Index>(i) * k + p) =
          augment_with_position(as_span(x), p, k, cfg.env.pairing);
    }
  }
  return out;
}

}  // namespace

RunRecord run_single(const ExperimentConfig& config, int run_id,
                     std::shared_ptr<const RewardFunction> reward) {
  config.validate();
  const std::uint64_t seed = config.base_seed ^ static_cast<std::uint64_t>(run_id);
  Environment env(config.env, derive_seed(seed, kEnvStream), std::move(reward));
  const auto policy = make_policy(config, seed);

  std::shared_ptr<const SuperArmOracle> oracle = std::make_shared<TopKOracle>();
  if (config.alpha_oracle) oracle = alpha_wrap(oracle, *config.alpha_oracle);
  const double alpha = config.alpha_oracle.value_or(1.0);
  const bool positional = config.env.feedback.kind == FeedbackKind::position_based;
  const int k = config.env.super_arm_size;
  const int n = config.env.num_arms;

  RunRecord rec;
  rec.trace.run_id = run_id;
  rec.trace.instant.reserve(static_cast<std::size_t>(config.horizon));
  rec.trace.cumulative.reserve(static_cast<std::size_t>(config.horizon));
  double cumulative = 0.0;
  for (int t = 1; t <= config.horizon; ++t) {
    const Matrix& contexts = env.next_round();
    const Matrix candidates = candidate_contexts(config, contexts);
    const AdjustedScores adjusted = policy->scores(candidates);
    const std::vector<double> shifted = adjusted.shifted();

    std::vector<int> arms;
    if (positional) {
      Matrix s(n, k);
      for (int i = 0; i < n; ++i) {
        for (int p = 0; p < k; ++p) s(i, p) = shifted[static_cast<std::size_t>(i * k + p)];
      }
      arms = assignment_oracle(s).arm_at;
    } else {
      arms = oracle->select(shifted, k).arms();
      // Position order: highest adjusted score first, ties to the lower index.
      std::stable_sort(arms.begin(), arms.end(), [&](int a, int b) {
        return shifted[static_cast<std::size_t>(a)] > shifted[static_cast<std::size_t>(b)];
      });
    }

    const RoundOutcome outcome = env.observe_round(arms);
    const double regret = env.expected_regret_increment(arms, alpha);
    cumulative += regret;
    rec.trace.instant.push_back(regret);
    rec.trace.cumulative.push_back(cumulative);

    Matrix chosen(candidates.rows(), outcome.observation_count);
    for (int j = 0; j < outcome.observation_count; ++j) {
      const int arm = outcome.observed_arms[static_cast<std::size_t>(j)];
      chosen.col(j) = positional ? candidates.col(static_cast<Eigen::Index>(arm) * k + j)
                                 : candidates.col(arm);
    }
    policy->observe(chosen, outcome.observed_scores);
    rec.selections.push_back(std::move(arms));
  }
  return rec;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("COMBANDIT_WORKERS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("COMBANDIT_WORKERS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<RegretTrace> run_experiment(const ExperimentConfig& config,
                                        std::shared_ptr<const RewardFunction> reward) {
  config.validate();
  if (!reward) reward = std::make_shared<SumReward>();
  check_reward(*reward, config.env.num_arms, config.env.super_arm_size, config.base_seed);

  std::vector<RegretTrace> traces(static_cast<std::size_t>(config.runs));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(config.runs));
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int r = next++; r < config.runs; r = next++) {
      try {
        traces[static_cast<std::size_t>(r)] = run_single(config, r, reward).trace;
      } catch (...) {
        errors[static_cast<std::size_t>(r)] = std::current_exception();
      }
    }
  };
  const int workers = std::min(resolve_workers(config.workers), config.runs);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return traces;
}

std::pair<double, double> quarter_averages(const std::vector<double>& instant) {
  if (instant.empty()) throw DataError("quarter averages need a non-empty trace");
  const std::size_t q = std::max<std::size_t>(1, instant.size() / 4);
  double first = 0.0;
  double last = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    first += instant[i];
    last += instant[instant.size() - q + i];
  }
  return {first / static_cast<double>(q), last / static_cast<double>(q)};
}

Summary summarize(const std::vector<RegretTrace>& traces) {
  if (traces.empty()) throw DataError("summarize needs at least one trace");
  const std::size_t len = traces.front().cumulative.size();
  for (const auto& tr : traces) {
    if (tr.cumulative.size() != len || tr.instant.size() != len) {
      throw DataError("summarize: traces have different lengths");
    }
  }
  if (len == 0) throw DataError("summarize: traces are empty");
  const double n = static_cast<double>(traces.size());
  Summary s;
  s.mean.assign(len, 0.0);
  s.std.assign(len, 0.0);
  std::vector<double> mean_instant(len, 0.0);
  for (const auto& tr : traces) {
    for (std::size_t t = 0; t < len; ++t) {
      s.mean[t] += tr.cumulative[t];
      mean_instant[t] += tr.instant[t];
    }
  }
  for (std::size_t t = 0; t < len; ++t) {
    s.mean[t] /= n;
    mean_instant[t] /= n;
  }
  for (const auto& tr : traces) {
    for (std::size_t t = 0; t < len; ++t) {
      const double dev = tr.cumulative[t] - s.mean[t];
      s.std[t] += dev * dev;
    }
  }
  for (double& v : s.std) v = std::sqrt(v / n);
  std::tie(s.first_quarter, s.last_quarter) = quarter_averages(mean_instant);
  return s;
}

void write_traces(std::ostream& out, const std::vector<RegretTrace>& traces,
                  const std::string& metadata) {
  out << "# " << metadata << "\n";
  out << "run_id,t,instant_regret,cum_regret\n";
  for (const auto& tr : traces) {
    for (std::size_t t = 0; t < tr.instant.size(); ++t) {
      out << tr.run_id << ',' << (t + 1) << ',' << fmt_double(tr.instant[t]) << ','
          << fmt_double(tr.cumulative[t]) << '\n';
    }
  }
}

std::pair<std::vector<RegretTrace>, std::string> read_traces(std::istream& in) {
  std::string line;
  std::string metadata;
  int lineno = 0;
  const auto fail = [&](const std::string& what) {
    throw DataError("trace CSV line " + std::to_string(lineno) + ": " + what);
  };
  bool header = false;
  std::vector<RegretTrace> traces;
  std::map<int, std::size_t> index;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      metadata = trim(line.substr(1));
      continue;
    }
    if (!header) {
      if (line != "run_id,t,instant_regret,cum_regret") fail("unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string f[4];
    for (auto& field : f) {
      if (!std::getline(ss, field, ',')) fail("expected 4 fields");
    }
    std::string extra;
    if (std::getline(ss, extra, ',')) fail("expected 4 fields");
    char* end = nullptr;
    const long run = std::strtol(f[0].c_str(), &end, 10);
    if (*end != '\0' || f[0].empty()) fail("bad run_id '" + f[0] + "'");
    const long t = std::strtol(f[1].c_str(), &end, 10);
    if (*end != '\0' || f[1].empty()) fail("bad t '" + f[1] + "'");
    const double inst = std::strtod(f[2].c_str(), &end);
    if (*end != '\0' || f[2].empty()) fail("bad instant_regret '" + f[2] + "'");
    const double cum = std::strtod(f[3].c_str(), &end);
    if (*end != '\0' || f[3].empty()) fail("bad cum_regret '" + f[3] + "'");
    auto it = index.find(static_cast<int>(run));
    if (it == index.end()) {
      it = index.emplace(static_cast<int>(run), traces.size()).first;
      traces.push_back(RegretTrace{static_cast<int>(run), {}, {}});
    }
    RegretTrace& tr = traces[it->second];
    if (t != static_cast<long>(tr.instant.size()) + 1) fail("rounds out of order");
    tr.instant.push_back(inst);
    tr.cumulative.push_back(cum);
  }
  if (!header) throw DataError("trace CSV has no header");
  return {std::move(traces), metadata};
}

void write_summary(std::ostream& out, const Summary& summary) {
  out << "# first_quarter_avg=" << fmt_double(summary.first_quarter)
      << " last_quarter_avg=" << fmt_double(summary.last_quarter) << "\n";
  out << "t,mean_cum_regret,std_cum_regret\n";
  for (std::size_t t = 0; t < summary.mean.size(); ++t) {
    out << (t + 1) << ',' << fmt_double(summary.mean[t]) << ',' << fmt_double(summary.std[t])
        << '\n';
  }
}

}  // namespace combandit
