#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "combandit/design_state.hpp"
#include "combandit/oracles.hpp"
#include "combandit/score_net.hpp"

namespace combandit {

enum class ExplorationMode { theory, practical };

/// When and how the score network is retrained after an observation.
struct TrainingSchedule {
  enum class Kind { full_batch, mini_batch };

  Kind kind = Kind::mini_batch;
  int train_every = 10;  // <= 0 disables training
  int gd_steps = 100;    // full-batch iterations per training call
  int epochs = 100;      // mini-batch passes over the history per training call
  int batch_groups = 100;
  double eta = 0.01;
  bool warm_start = true;  // resume from theta_{t-1}; false restarts from theta_0
};

/// Per-run mutable state shared by CN-UCB and CN-TS: network, gram matrix,
/// round counter and the observation history used for training.
class NeuralBandit {
 public:
  NeuralBandit(NetworkShape shape, double lambda, TrainingSchedule schedule,
               std::uint64_t init_seed, std::uint64_t train_seed);

  [[nodiscard]] const NetworkShape& shape() const { return shape_; }
  [[nodiscard]] const NetworkParams& params() const { return params_; }
  [[nodiscard]] const NetworkParams& initial_params() const { return initial_; }
  [[nodiscard]] const DesignState& design() const { return design_; }
  [[nodiscard]] const TrainingSchedule& schedule() const { return schedule_; }
  [[nodiscard]] const std::vector<ObservationGroup>& history() const { return history_; }
  [[nodiscard]] double lambda() const { return lambda_; }
  /// Number of observe() calls so far (t after round t).
  [[nodiscard]] int round() const { return round_; }
  [[nodiscard]] const NeuralBandit& state() const { return *this; }

  /// g(x; theta_{t-1}) / sqrt(m) for every column, as a p x n matrix.
  [[nodiscard]] Matrix scaled_gradients(const Matrix& contexts) const;

  /// f(x; theta_{t-1}) for every column.
  [[nodiscard]] Vector predict(const Matrix& contexts) const;

  /// |g(x; theta_{t-1}) / sqrt(m)|_{Z_{t-1}^{-1}} for every column.
  [[nodiscard]] Vector widths(const Matrix& contexts) const;

  /// Records one round: gram updates with gradients at the round-start
  /// parameters, then retraining when the schedule says so.
  void observe(const Matrix& chosen_contexts, std::span<const double> scores);

 private:
  void retrain();

  NetworkShape shape_;
  double lambda_;
  TrainingSchedule schedule_;
  std::uint64_t train_seed_;
  NetworkParams initial_;
  NetworkParams params_;
  DesignState design_;
  std::vector<ObservationGroup> history_;
  int round_ = 0;
};

/// Constants of the theory-mode exploration schedule. The analysis proves
/// existence only, so all default to 1.
struct UcbConfig {
  ExplorationMode mode = ExplorationMode::practical;
  double gamma_const = 1.0;
  double s_norm = 1.0;
  double sigma_sub = 1.0;
  double delta = 0.05;
  double c_gamma1 = 1.0;
  double c_gamma2 = 1.0;
  double c_gamma3 = 1.0;
  double c_1 = 1.0;
  double c_3 = 1.0;
  double c_4 = 1.0;
  int super_arm_size = 1;

  void validate() const;
};

struct TsConfig {
  ExplorationMode mode = ExplorationMode::practical;
  double nu = 1.0;
  int samples = 10;
  double epsilon = 0.0;

  void validate() const;
};

/// Scores handed to the oracle are `scores[i] + offset`.
struct AdjustedScores {
  std::vector<double> scores;
  double offset = 0.0;

  [[nodiscard]] std::vector<double> shifted() const;
};

struct UcbTerms {
  double gamma = 0.0;   // gamma_{t-1}
  double offset = 0.0;  // e_t
};

/// gamma_{t-1} and e_t for the upcoming round t = state.round() + 1.
/// Practical mode returns (gamma_const, 0).
UcbTerms ucb_terms(const NeuralBandit& state, const UcbConfig& config);

/// u_i = f(x_i) + gamma_{t-1} |g(x_i)/sqrt(m)|_{Z^{-1}}, plus the offset e_t.
AdjustedScores ucb_scores(const NeuralBandit& state, const Matrix& contexts,
                          const UcbConfig& config);

/// max over M draws of N(f(x_i), nu^2 sigma_i^2) with
/// sigma_i^2 = lambda |g(x_i)/sqrt(m)|^2_{Z^{-1}}, plus the offset epsilon.
AdjustedScores ts_sampled_scores(const NeuralBandit& state, const Matrix& contexts,
                                 const TsConfig& config, Rng& rng);

/// 1 / (4 e sqrt(pi))
double optimistic_probability();

/// ceil(1 - log K / log(1 - p)) with p = optimistic_probability().
int theory_sample_count(int k);

/// nu = S + sigma * sqrt(d_eff * log(1 + T N / lambda) + 2 + 2 log T).
double theory_exploration_variance(double s_norm, double sigma_sub, double effective_dim,
                                   double horizon, double num_arms, double lambda);

SuperArm select_super_arm(const AdjustedScores& adjusted, const SuperArmOracle& oracle, int k);

}  // namespace combandit
