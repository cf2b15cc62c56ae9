#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "combandit/oracles.hpp"
#include "combandit/score_net.hpp"

namespace combandit {

enum class ScoreKind { h1_linear, h2_quadratic, h3_cosine };

/// h1(x) = x^T a, h2(x) = (x^T a)^2, h3(x) = cos(pi x^T a) with |a| = 1.
struct ScoreFunctionSpec {
  ScoreKind kind = ScoreKind::h1_linear;
  Vector a;
  /// Maps h to (h + 1) / 2. Off by default.
  bool renormalize = false;
};

double true_score(const ScoreFunctionSpec& spec, std::span<const double> x);

enum class FeedbackKind { semi_bandit, document_based, position_based, cascade };

struct FeedbackModel {
  FeedbackKind kind = FeedbackKind::semi_bandit;
  std::vector<double> position_quality;  // chi(k), position_based
  std::vector<double> cascade_discount;  // psi_k, cascade

  void validate(int k) const;
};

ScoreKind parse_score_kind(const std::string& name);
FeedbackKind parse_feedback_kind(const std::string& name);
std::string to_string(ScoreKind kind);
std::string to_string(FeedbackKind kind);

/// Reward of a super arm from a score vector over all N arms.
class RewardFunction {
 public:
  virtual ~RewardFunction() = default;
  [[nodiscard]] virtual double value(std::span<const int> arms,
                                     std::span<const double> scores) const = 0;
  /// Exact maximizer over size-k subsets. The default enumerates all subsets.
  [[nodiscard]] virtual SuperArm best(std::span<const double> scores, int k) const;
};

/// R(S, v) = sum_{i in S} v_i
class SumReward final : public RewardFunction {
 public:
  [[nodiscard]] double value(std::span<const int> arms,
                             std::span<const double> scores) const override;
  [[nodiscard]] SuperArm best(std::span<const double> scores, int k) const override;
};

struct ProbeResult {
  bool passed = true;
  int trials = 0;
  double worst = 0.0;  // largest violation seen
};

/// Raising one score on the chosen arms never lowers the reward.
ProbeResult probe_monotonicity(const RewardFunction& reward, int n, int k, int trials, Rng& rng);

/// |R(S, v) - R(S, v')| <= c0 * |v_S - v'_S|_2 over random perturbations.
ProbeResult probe_lipschitz(const RewardFunction& reward, int n, int k, double c0, int trials,
                            Rng& rng);

/// Unit-norm contexts as columns of a d x n matrix. With pairing each column
/// is [z; z] / sqrt(2) for z uniform on the sphere in R^{d/2}.
Matrix gen_contexts(int d, int n, bool pairing, Rng& rng);

/// Position-augmented context for the position-based model: the context
/// concatenated with a one-hot position code and renormalized. With pairing
/// the code is appended to the half vector and the result re-paired, so the
/// output dimension is d + 2K; without it, d + K.
Vector augment_with_position(std::span<const double> x, int position, int k, bool pairing);
int augmented_dim(int d, int k, bool pairing);

struct EnvironmentConfig {
  int d = 20;
  int num_arms = 10;
  int super_arm_size = 3;
  bool pairing = true;
  ScoreKind score = ScoreKind::h1_linear;
  bool renormalize = false;
  double noise_sd = 0.1;
  FeedbackModel feedback;

  void validate() const;
};

struct RoundOutcome {
  std::vector<int> observed_arms;       // arms whose scores were revealed, in position order
  std::vector<double> observed_scores;  // noisy (and for cascade, discounted) scores
  int observation_count = 0;            // F_t
  double realized_reward = 0.0;
  Vector expected_scores;               // v*_t over all arms
};

/// One synthetic semi-bandit environment. Owns its random streams; the
/// hidden parameter is drawn once at construction.
class Environment {
 public:
  Environment(EnvironmentConfig config, std::uint64_t seed,
              std::shared_ptr<const RewardFunction> reward = nullptr);

  [[nodiscard]] const EnvironmentConfig& config() const { return config_; }
  [[nodiscard]] const ScoreFunctionSpec& score_function() const { return spec_; }
  [[nodiscard]] const Matrix& contexts() const { return contexts_; }
  [[nodiscard]] const Vector& expected_scores() const { return expected_; }

  /// Draws the next round's contexts and fixes v*_t.
  const Matrix& next_round();

  /// Expected position scores h(x_i) * chi(k), N x K.
  [[nodiscard]] Matrix expected_position_scores() const;

  /// Plays arms in position order. Semi-bandit and document-based reveal
  /// all K scores; position-based reveals h(x)chi(k) + noise per position;
  /// cascade scans positions until the first click.
  RoundOutcome observe_round(std::span<const int> arms_by_position);

  /// alpha * R(S*, v*) - R(S, v*) with S* from the exact oracle.
  [[nodiscard]] double expected_regret_increment(std::span<const int> arms_by_position,
                                                 double alpha = 1.0) const;

 private:
  EnvironmentConfig config_;
  std::shared_ptr<const RewardFunction> reward_;
  ScoreFunctionSpec spec_;
  Rng context_rng_;
  Rng noise_rng_;
  Rng click_rng_;
  Matrix contexts_;
  Vector expected_;
};

}  // namespace combandit
