#pragma once

#include <cstdint>
#include <span>

#include "combandit/policies.hpp"

namespace combandit {

/// Epoch bookkeeping for the horizon-free variants. The current period is
/// initial_period * 2^epoch.
struct EpochSchedule {
  enum class Width { constant, geometric };

  int initial_period = 8;
  int period = 8;
  int epoch = 0;
  Width width_rule = Width::constant;
  int base_width = 50;
  int max_width = 1 << 12;
  /// When true every epoch reuses the same initialization seed, so a
  /// constant-width run reproduces the non-doubling policy exactly.
  bool synchronized_seeds = true;

  /// Width for the current epoch: base_width, or base_width * 2^ceil(epoch/2)
  /// capped at max_width.
  [[nodiscard]] int width() const;
  void validate() const;
};

/// CN-UCB-D / CN-TS-D state: a NeuralBandit that is rebuilt and replayed at
/// every epoch boundary t = initial_period * 2^n.
class DoublingBandit {
 public:
  DoublingBandit(int input_dim, int depth, double lambda, TrainingSchedule schedule,
                 EpochSchedule epochs, std::uint64_t init_seed, std::uint64_t train_seed);

  [[nodiscard]] const NeuralBandit& state() const { return bandit_; }
  [[nodiscard]] const EpochSchedule& epochs() const { return epochs_; }
  [[nodiscard]] int round() const { return bandit_.round(); }
  /// Rounds re-executed by epoch replays so far.
  [[nodiscard]] std::int64_t replayed_rounds() const { return replayed_rounds_; }

  /// Normal update while t < period. At t == period the period doubles, the
  /// network is rebuilt at the epoch's width with a fresh theta_0, the gram
  /// matrix restarts at lambda*I, and rounds 1..t are replayed in order.
  void observe(const Matrix& chosen_contexts, std::span<const double> scores);

 private:
  [[nodiscard]] std::uint64_t epoch_seed() const;

  int input_dim_;
  int depth_;
  double lambda_;
  TrainingSchedule schedule_;
  EpochSchedule epochs_;
  std::uint64_t init_seed_;
  std::uint64_t train_seed_;
  NeuralBandit bandit_;
  std::int64_t replayed_rounds_ = 0;
};

}  // namespace combandit
