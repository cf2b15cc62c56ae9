#include "combandit/doubling.hpp"

#include <algorithm>
#include <string>

#include "combandit/errors.hpp"

namespace combandit {

int EpochSchedule::width() const {
  if (width_rule == Width::constant) return base_width;
  const int shift = (epoch + 1) / 2;
  std::int64_t w = base_width;
  for (int i = 0; i < shift && w < max_width; ++i) w *= 2;
  return static_cast<int>(std::min<std::int64_t>(w, max_width));
}

void EpochSchedule::validate() const {
  if (initial_period < 1) throw ConfigError("epoch_t0 must be at least 1");
  if (base_width < 2 || base_width % 2 != 0) throw ConfigError("width must be even and >= 2");
  if (max_width < base_width || max_width % 2 != 0) {
    throw ConfigError("max width must be even and >= the base width");
  }
}

DoublingBandit::DoublingBandit(int input_dim, int depth, double lambda, TrainingSchedule schedule,
                               EpochSchedule epochs, std::uint64_t init_seed,
                               std::uint64_t train_seed)
    : input_dim_(input_dim),
      depth_(depth),
      lambda_(lambda),
      schedule_(schedule),
      epochs_([&] {
        epochs.validate();
        epochs.period = epochs.initial_period;
        epochs.epoch = 0;
        return epochs;
      }()),
      init_seed_(init_seed),
      train_seed_(train_seed),
      bandit_(NetworkShape{input_dim, epochs_.width(), depth}, lambda, schedule, init_seed,
              train_seed) {}

std::uint64_t DoublingBandit::epoch_seed() const {
  if (epochs_.synchronized_seeds) return init_seed_;
  return init_seed_ ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(epochs_.epoch + 1));
}

void DoublingBandit::observe(const Matrix& chosen_contexts, std::span<const double> scores) {
  const int t = bandit_.round() + 1;
  if (t < epochs_.period) {
    bandit_.observe(chosen_contexts, scores);
    return;
  }
  if (static_cast<std::size_t>(chosen_contexts.cols()) != scores.size()) {
    throw ContractError("observe: context and score counts differ");
  }

  std::vector<ObservationGroup> history = bandit_.history();
  if (static_cast<int>(history.size()) != t - 1) {
    throw ContractError("doubling replay needs the full history, have " +
                        std::to_string(history.size()) + " of " + std::to_string(t - 1) +
                        " rounds");
  }
  ObservationGroup current;
  for (Eigen::Index j = 0; j < chosen_contexts.cols(); ++j) {
    current.contexts.emplace_back(chosen_contexts.col(j));
  }
  current.scores.assign(scores.begin(), scores.end());
  history.push_back(std::move(current));

  epochs_.period *= 2;
  epochs_.epoch += 1;
  bandit_ = NeuralBandit(NetworkShape{input_dim_, epochs_.width(), depth_}, lambda_, schedule_,
                         epoch_seed(), train_seed_);
  for (const ObservationGroup& g : history) {
    Matrix x(input_dim_, static_cast<Eigen::Index>(g.contexts.size()));
    for (std::size_t k = 0; k < g.contexts.size(); ++k) {
      x.col(static_cast<Eigen::Index>(k)) = g.contexts[k];
    }
    bandit_.observe(x, g.scores);
  }
  replayed_rounds_ += t;
}

}  // namespace combandit
