#include "combandit/policies.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "combandit/errors.hpp"

namespace combandit {

namespace {

// Seeds the shuffling stream of the training call at round t, so that
// replaying a history reproduces every training call exactly.
std::uint64_t training_seed(std::uint64_t base, int round) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(round), 0x7452u};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void check_contexts(const NetworkShape& shape, const Matrix& contexts) {
  if (contexts.rows() != shape.input_dim) {
    throw ContractError("context dimension " + std::to_string(contexts.rows()) +
                        " != network input " + std::to_string(shape.input_dim));
  }
}

}  // namespace

NeuralBandit::NeuralBandit(NetworkShape shape, double lambda, TrainingSchedule schedule,
                           std::uint64_t init_seed, std::uint64_t train_seed)
    : shape_(shape),
      lambda_(lambda),
      schedule_(schedule),
      train_seed_(train_seed),
      initial_(init_params(shape, init_seed)),
      params_(initial_),
      design_(shape.parameter_count(), lambda) {
  if (schedule_.eta <= 0.0) throw ConfigError("learning rate must be positive");
  if (schedule_.gd_steps < 0 || schedule_.epochs < 0) {
    throw ConfigError("training steps and epochs must be non-negative");
  }
  if (schedule_.batch_groups < 1) throw ConfigError("batch_super_arms must be at least 1");
}

Matrix NeuralBandit::scaled_gradients(const Matrix& contexts) const {
  check_contexts(shape_, contexts);
  Matrix grads(shape_.parameter_count(), contexts.cols());
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(shape_.width));
  for (Eigen::Index j = 0; j < contexts.cols(); ++j) {
    const Vector x = contexts.col(j);
    grads.col(j) = gradient(shape_, params_, as_span(x)) * inv_sqrt_m;
  }
  return grads;
}

Vector NeuralBandit::predict(const Matrix& contexts) const {
  check_contexts(shape_, contexts);
  return forward_batch(shape_, params_, contexts);
}

Vector NeuralBandit::widths(const Matrix& contexts) const {
  return design_.weighted_norms(scaled_gradients(contexts));
}

void NeuralBandit::observe(const Matrix& chosen_contexts, std::span<const double> scores) {
  check_contexts(shape_, chosen_contexts);
  if (static_cast<std::size_t>(chosen_contexts.cols()) != scores.size()) {
    throw ContractError("observe: " + std::to_string(chosen_contexts.cols()) +
                        " contexts but " + std::to_string(scores.size()) + " scores");
  }
  design_.round_update(scaled_gradients(chosen_contexts));

  ObservationGroup group;
  group.contexts.reserve(scores.size());
  for (Eigen::Index j = 0; j < chosen_contexts.cols(); ++j) {
    group.contexts.emplace_back(chosen_contexts.col(j));
  }
  group.scores.assign(scores.begin(), scores.end());
  history_.push_back(std::move(group));
  ++round_;

  if (schedule_.train_every > 0 && round_ % schedule_.train_every == 0) retrain();
}

void NeuralBandit::retrain() {
  const NetworkParams& start = schedule_.warm_start ? params_ : initial_;
  if (schedule_.kind == TrainingSchedule::Kind::full_batch) {
    std::size_t n = 0;
    for (const auto& g : history_) n += g.scores.size();
    TrainingBatch batch;
    batch.contexts.resize(shape_.input_dim, static_cast<Eigen::Index>(n));
    batch.scores.reserve(n);
    Eigen::Index col = 0;
    for (const auto& g : history_) {
      for (std::size_t k = 0; k < g.scores.size(); ++k) {
        batch.contexts.col(col++) = g.contexts[k];
        batch.scores.push_back(g.scores[k]);
      }
    }
    params_ = train(shape_, initial_, start, batch, lambda_, schedule_.eta, schedule_.gd_steps);
  } else {
    Rng rng(training_seed(train_seed_, round_));
    MiniBatchOptions options{lambda_, schedule_.eta, schedule_.epochs, schedule_.batch_groups};
    params_ = train_minibatch(shape_, initial_, start, history_, options, rng);
  }
}

void UcbConfig::validate() const {
  if (gamma_const < 0.0) throw ConfigError("gamma must be non-negative");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (super_arm_size < 1) throw ConfigError("super arm size must be at least 1");
}

void TsConfig::validate() const {
  if (nu < 0.0) throw ConfigError("nu must be non-negative");
  if (samples < 1) throw ConfigError("sample count M must be at least 1");
  if (epsilon < 0.0) throw ConfigError("epsilon must be non-negative");
}

std::vector<double> AdjustedScores::shifted() const {
  std::vector<double> out(scores);
  for (double& s : out) s += offset;
  return out;
}

UcbTerms ucb_terms(const NeuralBandit& state, const UcbConfig& config) {
  config.validate();
  if (config.mode == ExplorationMode::practical) return {config.gamma_const, 0.0};

  const double prev = state.round();  // t - 1
  const double t = prev + 1.0;
  const double k = config.super_arm_size;
  const double depth = state.shape().depth;
  const double m = state.shape().width;
  const double lambda = state.lambda();
  const double sqrt_log_m = std::sqrt(std::log(m));
  const double m_pow = std::pow(m, -1.0 / 6.0);
  const auto& sched = state.schedule();
  const double steps = sched.kind == TrainingSchedule::Kind::full_batch
                           ? sched.gd_steps
                           : static_cast<double>(sched.epochs);

  const auto gamma_at = [&](double s, double log_det_ratio) {
    const double sk = s * k;
    const double g1 = std::sqrt(1.0 + config.c_gamma1 * std::pow(sk, 7.0 / 6.0) *
                                          std::pow(depth, 4.0) * std::pow(lambda, -7.0 / 6.0) *
                                          m_pow * sqrt_log_m);
    const double g2 = config.c_gamma2 * std::pow(sk, 5.0 / 3.0) * std::pow(depth, 4.0) *
                      std::pow(lambda, -1.0 / 6.0) * m_pow * sqrt_log_m;
    const double g3 = config.c_gamma3 * std::pow(sk, 7.0 / 6.0) * std::pow(depth, 3.5) *
                      std::pow(lambda, -7.0 / 6.0) * m_pow * sqrt_log_m *
                      (1.0 + std::sqrt(sk / lambda));
    const double radicand =
        std::max(0.0, log_det_ratio + g2 - 2.0 * std::log(config.delta));
    const double contraction =
        std::pow(std::abs(1.0 - sched.eta * m * lambda), steps / 2.0);
    return g1 * (config.sigma_sub * std::sqrt(radicand) + std::sqrt(lambda) * config.s_norm) +
           (lambda + config.c_1 * sk * depth) * (contraction * std::sqrt(sk / lambda) + g3);
  };

  const double gamma = gamma_at(prev, state.design().log_det_ratio());
  const double tk = t * k;
  const double offset =
      config.c_3 * gamma * std::pow(tk, 1.0 / 6.0) * std::pow(depth, 3.5) *
          std::pow(lambda, -2.0 / 3.0) * m_pow * sqrt_log_m +
      config.c_4 * std::pow(tk, 2.0 / 3.0) * std::pow(lambda, -2.0 / 3.0) * m_pow * sqrt_log_m;
  return {gamma, offset};
}

AdjustedScores ucb_scores(const NeuralBandit& state, const Matrix& contexts,
                          const UcbConfig& config) {
  const UcbTerms terms = ucb_terms(state, config);
  const Vector mean = state.predict(contexts);
  AdjustedScores out;
  out.offset = terms.offset;
  out.scores.resize(static_cast<std::size_t>(contexts.cols()));
  if (terms.gamma == 0.0) {
    for (Eigen::Index i = 0; i < mean.size(); ++i) out.scores[static_cast<std::size_t>(i)] = mean[i];
    return out;
  }
  const Vector width = state.widths(contexts);
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    out.scores[static_cast<std::size_t>(i)] = mean[i] + terms.gamma * width[i];
  }
  return out;
}

AdjustedScores ts_sampled_scores(const NeuralBandit& state, const Matrix& contexts,
                                 const TsConfig& config, Rng& rng) {
  config.validate();
  const Vector mean = state.predict(contexts);
  const Vector width = state.widths(contexts);
  std::normal_distribution<double> normal(0.0, 1.0);
  AdjustedScores out;
  out.offset = config.epsilon;
  out.scores.resize(static_cast<std::size_t>(contexts.cols()));
  const double sqrt_lambda = std::sqrt(state.lambda());
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double sd = config.nu * sqrt_lambda * width[i];
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < config.samples; ++j) best = std::max(best, mean[i] + sd * normal(rng));
    out.scores[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

double optimistic_probability() {
  return 1.0 / (4.0 * std::numbers::e * std::sqrt(std::numbers::pi));
}

int theory_sample_count(int k) {
  if (k < 1) throw ConfigError("theory_sample_count needs K >= 1, got " + std::to_string(k));
  const double ratio = std::log(static_cast<double>(k)) / std::log1p(-optimistic_probability());
  return static_cast<int>(std::ceil(1.0 - ratio));
}

double theory_exploration_variance(double s_norm, double sigma_sub, double effective_dim,
                                   double horizon, double num_arms, double lambda) {
  if (lambda <= 0.0 || horizon < 1.0 || num_arms < 1.0) {
    throw ConfigError("theory nu needs lambda > 0, T >= 1 and N >= 1");
  }
  return s_norm + sigma_sub * std::sqrt(effective_dim * std::log1p(horizon * num_arms / lambda) +
                                        2.0 + 2.0 * std::log(horizon));
}

SuperArm select_super_arm(const AdjustedScores& adjusted, const SuperArmOracle& oracle, int k) {
  const std::vector<double> shifted = adjusted.shifted();
  return oracle.select(shifted, k);
}

}  // namespace combandit
