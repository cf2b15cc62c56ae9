#include "combandit/environments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "combandit/errors.hpp"
#include "combandit/random.hpp"

namespace combandit {

namespace {

Vector unit_gaussian(int dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  double norm = 0.0;
  do {
    for (int i = 0; i < dim; ++i) v[i] = normal(rng);
    norm = v.norm();
  } while (norm == 0.0);
  return v / norm;
}

std::vector<int> random_subset(int n, int k, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace

double true_score(const ScoreFunctionSpec& spec, std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != spec.a.size()) {
    throw ContractError("true_score: context dimension differs from the hidden parameter");
  }
  const double dot = Eigen::Map<const Vector>(x.data(), spec.a.size()).dot(spec.a);
  double h = 0.0;
  switch (spec.kind) {
    case ScoreKind::h1_linear: h = dot; break;
    case ScoreKind::h2_quadratic: h = dot * dot; break;
    case ScoreKind::h3_cosine: h = std::cos(std::numbers::pi * dot); break;
  }
  return spec.renormalize ? 0.5 * (h + 1.0) : h;
}

void FeedbackModel::validate(int k) const {
  const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (kind == FeedbackKind::position_based) {
    if (static_cast<int>(position_quality.size()) != k) {
      throw ConfigError("position_quality needs exactly K values");
    }
    if (!std::all_of(position_quality.begin(), position_quality.end(), in_unit)) {
      throw ConfigError("position_quality values must lie in [0, 1]");
    }
  }
  if (kind == FeedbackKind::cascade) {
    if (static_cast<int>(cascade_discount.size()) != k) {
      throw ConfigError("cascade_discount needs exactly K values");
    }
    if (!std::all_of(cascade_discount.begin(), cascade_discount.end(), in_unit)) {
      throw ConfigError("cascade_discount values must lie in [0, 1]");
    }
  }
}

ScoreKind parse_score_kind(const std::string& name) {
  if (name == "h1" || name == "h1_linear") return ScoreKind::h1_linear;
  if (name == "h2" || name == "h2_quadratic") return ScoreKind::h2_quadratic;
  if (name == "h3" || name == "h3_cosine") return ScoreKind::h3_cosine;
  throw ConfigError("unknown score_fn '" + name + "' (expected h1, h2 or h3)");
}

FeedbackKind parse_feedback_kind(const std::string& name) {
  if (name == "semi_bandit") return FeedbackKind::semi_bandit;
  if (name == "document_based") return FeedbackKind::document_based;
  if (name == "position_based") return FeedbackKind::position_based;
  if (name == "cascade") return FeedbackKind::cascade;
  throw ConfigError("unknown feedback model '" + name +
                    "' (expected semi_bandit, document_based, position_based or cascade)");
}

std::string to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::h1_linear: return "h1";
    case ScoreKind::h2_quadratic: return "h2";
    case ScoreKind::h3_cosine: return "h3";
  }
  return "?";
}

std::string to_string(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::semi_bandit: return "semi_bandit";
    case FeedbackKind::document_based: return "document_based";
    case FeedbackKind::position_based: return "position_based";
    case FeedbackKind::cascade: return "cascade";
  }
  return "?";
}

SuperArm RewardFunction::best(std::span<const double> scores, int k) const {
  const auto n = static_cast<int>(scores.size());
  if (k < 1 || k > n) throw ConfigError("reward oracle needs 1 <= K <= N");
  std::vector<int> current;
  std::vector<int> best_set;
  double best_value = -std::numeric_limits<double>::infinity();
  std::function<void(int)> visit = [&](int start) {
    if (static_cast<int>(current.size()) == k) {
      const double v = value(current, scores);
      if (v > best_value) {
        best_value = v;
        best_set = current;
      }
      return;
    }
    for (int i = start; i <= n - (k - static_cast<int>(current.size())); ++i) {
      current.push_back(i);
      visit(i + 1);
      current.pop_back();
    }
  };
  visit(0);
  return SuperArm(best_set, n);
}

double SumReward::value(std::span<const int> arms, std::span<const double> scores) const {
  double total = 0.0;
  for (int a : arms) total += scores[static_cast<std::size_t>(a)];
  return total;
}

SuperArm SumReward::best(std::span<const double> scores, int k) const {
  return top_k(scores, k);
}

ProbeResult probe_monotonicity(const RewardFunction& reward, int n, int k, int trials, Rng& rng) {
  std::uniform_real_distribution<double> score(-1.0, 1.0);
  std::uniform_real_distribution<double> raise(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, n - 1);
  ProbeResult result;
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int trial = 0; trial < trials; ++trial) {
    for (double& s : v) s = score(rng);
    const std::vector<int> arms = random_subset(n, k, rng);
    const double before = reward.value(arms, v);
    v[static_cast<std::size_t>(pick(rng))] += raise(rng);
    const double after = reward.value(arms, v);
    const double drop = before - after;
    result.worst = std::max(result.worst, drop);
    if (drop > 0.0) result.passed = false;
    ++result.trials;
  }
  return result;
}

ProbeResult probe_lipschitz(const RewardFunction& reward, int n, int k, double c0, int trials,
                            Rng& rng) {
  std::uniform_real_distribution<double> score(-1.0, 1.0);
  std::normal_distribution<double> step(0.0, 0.5);
  ProbeResult result;
  std::vector<double> v(static_cast<std::size_t>(n));
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int trial = 0; trial < trials; ++trial) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = score(rng);
      w[i] = v[i] + step(rng);
    }
    const std::vector<int> arms = random_subset(n, k, rng);
    double dist2 = 0.0;
    for (int a : arms) {
      const double diff = v[static_cast<std::size_t>(a)] - w[static_cast<std::size_t>(a)];
      dist2 += diff * diff;
    }
    const double gap = std::abs(reward.value(arms, v) - reward.value(arms, w));
    const double excess = gap - c0 * std::sqrt(dist2);
    result.worst = std::max(result.worst, excess);
    if (excess > 1e-12 * (1.0 + gap)) result.passed = false;
    ++result.trials;
  }
  return result;
}

Matrix gen_contexts(int d, int n, bool pairing, Rng& rng) {
  if (d < 1 || n < 1) throw ConfigError("gen_contexts needs d >= 1 and n >= 1");
  if (pairing && d % 2 != 0) throw ConfigError("paired contexts need an even dimension");
  Matrix out(d, n);
  for (int j = 0; j < n; ++j) {
    if (pairing) {
      const Vector z = unit_gaussian(d / 2, rng);
      out.col(j) = pair_context(as_span(z));
    } else {
      out.col(j) = unit_gaussian(d, rng);
    }
  }
  return out;
}

int augmented_dim(int d, int k, bool pairing) { return pairing ? d + 2 * k : d + k; }

Vector augment_with_position(std::span<const double> x, int position, int k, bool pairing) {
  const auto d = static_cast<Eigen::Index>(x.size());
  if (position < 0 || position >= k) throw ContractError("position outside [0, K)");
  Eigen::Map<const Vector> xm(x.data(), d);
  if (pairing) {
    if (d % 2 != 0) throw ContractError("paired context must have even dimension");
    const Eigen::Index h = d / 2;
    Vector u = Vector::Zero(h + k);
    u.head(h) = xm.head(h) * std::sqrt(2.0);
    u[h + position] = 1.0;
    u /= u.norm();
    return pair_context(as_span(u));
  }
  Vector u = Vector::Zero(d + k);
  u.head(d) = xm;
  u[d + position] = 1.0;
  return u / u.norm();
}

void EnvironmentConfig::validate() const {
  if (d < 1) throw ConfigError("d must be at least 1");
  if (pairing && d % 2 != 0) throw ConfigError("pairing requires an even d");
  if (super_arm_size < 1 || super_arm_size > num_arms) {
    throw ConfigError("need 1 <= K <= N, got K=" + std::to_string(super_arm_size) +
                      " N=" + std::to_string(num_arms));
  }
  if (noise_sd < 0.0) throw ConfigError("noise_sd must be non-negative");
  feedback.validate(super_arm_size);
}

Environment::Environment(EnvironmentConfig config, std::uint64_t seed,
                         std::shared_ptr<const RewardFunction> reward)
    : config_(std::move(config)),
      reward_(reward ? std::move(reward) : std::make_shared<SumReward>()),
      context_rng_(derive_seed(seed, 1)),
      noise_rng_(derive_seed(seed, 2)),
      click_rng_(derive_seed(seed, 3)) {
  config_.validate();
  Rng param_rng(derive_seed(seed, 0));
  spec_.kind = config_.score;
  spec_.renormalize = config_.renormalize;
  spec_.a = unit_gaussian(config_.d, param_rng);
}

const Matrix& Environment::next_round() {
  contexts_ = gen_contexts(config_.d, config_.num_arms, config_.pairing, context_rng_);
  expected_.resize(config_.num_arms);
  for (int i = 0; i < config_.num_arms; ++i) {
    const Vector x = contexts_.col(i);
    expected_[i] = true_score(spec_, as_span(x));
  }
  return contexts_;
}

Matrix Environment::expected_position_scores() const {
  const int k = config_.super_arm_size;
  Matrix out(config_.num_arms, k);
  for (int i = 0; i < config_.num_arms; ++i) {
    for (int p = 0; p < k; ++p) {
      const double chi = config_.feedback.kind == FeedbackKind::position_based
                             ? config_.feedback.position_quality[static_cast<std::size_t>(p)]
                             : 1.0;
      out(i, p) = expected_[i] * chi;
    }
  }
  return out;
}

RoundOutcome Environment::observe_round(std::span<const int> arms_by_position) {
  if (contexts_.size() == 0) throw ContractError("observe_round called before next_round");
  const int k = config_.super_arm_size;
  if (static_cast<int>(arms_by_position.size()) != k) {
    throw ContractError("played " + std::to_string(arms_by_position.size()) +
                        " arms, environment expects K=" + std::to_string(k));
  }
  // Validates distinctness and range.
  (void)SuperArm(std::vector<int>(arms_by_position.begin(), arms_by_position.end()),
                 config_.num_arms);

  std::normal_distribution<double> noise(0.0, config_.noise_sd);
  RoundOutcome out;
  out.expected_scores = expected_;
  const auto arm_at = [&](int p) { return arms_by_position[static_cast<std::size_t>(p)]; };

  switch (config_.feedback.kind) {
    case FeedbackKind::semi_bandit:
    case FeedbackKind::document_based:
      for (int p = 0; p < k; ++p) {
        out.observed_arms.push_back(arm_at(p));
        out.observed_scores.push_back(expected_[arm_at(p)] + noise(noise_rng_));
      }
      break;
    case FeedbackKind::position_based:
      for (int p = 0; p < k; ++p) {
        const double chi = config_.feedback.position_quality[static_cast<std::size_t>(p)];
        out.observed_arms.push_back(arm_at(p));
        out.observed_scores.push_back(expected_[arm_at(p)] * chi + noise(noise_rng_));
      }
      break;
    case FeedbackKind::cascade: {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (int p = 0; p < k; ++p) {
        const double psi = config_.feedback.cascade_discount[static_cast<std::size_t>(p)];
        const double attraction = expected_[arm_at(p)];
        out.observed_arms.push_back(arm_at(p));
        out.observed_scores.push_back(psi * (attraction + noise(noise_rng_)));
        const double click = std::clamp(attraction * psi, 0.0, 1.0);
        if (unit(click_rng_) < click) break;
      }
      break;
    }
  }
  out.observation_count = static_cast<int>(out.observed_arms.size());
  for (double s : out.observed_scores) out.realized_reward += s;
  return out;
}

double Environment::expected_regret_increment(std::span<const int> arms_by_position,
                                              double alpha) const {
  const int k = config_.super_arm_size;
  if (static_cast<int>(arms_by_position.size()) != k) {
    throw ContractError("regret needs exactly K played arms");
  }
  if (config_.feedback.kind == FeedbackKind::position_based) {
    const Matrix v = expected_position_scores();
    const double best = assignment_value(v);
    double chosen = 0.0;
    for (int p = 0; p < k; ++p) chosen += v(arms_by_position[static_cast<std::size_t>(p)], p);
    return alpha * best - chosen;
  }
  const std::span<const double> v(expected_.data(), static_cast<std::size_t>(expected_.size()));
  const SuperArm best = reward_->best(v, k);
  return alpha * reward_->value(best.arms(), v) - reward_->value(arms_by_position, v);
}

}  // namespace combandit
