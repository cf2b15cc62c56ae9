#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "combandit/config.hpp"
#include "combandit/doubling.hpp"
#include "combandit/environments.hpp"
#include "combandit/policies.hpp"

namespace combandit {

enum class Algorithm { cnucb, cnts, cnts1, comblinucb, comblints };

Algorithm parse_algorithm(const std::string& name);
std::string to_string(Algorithm algorithm);
[[nodiscard]] bool is_neural(Algorithm algorithm);

struct ExperimentConfig {
  std::string preset;  // empty when built from scratch
  Algorithm algorithm = Algorithm::cnucb;
  bool doubling = false;  // cnucb-d / cnts-d

  EnvironmentConfig env;
  int horizon = 500;

  int width = 50;
  int depth = 2;
  double lambda = 1.0;
  TrainingSchedule training;

  ExplorationMode mode = ExplorationMode::practical;
  double gamma = 1.0;
  double nu = 1.0;
  int samples = 10;
  double epsilon = 0.0;
  double alpha_lin = 1.0;
  double s_norm = 1.0;
  double sigma_sub = 1.0;
  double delta = 0.05;
  double c_gamma1 = 1.0;
  double c_gamma2 = 1.0;
  double c_gamma3 = 1.0;
  double c_1 = 1.0;
  double c_3 = 1.0;
  double c_4 = 1.0;

  int epoch_t0 = 8;
  EpochSchedule::Width width_schedule = EpochSchedule::Width::constant;
  int width_max = 1 << 12;

  /// Set to use the truncated-greedy alpha oracle and alpha-regret.
  std::optional<double> alpha_oracle;

  int runs = 5;
  std::uint64_t base_seed = 1;
  int workers = 0;  // 0: COMBANDIT_WORKERS or hardware concurrency

  int ntk_cap = 2000;

  void validate() const;

  /// Resolved configuration as ordered key=value pairs (the CSV metadata).
  [[nodiscard]] std::vector<std::pair<std::string, std::string>> to_key_values() const;
  [[nodiscard]] std::string metadata_line() const;

  /// `preset` (if present) is applied first, then the remaining keys.
  static ExperimentConfig from_map(ConfigMap map);

  [[nodiscard]] UcbConfig ucb_config() const;
  [[nodiscard]] TsConfig ts_config() const;
  [[nodiscard]] EpochSchedule epoch_schedule() const;
  /// Input dimension seen by the policy (augmented for position-based feedback).
  [[nodiscard]] int policy_input_dim() const;
};

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);
std::string describe_preset(const ExperimentConfig& config);

struct RegretTrace {
  int run_id = 0;
  std::vector<double> instant;
  std::vector<double> cumulative;

  friend bool operator==(const RegretTrace&, const RegretTrace&) = default;
};

/// Selections and regret for one run; selections are arms in position order.
struct RunRecord {
  RegretTrace trace;
  std::vector<std::vector<int>> selections;
};

/// Checks the reward plug-in against the monotonicity probe and the
/// Lipschitz probe with C0 = sqrt(K).
void check_reward(const RewardFunction& reward, int num_arms, int k, std::uint64_t seed);

/// Seeds for run r are derived from base_seed ^ r.
RunRecord run_single(const ExperimentConfig& config, int run_id,
                     std::shared_ptr<const RewardFunction> reward = nullptr);

std::vector<RegretTrace> run_experiment(const ExperimentConfig& config,
                                        std::shared_ptr<const RewardFunction> reward = nullptr);

int resolve_workers(int requested);

struct Summary {
  std::vector<double> mean;  // mean cumulative regret per round
  std::vector<double> std;   // population std of cumulative regret
  double first_quarter = 0.0;  // per-round mean regret over rounds 1..T/4
  double last_quarter = 0.0;   // per-round mean regret over the last T/4 rounds
};

Summary summarize(const std::vector<RegretTrace>& traces);

/// Per-round average of instant regret over the first and last quarter of
/// one trace.
std::pair<double, double> quarter_averages(const std::vector<double>& instant);

void write_traces(std::ostream& out, const std::vector<RegretTrace>& traces,
                  const std::string& metadata);
/// Returns the traces and the metadata line (without the leading '#').
std::pair<std::vector<RegretTrace>, std::string> read_traces(std::istream& in);
void write_summary(std::ostream& out, const Summary& summary);

}  // namespace combandit
