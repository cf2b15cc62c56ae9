#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "combandit/score_net.hpp"

namespace combandit {

/// K distinct arm indices in [0, N), sorted ascending.
class SuperArm {
 public:
  SuperArm() = default;
  /// Sorts `arms`; throws ContractError on duplicates or out-of-range indices.
  SuperArm(std::vector<int> arms, int num_arms);

  [[nodiscard]] const std::vector<int>& arms() const { return arms_; }
  [[nodiscard]] std::size_t size() const { return arms_.size(); }
  [[nodiscard]] bool contains(int arm) const;

  friend bool operator==(const SuperArm&, const SuperArm&) = default;

 private:
  std::vector<int> arms_;
};

/// One arm per position; `arm_at[k]` is the arm shown at position k.
struct Assignment {
  std::vector<int> arm_at;

  [[nodiscard]] double value(const Matrix& score_matrix) const;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Maximization oracle over size-K subsets. Implementations see only the
/// adjusted score vector, never the reward function.
class SuperArmOracle {
 public:
  virtual ~SuperArmOracle() = default;
  [[nodiscard]] virtual SuperArm select(std::span<const double> scores, int k) const = 0;
};

/// Exact oracle for the sum reward: the K largest scores, ties to the lower index.
class TopKOracle final : public SuperArmOracle {
 public:
  [[nodiscard]] SuperArm select(std::span<const double> scores, int k) const override;
};

/// Guarantees at least alpha * optimum for the sum reward with non-negative
/// scores. The first ceil(alpha*K) slots come from the inner oracle, the rest
/// are filled with the lowest unused indices.
class AlphaApproxOracle final : public SuperArmOracle {
 public:
  AlphaApproxOracle(std::shared_ptr<const SuperArmOracle> inner, double alpha);
  [[nodiscard]] SuperArm select(std::span<const double> scores, int k) const override;
  [[nodiscard]] double alpha() const { return alpha_; }

 private:
  std::shared_ptr<const SuperArmOracle> inner_;
  double alpha_;
};

/// Indices of the K largest scores, highest first, ties to the lower index.
std::vector<int> top_k_ranked(std::span<const double> scores, int k);

SuperArm top_k(std::span<const double> scores, int k);

std::shared_ptr<const SuperArmOracle> alpha_wrap(std::shared_ptr<const SuperArmOracle> inner,
                                                 double alpha);

/// Exact maximum-weight assignment of K positions to distinct arms for an
/// N x K score matrix (N >= K). Among optimal assignments returns the
/// lexicographically smallest `arm_at` sequence.
Assignment assignment_oracle(const Matrix& score_matrix);

/// Optimal value of the assignment problem (Hungarian algorithm, O(K^2 N)).
double assignment_value(const Matrix& score_matrix);

}  // namespace combandit
