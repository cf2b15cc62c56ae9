#include "combandit/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "combandit/errors.hpp"

namespace combandit {

SuperArm::SuperArm(std::vector<int> arms, int num_arms) : arms_(std::move(arms)) {
  std::sort(arms_.begin(), arms_.end());
  for (std::size_t i = 0; i < arms_.size(); ++i) {
    if (arms_[i] < 0 || arms_[i] >= num_arms) {
      throw ContractError("super arm index " + std::to_string(arms_[i]) + " outside [0, " +
                          std::to_string(num_arms) + ")");
    }
    if (i > 0 && arms_[i] == arms_[i - 1]) {
      throw ContractError("super arm contains duplicate arm " + std::to_string(arms_[i]));
    }
  }
}

bool SuperArm::contains(int arm) const {
  return std::binary_search(arms_.begin(), arms_.end(), arm);
}

double Assignment::value(const Matrix& score_matrix) const {
  double total = 0.0;
  for (std::size_t k = 0; k < arm_at.size(); ++k) {
    total += score_matrix(arm_at[k], static_cast<Eigen::Index>(k));
  }
  return total;
}

std::vector<int> top_k_ranked(std::span<const double> scores, int k) {
  const auto n = static_cast<int>(scores.size());
  if (k < 1 || k > n) {
    throw ConfigError("top_k needs 1 <= K <= N, got K=" + std::to_string(k) +
                      " N=" + std::to_string(n));
  }
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

SuperArm top_k(std::span<const double> scores, int k) {
  return SuperArm(top_k_ranked(scores, k), static_cast<int>(scores.size()));
}

SuperArm TopKOracle::select(std::span<const double> scores, int k) const {
  return top_k(scores, k);
}

AlphaApproxOracle::AlphaApproxOracle(std::shared_ptr<const SuperArmOracle> inner, double alpha)
    : inner_(std::move(inner)), alpha_(alpha) {
  if (!inner_) throw ConfigError("alpha oracle needs an inner oracle");
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
}

SuperArm AlphaApproxOracle::select(std::span<const double> scores, int k) const {
  const int n = static_cast<int>(scores.size());
  const int sorted_slots = std::min(k, static_cast<int>(std::ceil(alpha_ * k - 1e-12)));
  if (sorted_slots >= k) return inner_->select(scores, k);
  std::vector<int> arms;
  if (sorted_slots > 0) arms = inner_->select(scores, sorted_slots).arms();
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (int a : arms) used[static_cast<std::size_t>(a)] = 1;
  for (int a = 0; a < n && static_cast<int>(arms.size()) < k; ++a) {
    if (!used[static_cast<std::size_t>(a)]) arms.push_back(a);
  }
  return SuperArm(std::move(arms), n);
}

std::shared_ptr<const SuperArmOracle> alpha_wrap(std::shared_ptr<const SuperArmOracle> inner,
                                                 double alpha) {
  return std::make_shared<AlphaApproxOracle>(std::move(inner), alpha);
}

namespace {

// Hungarian algorithm (potentials + augmenting paths) minimizing cost over
// rows <= cols. Returns the minimum cost and the column matched to each row.
std::pair<double, std::vector<int>> hungarian_min(const Matrix& cost) {
  const auto n = static_cast<int>(cost.rows());
  const auto m = static_cast<int>(cost.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(m + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(m + 1), 0);
  std::vector<int> way(static_cast<std::size_t>(m + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(m + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (p[static_cast<std::size_t>(j)] != 0) {
      row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    }
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += cost(i, row_to_col[static_cast<std::size_t>(i)]);
  return {total, row_to_col};
}

void check_assignment_shape(const Matrix& score_matrix) {
  if (score_matrix.cols() < 1) throw ConfigError("assignment needs at least one position");
  if (score_matrix.rows() < score_matrix.cols()) {
    throw ConfigError("assignment needs N >= K, got N=" + std::to_string(score_matrix.rows()) +
                      " K=" + std::to_string(score_matrix.cols()));
  }
  if (!score_matrix.allFinite()) throw DataError("assignment scores must be finite");
}

double optimal_value(const Matrix& scores) {
  if (scores.cols() == 0) return 0.0;
  // rows = positions, cols = arms
  return -hungarian_min(-scores.transpose()).first;
}

}  // namespace

double assignment_value(const Matrix& score_matrix) {
  check_assignment_shape(score_matrix);
  return optimal_value(score_matrix);
}

Assignment assignment_oracle(const Matrix& score_matrix) {
  check_assignment_shape(score_matrix);
  const auto n = static_cast<int>(score_matrix.rows());
  const auto k = static_cast<int>(score_matrix.cols());
  double remaining_value = optimal_value(score_matrix);
  const double tol = 1e-9 * (1.0 + score_matrix.cwiseAbs().maxCoeff() * k);

  Assignment result;
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  for (int pos = 0; pos < k; ++pos) {
    const int later = k - pos - 1;
    bool placed = false;
    for (int arm = 0; arm < n && !placed; ++arm) {
      if (taken[static_cast<std::size_t>(arm)]) continue;
      Matrix rest(n - pos - 1, later);
      int r = 0;
      for (int a = 0; a < n; ++a) {
        if (a == arm || taken[static_cast<std::size_t>(a)]) continue;
        for (int c = 0; c < later; ++c) rest(r, c) = score_matrix(a, pos + 1 + c);
        ++r;
      }
      const double candidate = score_matrix(arm, pos) + optimal_value(rest);
      if (candidate >= remaining_value - tol) {
        result.arm_at.push_back(arm);
        taken[static_cast<std::size_t>(arm)] = 1;
        remaining_value -= score_matrix(arm, pos);
        placed = true;
      }
    }
    if (!placed) throw DataError("assignment oracle failed to reconstruct an optimum");
  }
  return result;
}

}  // namespace combandit
