#pragma once

#include <cstdint>
#include <span>

#include "combandit/score_net.hpp"

namespace combandit {

/// Regularized gram matrix Z = lambda*I + sum u u^T with a maintained inverse
/// and log-determinant.
///
/// The inverse follows Sherman-Morrison per rank-1 update and the
/// log-determinant the matrix-determinant lemma. Every `refresh_interval`
/// updates both are recomputed from a Cholesky factorization of Z to bound
/// drift. Only the lower triangles of Z and Z^{-1} are stored.
class DesignState {
 public:
  static constexpr std::int64_t kDefaultRefreshInterval = 1000;

  DesignState(Eigen::Index dim, double lambda,
              std::int64_t refresh_interval = kDefaultRefreshInterval);

  [[nodiscard]] Eigen::Index dim() const { return dim_; }
  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] double log_det() const { return log_det_; }
  [[nodiscard]] std::int64_t updates_applied() const { return updates_applied_; }

  /// log det Z - p log lambda; non-decreasing over updates.
  [[nodiscard]] double log_det_ratio() const;

  /// sqrt(v^T Z^{-1} v)
  [[nodiscard]] double weighted_norm(std::span<const double> v) const;

  /// Weighted norms for every column of `vs`, sharing one pass over Z^{-1}.
  [[nodiscard]] Vector weighted_norms(const Matrix& vs) const;

  void rank_one_update(std::span<const double> u);

  /// Applies one round: all norms are taken against the round-start inverse
  /// (accumulated into grouped_norm_sum()), then the K rank-1 updates are
  /// applied in order.
  void round_update(const Matrix& us);

  /// Sum over rounds of sum_i |u_i|^2_{Z_{t-1}^{-1}} with the round-start inverse.
  [[nodiscard]] double grouped_norm_sum() const { return grouped_norm_sum_; }

  /// Recompute the inverse and log-determinant from a Cholesky factorization.
  void refresh();

  /// Dense symmetric copies, for diagnostics and tests.
  [[nodiscard]] Matrix gram() const;
  [[nodiscard]] Matrix inverse() const;

 private:
  Eigen::Index dim_;
  double lambda_;
  std::int64_t refresh_interval_;
  Matrix z_;      // lower triangle valid
  Matrix z_inv_;  // lower triangle valid
  double log_det_;
  std::int64_t updates_applied_ = 0;
  double grouped_norm_sum_ = 0.0;
  Vector scratch_;
};

}  // namespace combandit
