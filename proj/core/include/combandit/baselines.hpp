#pragma once

#include <cstdint>
#include <span>

#include "combandit/score_net.hpp"

namespace combandit {

/// Ridge-regression state shared by CombLinUCB and CombLinTS.
class LinearState {
 public:
  static constexpr std::int64_t kDefaultRefreshInterval = 1000;

  LinearState(int dim, double lambda, std::int64_t refresh_interval = kDefaultRefreshInterval);

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] const Matrix& gram() const { return v_; }
  [[nodiscard]] const Matrix& gram_inverse() const { return v_inv_; }
  [[nodiscard]] const Vector& response() const { return b_; }
  [[nodiscard]] const Vector& theta_hat() const { return theta_hat_; }

  /// V += x x^T (Sherman-Morrison), b += v x, for each column.
  void observe(const Matrix& chosen_contexts, std::span<const double> scores);

 private:
  int dim_;
  double lambda_;
  std::int64_t refresh_interval_;
  std::int64_t updates_ = 0;
  Matrix v_;
  Matrix v_inv_;
  Vector b_;
  Vector theta_hat_;
};

/// u_i = x_i^T theta_hat + alpha |x_i|_{V^{-1}}
Vector comblinucb_scores(const LinearState& state, const Matrix& contexts, double alpha);

/// theta_tilde ~ N(theta_hat, nu^2 V^{-1}) drawn once; scores x_i^T theta_tilde.
Vector comblints_scores(const LinearState& state, const Matrix& contexts, double nu, Rng& rng);

/// The shared draw behind comblints_scores.
Vector sample_linear_parameter(const LinearState& state, double nu, Rng& rng);

}  // namespace combandit
