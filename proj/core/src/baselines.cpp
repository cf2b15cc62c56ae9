#include "combandit/baselines.hpp"

#include <cmath>
#include <string>

#include "combandit/errors.hpp"

namespace combandit {

LinearState::LinearState(int dim, double lambda, std::int64_t refresh_interval)
    : dim_(dim), lambda_(lambda), refresh_interval_(refresh_interval) {
  if (dim < 1) throw ConfigError("linear baseline dimension must be at least 1");
  if (!(lambda > 0.0)) throw ConfigError("linear baseline lambda must be positive");
  if (refresh_interval < 1) throw ConfigError("refresh interval must be at least 1");
  v_ = Matrix::Identity(dim, dim) * lambda;
  v_inv_ = Matrix::Identity(dim, dim) / lambda;
  b_ = Vector::Zero(dim);
  theta_hat_ = Vector::Zero(dim);
}

void LinearState::observe(const Matrix& chosen_contexts, std::span<const double> scores) {
  if (chosen_contexts.rows() != dim_) {
    throw ContractError("linear observe: context dimension " +
                        std::to_string(chosen_contexts.rows()) + " != " + std::to_string(dim_));
  }
  if (static_cast<std::size_t>(chosen_contexts.cols()) != scores.size()) {
    throw ContractError("linear observe: context and score counts differ");
  }
  for (Eigen::Index j = 0; j < chosen_contexts.cols(); ++j) {
    const auto x = chosen_contexts.col(j);
    const Vector w = v_inv_ * x;
    const double denom = 1.0 + x.dot(w);
    v_inv_.noalias() -= (w / denom) * w.transpose();
    v_.noalias() += x * x.transpose();
    b_.noalias() += scores[static_cast<std::size_t>(j)] * x;
    if (++updates_ % refresh_interval_ == 0) {
      v_inv_ = v_.llt().solve(Matrix::Identity(dim_, dim_));
    }
  }
  theta_hat_.noalias() = v_inv_ * b_;
}

Vector comblinucb_scores(const LinearState& state, const Matrix& contexts, double alpha) {
  if (alpha < 0.0) throw ConfigError("alpha_lin must be non-negative");
  if (contexts.rows() != state.dim()) throw ContractError("linear scores: dimension mismatch");
  Vector scores = contexts.transpose() * state.theta_hat();
  if (alpha == 0.0) return scores;
  const Matrix w = state.gram_inverse() * contexts;
  for (Eigen::Index i = 0; i < contexts.cols(); ++i) {
    scores[i] += alpha * std::sqrt(std::max(0.0, contexts.col(i).dot(w.col(i))));
  }
  return scores;
}

Vector sample_linear_parameter(const LinearState& state, double nu, Rng& rng) {
  if (nu < 0.0) throw ConfigError("nu must be non-negative");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(state.dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  if (nu == 0.0) return state.theta_hat();
  const Matrix sym = 0.5 * (state.gram_inverse() + state.gram_inverse().transpose());
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() != Eigen::Success) throw DataError("linear covariance is not positive definite");
  const Vector draw = llt.matrixL() * z;
  return state.theta_hat() + nu * draw;
}

Vector comblints_scores(const LinearState& state, const Matrix& contexts, double nu, Rng& rng) {
  if (contexts.rows() != state.dim()) throw ContractError("linear scores: dimension mismatch");
  return contexts.transpose() * sample_linear_parameter(state, nu, rng);
}

}  // namespace combandit
