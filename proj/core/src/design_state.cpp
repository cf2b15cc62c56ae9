#include "combandit/design_state.hpp"

#include <cmath>
#include <string>

#include "combandit/errors.hpp"

namespace combandit {

DesignState::DesignState(Eigen::Index dim, double lambda, std::int64_t refresh_interval)
    : dim_(dim), lambda_(lambda), refresh_interval_(refresh_interval) {
  if (dim < 1) throw ConfigError("design dimension must be at least 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("design lambda must be positive, got " + std::to_string(lambda));
  }
  if (refresh_interval < 1) throw ConfigError("refresh interval must be at least 1");
  z_ = Matrix::Identity(dim, dim) * lambda;
  z_inv_ = Matrix::Identity(dim, dim) / lambda;
  log_det_ = static_cast<double>(dim) * std::log(lambda);
  scratch_.resize(dim);
}

double DesignState::log_det_ratio() const {
  return log_det_ - static_cast<double>(dim_) * std::log(lambda_);
}

double DesignState::weighted_norm(std::span<const double> v) const {
  if (static_cast<Eigen::Index>(v.size()) != dim_) {
    throw ContractError("weighted_norm: vector length " + std::to_string(v.size()) +
                        " != " + std::to_string(dim_));
  }
  Eigen::Map<const Vector> vm(v.data(), dim_);
  const double q = vm.dot(z_inv_.selfadjointView<Eigen::Lower>() * vm);
  return std::sqrt(std::max(q, 0.0));
}

Vector DesignState::weighted_norms(const Matrix& vs) const {
  if (vs.rows() != dim_) throw ContractError("weighted_norms: row count != design dimension");
  const Matrix w = z_inv_.selfadjointView<Eigen::Lower>() * vs;
  Vector out(vs.cols());
  for (Eigen::Index j = 0; j < vs.cols(); ++j) {
    out[j] = std::sqrt(std::max(vs.col(j).dot(w.col(j)), 0.0));
  }
  return out;
}

void DesignState::rank_one_update(std::span<const double> u) {
  if (static_cast<Eigen::Index>(u.size()) != dim_) {
    throw ContractError("rank_one_update: vector length " + std::to_string(u.size()) +
                        " != " + std::to_string(dim_));
  }
  Eigen::Map<const Vector> um(u.data(), dim_);
  if (!um.allFinite()) throw DataError("rank_one_update: non-finite update vector");

  scratch_.noalias() = z_inv_.selfadjointView<Eigen::Lower>() * um;
  const double denom = 1.0 + um.dot(scratch_);
  z_inv_.selfadjointView<Eigen::Lower>().rankUpdate(scratch_, -1.0 / denom);
  z_.selfadjointView<Eigen::Lower>().rankUpdate(um, 1.0);
  log_det_ += std::log(denom);
  ++updates_applied_;
  if (updates_applied_ % refresh_interval_ == 0) refresh();
}

void DesignState::round_update(const Matrix& us) {
  if (us.rows() != dim_) throw ContractError("round_update: row count != design dimension");
  const Vector norms = weighted_norms(us);
  grouped_norm_sum_ += norms.squaredNorm();
  for (Eigen::Index j = 0; j < us.cols(); ++j) {
    const Vector col = us.col(j);
    rank_one_update(as_span(col));
  }
}

void DesignState::refresh() {
  Eigen::LLT<Matrix, Eigen::Lower> llt(z_.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success) throw DataError("design matrix lost positive definiteness");
  z_inv_ = llt.solve(Matrix::Identity(dim_, dim_));
  const Matrix& l = llt.matrixLLT();
  log_det_ = 2.0 * l.diagonal().array().log().sum();
}

Matrix DesignState::gram() const {
  return z_.selfadjointView<Eigen::Lower>();
}

Matrix DesignState::inverse() const {
  return z_inv_.selfadjointView<Eigen::Lower>();
}

}  // namespace combandit
