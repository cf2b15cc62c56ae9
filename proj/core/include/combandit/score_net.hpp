#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace combandit {

using Rng = std::mt19937_64;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Architecture of the fully connected ReLU score network.
///
/// The network has `depth` weight matrices: W_1 is width x input_dim, the
/// hidden W_l are width x width and the output layer is 1 x width. The output
/// is scaled by sqrt(width).
struct NetworkShape {
  int input_dim = 0;
  int width = 0;
  int depth = 2;

  /// d*m + m^2*(L-2) + m
  [[nodiscard]] std::int64_t parameter_count() const;

  /// Throws ConfigError unless input_dim and width are even and positive and depth >= 2.
  void validate() const;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

/// Flat parameter vector: vec(W_1), ..., vec(W_L), each column-major.
struct NetworkParams {
  Vector theta;
};

/// Symmetric block initialization. W_l = (W, 0; 0, W) for the hidden layers
/// with W ~ N(0, 4/m) entries and W_L = (w^T, -w^T) with w ~ N(0, 2/m).
/// The network output is exactly zero on paired inputs x = [z; z].
NetworkParams init_params(const NetworkShape& shape, std::uint64_t seed);

double forward(const NetworkShape& shape, const NetworkParams& params,
               std::span<const double> x);

/// Exact backpropagation gradient of forward() with respect to theta.
/// The ReLU derivative at zero is taken as zero.
Vector gradient(const NetworkShape& shape, const NetworkParams& params,
                std::span<const double> x);

/// Outputs for every column of `contexts` (input_dim x n).
Vector forward_batch(const NetworkShape& shape, const NetworkParams& params,
                     const Matrix& contexts);

/// Gradient of 0.5 * sum_k (f(x_k) - v_k)^2 over the columns of `contexts`.
Vector squared_loss_gradient(const NetworkShape& shape, const NetworkParams& params,
                             const Matrix& contexts, std::span<const double> targets);

struct TrainingBatch {
  Matrix contexts;            // input_dim x n, unit columns
  std::vector<double> scores;  // n observed scores

  [[nodiscard]] std::size_t size() const { return scores.size(); }
};

/// Regularized loss 0.5 * sum (f - v)^2 + (m*lambda/2) * |theta - theta_0|^2.
double regularized_loss(const NetworkShape& shape, const NetworkParams& initial,
                        const NetworkParams& current, const TrainingBatch& batch,
                        double lambda);

/// Full-batch gradient descent on regularized_loss, `steps` iterations of
/// step size `eta`. The regularizer is centered at `initial`, not `current`.
NetworkParams train(const NetworkShape& shape, const NetworkParams& initial,
                    const NetworkParams& current, const TrainingBatch& batch,
                    double lambda, double eta, int steps);

/// One round's worth of observations: the K (context, score) pairs of a super arm.
struct ObservationGroup {
  std::vector<Vector> contexts;
  std::vector<double> scores;
};

struct MiniBatchOptions {
  double lambda = 1.0;
  double eta = 0.01;
  int epochs = 100;
  int batch_groups = 100;
};

/// Stochastic gradient descent over stored observation groups.
///
/// Each epoch shuffles the groups and walks them in mini-batches of
/// `batch_groups` groups. Each step follows the gradient of
///   (1/|B|) sum_{k in B} 0.5 (f - v)^2 + (m*lambda / (2n)) |theta - theta_0|^2
/// where n is the total number of stored samples, so the minimizer is the
/// same as regularized_loss over the whole history.
NetworkParams train_minibatch(const NetworkShape& shape, const NetworkParams& initial,
                              const NetworkParams& current,
                              std::span<const ObservationGroup> groups,
                              const MiniBatchOptions& options, Rng& rng);

/// Checkpoint format: int32 d, m, L (little endian) followed by p float64 values.
void write_params(std::ostream& out, const NetworkShape& shape, const NetworkParams& params);
std::pair<NetworkShape, NetworkParams> read_params(std::istream& in);

/// Pairs a context: [z; z] / sqrt(2). Output has twice the dimension.
Vector pair_context(std::span<const double> z);

}  // namespace combandit
