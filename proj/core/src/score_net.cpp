#include "combandit/score_net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "combandit/errors.hpp"

namespace combandit {

namespace {

using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;

struct LayerView {
  Eigen::Index offset;
  Eigen::Index rows;
  Eigen::Index cols;
};

std::vector<LayerView> layer_layout(const NetworkShape& shape) {
  std::vector<LayerView> layers;
  layers.reserve(static_cast<std::size_t>(shape.depth));
  Eigen::Index offset = 0;
  const Eigen::Index m = shape.width;
  layers.push_back({offset, m, shape.input_dim});
  offset += m * shape.input_dim;
  for (int l = 1; l < shape.depth - 1; ++l) {
    layers.push_back({offset, m, m});
    offset += m * m;
  }
  layers.push_back({offset, 1, m});
  return layers;
}

void check_params(const NetworkShape& shape, const NetworkParams& params) {
  if (params.theta.size() != shape.parameter_count()) {
    throw ContractError("parameter vector has length " + std::to_string(params.theta.size()) +
                        ", shape expects " + std::to_string(shape.parameter_count()));
  }
}

void check_input(const NetworkShape& shape, Eigen::Index rows) {
  if (rows != shape.input_dim) {
    throw ContractError("context dimension " + std::to_string(rows) + " != network input " +
                        std::to_string(shape.input_dim));
  }
}

// Forward pass keeping pre-activations and activations for backprop.
struct Activations {
  std::vector<Matrix> pre;   // pre[l] = W_{l+1} act[l], l = 0..L-2
  std::vector<Matrix> act;   // act[0] = input, act[l] = relu(pre[l-1])
  Eigen::RowVectorXd output;
};

Activations run_forward(const NetworkShape& shape, const Vector& theta,
                        const std::vector<LayerView>& layers, const Matrix& input) {
  Activations a;
  const auto hidden = static_cast<std::size_t>(shape.depth - 1);
  a.pre.resize(hidden);
  a.act.resize(hidden + 1);
  a.act[0] = input;
  for (std::size_t l = 0; l < hidden; ++l) {
    const LayerView& lv = layers[l];
    ConstMatrixMap w(theta.data() + lv.offset, lv.rows, lv.cols);
    a.pre[l].noalias() = w * a.act[l];
    a.act[l + 1] = a.pre[l].cwiseMax(0.0);
  }
  const LayerView& out = layers.back();
  ConstMatrixMap w_out(theta.data() + out.offset, out.rows, out.cols);
  a.output.noalias() = std::sqrt(static_cast<double>(shape.width)) * (w_out * a.act[hidden]);
  return a;
}

// Accumulates sum_k r_k * grad f(x_k) into `grad`.
void run_backward(const NetworkShape& shape, const Vector& theta,
                  const std::vector<LayerView>& layers, const Activations& a,
                  const Eigen::RowVectorXd& residual, Vector& grad) {
  const double scale = std::sqrt(static_cast<double>(shape.width));
  const auto hidden = static_cast<std::size_t>(shape.depth - 1);
  const LayerView& out = layers.back();
  ConstMatrixMap w_out(theta.data() + out.offset, out.rows, out.cols);
  MatrixMap g_out(grad.data() + out.offset, out.rows, out.cols);
  g_out.noalias() += scale * residual * a.act[hidden].transpose();

  Matrix delta = scale * (w_out.transpose() * residual);
  for (std::size_t l = hidden; l-- > 0;) {
    delta = delta.cwiseProduct((a.pre[l].array() > 0.0).cast<double>().matrix());
    const LayerView& lv = layers[l];
    MatrixMap g(grad.data() + lv.offset, lv.rows, lv.cols);
    g.noalias() += delta * a.act[l].transpose();
    if (l > 0) {
      ConstMatrixMap w(theta.data() + lv.offset, lv.rows, lv.cols);
      Matrix next = w.transpose() * delta;
      delta = std::move(next);
    }
  }
}

Matrix as_column(std::span<const double> x) {
  return Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
}

}  // namespace

std::int64_t NetworkShape::parameter_count() const {
  const std::int64_t d = input_dim;
  const std::int64_t m = width;
  const std::int64_t l = depth;
  return d * m + m * m * (l - 2) + m;
}

void NetworkShape::validate() const {
  if (input_dim <= 0 || input_dim % 2 != 0) {
    throw ConfigError("network input_dim must be a positive even integer, got " +
                      std::to_string(input_dim));
  }
  if (width <= 0 || width % 2 != 0) {
    throw ConfigError("network width must be a positive even integer, got " +
                      std::to_string(width));
  }
  if (depth < 2) {
    throw ConfigError("network depth must be at least 2, got " + std::to_string(depth));
  }
}

NetworkParams init_params(const NetworkShape& shape, std::uint64_t seed) {
  shape.validate();
  Rng rng(seed);
  const auto layers = layer_layout(shape);
  NetworkParams params{Vector::Zero(shape.parameter_count())};
  const double m = shape.width;
  std::normal_distribution<double> hidden_dist(0.0, std::sqrt(4.0 / m));
  std::normal_distribution<double> out_dist(0.0, std::sqrt(2.0 / m));

  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const LayerView& lv = layers[l];
    MatrixMap w(params.theta.data() + lv.offset, lv.rows, lv.cols);
    const Eigen::Index rh = lv.rows / 2;
    const Eigen::Index ch = lv.cols / 2;
    Matrix block(rh, ch);
    for (Eigen::Index j = 0; j < ch; ++j) {
      for (Eigen::Index i = 0; i < rh; ++i) block(i, j) = hidden_dist(rng);
    }
    w.topLeftCorner(rh, ch) = block;
    w.bottomRightCorner(rh, ch) = block;
  }
  const LayerView& out = layers.back();
  const Eigen::Index half = out.cols / 2;
  for (Eigen::Index j = 0; j < half; ++j) {
    const double v = out_dist(rng);
    params.theta[out.offset + j] = v;
    params.theta[out.offset + half + j] = -v;
  }
  return params;
}

double forward(const NetworkShape& shape, const NetworkParams& params,
               std::span<const double> x) {
  check_params(shape, params);
  check_input(shape, static_cast<Eigen::Index>(x.size()));
  const auto layers = layer_layout(shape);
  return run_forward(shape, params.theta, layers, as_column(x)).output(0);
}

Vector gradient(const NetworkShape& shape, const NetworkParams& params,
                std::span<const double> x) {
  check_params(shape, params);
  check_input(shape, static_cast<Eigen::Index>(x.size()));
  const auto layers = layer_layout(shape);
  const Activations a = run_forward(shape, params.theta, layers, as_column(x));
  Vector grad = Vector::Zero(params.theta.size());
  run_backward(shape, params.theta, layers, a, Eigen::RowVectorXd::Ones(1), grad);
  return grad;
}

Vector forward_batch(const NetworkShape& shape, const NetworkParams& params,
                     const Matrix& contexts) {
  check_params(shape, params);
  check_input(shape, contexts.rows());
  const auto layers = layer_layout(shape);
  return run_forward(shape, params.theta, layers, contexts).output.transpose();
}

Vector squared_loss_gradient(const NetworkShape& shape, const NetworkParams& params,
                             const Matrix& contexts, std::span<const double> targets) {
  check_params(shape, params);
  check_input(shape, contexts.rows());
  if (static_cast<std::size_t>(contexts.cols()) != targets.size()) {
    throw ContractError("batch has mismatched context and score counts");
  }
  Vector grad = Vector::Zero(params.theta.size());
  if (contexts.cols() == 0) return grad;
  const auto layers = layer_layout(shape);
  const Activations a = run_forward(shape, params.theta, layers, contexts);
  const Eigen::RowVectorXd residual =
      a.output - Eigen::Map<const Eigen::RowVectorXd>(targets.data(), contexts.cols());
  run_backward(shape, params.theta, layers, a, residual, grad);
  return grad;
}

double regularized_loss(const NetworkShape& shape, const NetworkParams& initial,
                        const NetworkParams& current, const TrainingBatch& batch,
                        double lambda) {
  double loss = 0.0;
  if (batch.size() > 0) {
    const Vector out = forward_batch(shape, current, batch.contexts);
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const double r = out[static_cast<Eigen::Index>(k)] - batch.scores[k];
      loss += 0.5 * r * r;
    }
  }
  loss += 0.5 * shape.width * lambda * (current.theta - initial.theta).squaredNorm();
  return loss;
}

NetworkParams train(const NetworkShape& shape, const NetworkParams& initial,
                    const NetworkParams& current, const TrainingBatch& batch,
                    double lambda, double eta, int steps) {
  if (lambda <= 0.0) throw ConfigError("training lambda must be positive");
  if (eta <= 0.0) throw ConfigError("training step size must be positive");
  if (steps < 0) throw ConfigError("training steps must be non-negative");
  check_params(shape, initial);
  check_params(shape, current);
  if (static_cast<std::size_t>(batch.contexts.cols()) != batch.size()) {
    throw ContractError("batch has mismatched context and score counts");
  }
  NetworkParams theta = current;
  const double reg = shape.width * lambda;
  for (int s = 0; s < steps; ++s) {
    Vector grad = squared_loss_gradient(shape, theta, batch.contexts, batch.scores);
    grad.noalias() += reg * (theta.theta - initial.theta);
    theta.theta.noalias() -= eta * grad;
  }
  return theta;
}

NetworkParams train_minibatch(const NetworkShape& shape, const NetworkParams& initial,
                              const NetworkParams& current,
                              std::span<const ObservationGroup> groups,
                              const MiniBatchOptions& options, Rng& rng) {
  if (options.lambda <= 0.0) throw ConfigError("training lambda must be positive");
  if (options.eta <= 0.0) throw ConfigError("training step size must be positive");
  if (options.epochs < 0) throw ConfigError("training epochs must be non-negative");
  if (options.batch_groups < 1) throw ConfigError("batch_super_arms must be at least 1");
  check_params(shape, initial);
  check_params(shape, current);

  std::vector<Eigen::Index> offsets(groups.size() + 1, 0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].contexts.size() != groups[g].scores.size()) {
      throw ContractError("observation group has mismatched context and score counts");
    }
    offsets[g + 1] = offsets[g] + static_cast<Eigen::Index>(groups[g].scores.size());
  }
  const Eigen::Index total = offsets.back();
  NetworkParams theta = current;
  const double reg = shape.width * options.lambda;
  if (total == 0) {
    // Only the pull toward theta_0 remains; one step per epoch.
    for (int e = 0; e < options.epochs; ++e) {
      theta.theta.noalias() -= options.eta * reg * (theta.theta - initial.theta);
    }
    return theta;
  }

  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const double reg_per_step = reg / static_cast<double>(total);
  Matrix batch_x;
  std::vector<double> batch_v;

  for (int e = 0; e < options.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(options.batch_groups)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(options.batch_groups));
      Eigen::Index n = 0;
      for (std::size_t i = start; i < stop; ++i) n += offsets[order[i] + 1] - offsets[order[i]];
      batch_x.resize(shape.input_dim, n);
      batch_v.clear();
      Eigen::Index col = 0;
      for (std::size_t i = start; i < stop; ++i) {
        const ObservationGroup& grp = groups[order[i]];
        for (std::size_t k = 0; k < grp.scores.size(); ++k) {
          batch_x.col(col++) = grp.contexts[k];
          batch_v.push_back(grp.scores[k]);
        }
      }
      if (n == 0) continue;
      Vector grad = squared_loss_gradient(shape, theta, batch_x, batch_v);
      grad /= static_cast<double>(n);
      grad.noalias() += reg_per_step * (theta.theta - initial.theta);
      theta.theta.noalias() -= options.eta * grad;
    }
  }
  return theta;
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw DataError("truncated parameter checkpoint");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_params(std::ostream& out, const NetworkShape& shape, const NetworkParams& params) {
  check_params(shape, params);
  put_le<std::int32_t>(out, shape.input_dim);
  put_le<std::int32_t>(out, shape.width);
  put_le<std::int32_t>(out, shape.depth);
  for (Eigen::Index i = 0; i < params.theta.size(); ++i) put_le<double>(out, params.theta[i]);
}

std::pair<NetworkShape, NetworkParams> read_params(std::istream& in) {
  NetworkShape shape;
  shape.input_dim = get_le<std::int32_t>(in);
  shape.width = get_le<std::int32_t>(in);
  shape.depth = get_le<std::int32_t>(in);
  try {
    shape.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  NetworkParams params{Vector(shape.parameter_count())};
  for (Eigen::Index i = 0; i < params.theta.size(); ++i) params.theta[i] = get_le<double>(in);
  if (!params.theta.allFinite()) throw DataError("checkpoint contains non-finite parameters");
  return {shape, std::move(params)};
}

Vector pair_context(std::span<const double> z) {
  const auto h = static_cast<Eigen::Index>(z.size());
  Vector x(2 * h);
  const double s = 1.0 / std::sqrt(2.0);
  for (Eigen::Index j = 0; j < h; ++j) {
    x[j] = z[static_cast<std::size_t>(j)] * s;
    x[j + h] = x[j];
  }
  return x;
}

}  // namespace combandit
