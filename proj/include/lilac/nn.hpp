#pragma once

// Minimal differentiable MLP: forward/backward, soft-target cross-entropy,
// SGD with (Nesterov) momentum and weight decay, milestone learning rates.
// Dense types are templated on the scalar; the training pipeline uses double.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lilac/error.hpp"

namespace lilac {

using Index = Eigen::Index;
using Rng = std::mt19937_64;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = MatrixX<double>;
using RowVector = RowVectorX<double>;

enum class Activation { relu, none };

template <typename Scalar>
struct Dense {
  MatrixX<Scalar> weight;  // fan_in x fan_out
  RowVectorX<Scalar> bias;  // fan_out
  Activation activation = Activation::none;

  Index fan_in() const { return weight.rows(); }
  Index fan_out() const { return weight.cols(); }
};

template <typename Scalar>
class Mlp {
 public:
  Mlp() = default;

  explicit Mlp(std::vector<Dense<Scalar>> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw DimensionError("model needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& layer = layers_[i];
      if (layer.bias.size() != layer.fan_out())
        throw DimensionError("layer " + std::to_string(i) + ": bias width does not match weight");
      if (i > 0 && layers_[i - 1].fan_out() != layer.fan_in())
        throw DimensionError("layer " + std::to_string(i) + ": input width does not chain");
    }
    if (layers_.back().activation != Activation::none)
      throw DimensionError("final layer must emit raw logits");
  }

  /// Layer widths {input, hidden..., output}; ReLU on every hidden layer.
  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static Mlp glorot(std::span<const Index> widths, Rng& rng) {
    return build(widths, [&rng](Index fan_in, Index fan_out) {
      const Scalar limit = std::sqrt(Scalar(6) / Scalar(fan_in + fan_out));
      std::uniform_real_distribution<Scalar> dist(-limit, limit);
      MatrixX<Scalar> w(fan_in, fan_out);
      for (Index r = 0; r < fan_in; ++r)
        for (Index c = 0; c < fan_out; ++c) w(r, c) = dist(rng);
      return w;
    });
  }

  static Mlp zeros(std::span<const Index> widths) {
    return build(widths, [](Index fan_in, Index fan_out) {
      return MatrixX<Scalar>::Zero(fan_in, fan_out).eval();
    });
  }

  Index input_dim() const { return layers_.front().fan_in(); }
  Index output_dim() const { return layers_.back().fan_out(); }
  std::size_t depth() const { return layers_.size(); }

  const std::vector<Dense<Scalar>>& layers() const { return layers_; }
  std::vector<Dense<Scalar>>& layers() { return layers_; }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    if (a.layers_.size() != b.layers_.size()) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
      const auto& x = a.layers_[i];
      const auto& y = b.layers_[i];
      if (x.activation != y.activation || x.weight.rows() != y.weight.rows() ||
          x.weight.cols() != y.weight.cols() || x.weight != y.weight || x.bias != y.bias)
        return false;
    }
    return true;
  }

 private:
  template <typename MakeWeight>
  static Mlp build(std::span<const Index> widths, MakeWeight&& make_weight) {
    if (widths.size() < 2) throw DimensionError("need at least input and output widths");
    for (Index w : widths)
      if (w < 1) throw DimensionError("layer widths must be positive");
    std::vector<Dense<Scalar>> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      Dense<Scalar> layer;
      layer.weight = make_weight(widths[i], widths[i + 1]);
      layer.bias = RowVectorX<Scalar>::Zero(widths[i + 1]);
      layer.activation = (i + 2 == widths.size()) ? Activation::none : Activation::relu;
      layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
  }

  std::vector<Dense<Scalar>> layers_;
};

using Model = Mlp<double>;

namespace detail {

template <typename Scalar, typename Derived>
MatrixX<Scalar> apply_layer(const Dense<Scalar>& layer, const Eigen::MatrixBase<Derived>& in) {
  MatrixX<Scalar> out = (in * layer.weight).rowwise() + layer.bias;
  if (layer.activation == Activation::relu) out = out.cwiseMax(Scalar(0));
  return out;
}

}  // namespace detail

/// Activations after the first `count` layers (count == depth() gives logits).
template <typename Scalar, typename Derived>
MatrixX<Scalar> forward_through(const Mlp<Scalar>& model, const Eigen::MatrixBase<Derived>& inputs,
                                std::size_t count) {
  if (inputs.cols() != model.input_dim())
    throw DimensionError("input width " + std::to_string(inputs.cols()) + " != model input " +
                         std::to_string(model.input_dim()));
  MatrixX<Scalar> act = inputs;
  for (std::size_t i = 0; i < count && i < model.depth(); ++i)
    act = detail::apply_layer(model.layers()[i], act);
  return act;
}

/// Raw logits, one row per input row.
template <typename Scalar, typename Derived>
MatrixX<Scalar> forward(const Mlp<Scalar>& model, const Eigen::MatrixBase<Derived>& inputs) {
  return forward_through(model, inputs, model.depth());
}

/// Row-wise argmax; ties resolve to the lowest index.
template <typename Derived>
std::vector<int> argmax_rows(const Eigen::MatrixBase<Derived>& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Index r = 0; r < m.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < m.cols(); ++c)
      if (m(r, c) > m(r, best)) best = c;
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

/// Predicted labels over a full feature matrix, evaluated in row chunks.
template <typename Scalar, typename Derived>
std::vector<int> predict(const Mlp<Scalar>& model, const Eigen::MatrixBase<Derived>& inputs,
                         Index chunk = 4096) {
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(inputs.rows()));
  for (Index start = 0; start < inputs.rows(); start += chunk) {
    const Index n = std::min(chunk, inputs.rows() - start);
    auto part = argmax_rows(forward(model, inputs.middleRows(start, n)));
    labels.insert(labels.end(), part.begin(), part.end());
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Loss

template <typename Scalar>
struct LossAndGrad {
  Scalar loss;
  MatrixX<Scalar> grad;  // d loss / d logits
};

/// Mean soft-target cross-entropy over the batch:
///   loss = -(1/B) sum_i sum_c t_ic log softmax(z_i)_c,  grad = (softmax(z_i) - t_i) / B.
/// Each target row is expected to be a probability vector.
template <typename D1, typename D2>
auto soft_cross_entropy(const Eigen::MatrixBase<D1>& logits, const Eigen::MatrixBase<D2>& targets)
    -> LossAndGrad<typename D1::Scalar> {
  using Scalar = typename D1::Scalar;
  const Index batch = logits.rows();
  if (batch < 1) throw DimensionError("soft_cross_entropy: empty batch");
  if (targets.rows() != batch || targets.cols() != logits.cols())
    throw DimensionError("soft_cross_entropy: targets shape does not match logits");
  if (!logits.allFinite()) throw NumericError("soft_cross_entropy: non-finite logits");

  LossAndGrad<Scalar> out{Scalar(0), MatrixX<Scalar>(batch, logits.cols())};
  const Scalar inv_batch = Scalar(1) / Scalar(batch);
  for (Index r = 0; r < batch; ++r) {
    const Scalar peak = logits.row(r).maxCoeff();
    RowVectorX<Scalar> shifted = logits.row(r).array() - peak;
    const Scalar log_norm = std::log(shifted.array().exp().sum());
    RowVectorX<Scalar> log_probs = shifted.array() - log_norm;
    out.loss -= targets.row(r).dot(log_probs);
    out.grad.row(r) = (log_probs.array().exp() - targets.row(r).array()) * inv_batch;
  }
  out.loss *= inv_batch;
  return out;
}

// ---------------------------------------------------------------------------
// Backpropagation

template <typename Scalar>
struct Gradients {
  std::vector<MatrixX<Scalar>> weight;
  std::vector<RowVectorX<Scalar>> bias;

  static Gradients zeros_like(const Mlp<Scalar>& model) {
    Gradients g;
    for (const auto& layer : model.layers()) {
      g.weight.push_back(MatrixX<Scalar>::Zero(layer.fan_in(), layer.fan_out()));
      g.bias.push_back(RowVectorX<Scalar>::Zero(layer.fan_out()));
    }
    return g;
  }
};

template <typename Scalar>
struct BackwardResult {
  Scalar loss;
  MatrixX<Scalar> logits;
  Gradients<Scalar> grads;
};

template <typename Scalar, typename D1, typename D2>
BackwardResult<Scalar> backward(const Mlp<Scalar>& model, const Eigen::MatrixBase<D1>& inputs,
                                const Eigen::MatrixBase<D2>& targets) {
  if (inputs.cols() != model.input_dim())
    throw DimensionError("backward: input width does not match model");
  const auto& layers = model.layers();
  const std::size_t depth = layers.size();

  // activations[0] is the input; activations[i + 1] is the output of layer i.
  std::vector<MatrixX<Scalar>> activations;
  activations.reserve(depth + 1);
  activations.emplace_back(inputs);
  for (const auto& layer : layers) activations.push_back(detail::apply_layer(layer, activations.back()));

  auto [loss, delta] = soft_cross_entropy(activations.back(), targets);

  BackwardResult<Scalar> result{loss, activations.back(), Gradients<Scalar>{}};
  result.grads.weight.resize(depth);
  result.grads.bias.resize(depth);
  for (std::size_t i = depth; i-- > 0;) {
    result.grads.weight[i] = activations[i].transpose() * delta;
    result.grads.bias[i] = delta.colwise().sum();
    if (i == 0) break;
    MatrixX<Scalar> upstream = delta * layers[i].weight.transpose();
    if (layers[i - 1].activation == Activation::relu)
      upstream = (activations[i].array() > Scalar(0)).select(upstream.array(), Scalar(0)).matrix();
    delta = std::move(upstream);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Optimizer

struct OptimHyper {
  double base_lr = 0.1;
  std::vector<int> milestones;
  double gamma = 0.2;
  double weight_decay = 5e-4;
  double momentum = 0.9;
  bool nesterov = true;

  void validate() const {
    if (!(base_lr > 0)) throw ConfigError("lr must be > 0");
    if (!(gamma > 0 && gamma <= 1)) throw ConfigError("gamma must lie in (0, 1]");
    if (!(weight_decay >= 0)) throw ConfigError("weight_decay must be >= 0");
    if (!(momentum >= 0 && momentum < 1)) throw ConfigError("momentum must lie in [0, 1)");
    for (std::size_t i = 1; i < milestones.size(); ++i)
      if (milestones[i] <= milestones[i - 1]) throw ConfigError("milestones must be strictly ascending");
  }
};

namespace detail {

// Schedules are configured with decimal literals; snapping the product to 15
// significant digits makes e.g. 0.1 * 0.2 come out as the double nearest 0.02.
inline double snap_decimal(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 15);
  double snapped = value;
  std::from_chars(buf, res.ptr, snapped);
  return snapped;
}

}  // namespace detail

/// base_lr * gamma^(number of milestones <= epoch).
inline double lr_at_epoch(const OptimHyper& hyper, int epoch) {
  const auto passed = std::count_if(hyper.milestones.begin(), hyper.milestones.end(),
                                    [epoch](int m) { return m <= epoch; });
  double lr = hyper.base_lr;
  for (std::ptrdiff_t i = 0; i < passed; ++i) lr *= hyper.gamma;
  return detail::snap_decimal(lr);
}

/// Velocity buffers; lazily shaped on the first step.
template <typename Scalar>
struct SgdState {
  Gradients<Scalar> velocity;
  bool initialized = false;
};

/// d = g + wd * w;  v <- momentum * v + d;
/// nesterov: w <- w - lr * (d + momentum * v), otherwise w <- w - lr * v.
/// Weight decay applies to biases as well.
template <typename Scalar>
void sgd_step(Mlp<Scalar>& model, const Gradients<Scalar>& grads, const OptimHyper& hyper, Scalar lr,
              SgdState<Scalar>& state) {
  if (!(lr > 0)) throw ConfigError("sgd_step: lr must be > 0");
  auto& layers = model.layers();
  if (grads.weight.size() != layers.size() || grads.bias.size() != layers.size())
    throw DimensionError("sgd_step: gradient count does not match model depth");
  if (!state.initialized) {
    state.velocity = Gradients<Scalar>::zeros_like(model);
    state.initialized = true;
  }
  const Scalar mu = static_cast<Scalar>(hyper.momentum);
  const Scalar wd = static_cast<Scalar>(hyper.weight_decay);

  auto update = [&](auto& param, const auto& grad, auto& vel) {
    if (grad.rows() != param.rows() || grad.cols() != param.cols())
      throw DimensionError("sgd_step: gradient shape does not match parameter");
    auto step = (grad + wd * param).eval();
    vel = mu * vel + step;
    if (hyper.nesterov)
      param -= lr * (step + mu * vel);
    else
      param -= lr * vel;
  };
  for (std::size_t i = 0; i < layers.size(); ++i) {
    update(layers[i].weight, grads.weight[i], state.velocity.weight[i]);
    update(layers[i].bias, grads.bias[i], state.velocity.bias[i]);
  }
}

// ---------------------------------------------------------------------------
// Snapshots

/// Frozen copy of a model's parameters, tagged with the epoch it closes.
template <typename Scalar>
class ModelSnapshot {
 public:
  ModelSnapshot(const Mlp<Scalar>& model, int epoch)
      : model_(std::make_shared<const Mlp<Scalar>>(model)), epoch_(epoch) {}

  const Mlp<Scalar>& model() const { return *model_; }
  int epoch() const { return epoch_; }

  template <typename Derived>
  MatrixX<Scalar> logits(const Eigen::MatrixBase<Derived>& inputs) const {
    return forward(*model_, inputs);
  }

 private:
  std::shared_ptr<const Mlp<Scalar>> model_;
  int epoch_;
};

template <typename Scalar>
ModelSnapshot<Scalar> snapshot(const Mlp<Scalar>& model, int epoch = -1) {
  return ModelSnapshot<Scalar>(model, epoch);
}

// ---------------------------------------------------------------------------
// Targets

/// A probability distribution over the L labels used as a cross-entropy target.
class TargetVector {
 public:
  explicit TargetVector(Eigen::VectorXd probs) : probs_(std::move(probs)) {
    if (probs_.size() < 1) throw DimensionError("target vector is empty");
    if (!probs_.allFinite() || (probs_.array() < 0).any())
      throw NumericError("target vector has negative or non-finite entries");
    if (std::abs(probs_.sum() - 1.0) > 1e-9) throw NumericError("target vector does not sum to 1");
  }

  static TargetVector one_hot(int label, int num_labels) {
    if (label < 0 || label >= num_labels) throw DimensionError("one_hot: label out of range");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(num_labels);
    v[label] = 1.0;
    return TargetVector(std::move(v));
  }

  const Eigen::VectorXd& probs() const { return probs_; }
  int size() const { return static_cast<int>(probs_.size()); }
  double operator[](int i) const { return probs_[i]; }

 private:
  Eigen::VectorXd probs_;
};

/// Stack target vectors into a B x L matrix suitable for soft_cross_entropy.
inline Matrix stack_targets(std::span<const TargetVector> targets) {
  if (targets.empty()) return Matrix(0, 0);
  Matrix out(static_cast<Index>(targets.size()), targets.front().size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].size() != out.cols()) throw DimensionError("stack_targets: ragged targets");
    out.row(static_cast<Index>(i)) = targets[i].probs().transpose();
  }
  return out;
}

}  // namespace lilac
