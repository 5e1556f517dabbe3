#pragma once

// Fully connected networks with hand-written reverse mode, Adam and target
// blending. Batches are column-major: one sample per column.

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

#include "rsd/common.hpp"

namespace rsd::nn {

enum class Activation { kLinear, kTanh, kRelu };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    default: return "linear";
  }
}

inline Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "linear") return Activation::kLinear;
  throw ConfigError("unknown activation '" + name + "'");
}

template <typename T>
struct Layer {
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> weight;  // out x in
  Eigen::Matrix<T, Eigen::Dynamic, 1> bias;
  Activation activation = Activation::kLinear;
};

template <typename T>
class Mlp {
 public:
  using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  // Intermediate values kept by a taped forward pass.
  struct Tape {
    std::vector<MatrixT> inputs;  // input of each layer
    std::vector<MatrixT> outputs;  // post-activation output of each layer
  };

  Mlp() = default;

  explicit Mlp(std::vector<Layer<T>> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ConfigError("network needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      if (l.bias.size() != l.weight.rows())
        throw ConfigError("layer " + std::to_string(i) + ": bias width does not match weight rows");
      if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows())
        throw ConfigError("layer " + std::to_string(i) + ": input width does not chain");
    }
  }

  // Uniform fan-in initialisation, hidden layers share `hidden`, the last
  // layer uses `output`. Final weights are multiplied by `output_scale`.
  static Mlp build(const std::vector<Index>& widths, Activation hidden, Activation output, Rng& rng,
                   T output_scale = T(1)) {
    if (widths.size() < 2) throw ConfigError("network needs input and output widths");
    std::vector<Layer<T>> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      Layer<T> l;
      const Index in = widths[i], out = widths[i + 1];
      const T bound = T(1) / std::sqrt(static_cast<T>(in));
      l.weight.resize(out, in);
      l.bias.resize(out);
      for (Index c = 0; c < in; ++c)
        for (Index r = 0; r < out; ++r) l.weight(r, c) = static_cast<T>(rng.uniform(-bound, bound));
      for (Index r = 0; r < out; ++r) l.bias(r) = static_cast<T>(rng.uniform(-bound, bound));
      const bool last = i + 2 == widths.size();
      l.activation = last ? output : hidden;
      if (last) l.weight *= output_scale;
      layers.push_back(std::move(l));
    }
    return Mlp(std::move(layers));
  }

  Index input_width() const { return layers_.front().weight.cols(); }
  Index output_width() const { return layers_.back().weight.rows(); }
  const std::vector<Layer<T>>& layers() const { return layers_; }
  std::vector<Layer<T>>& layers() { return layers_; }

  MatrixT forward(const MatrixT& x) const {
    check_input(x);
    MatrixT h = x;
    for (const auto& l : layers_) {
      MatrixT z = l.weight * h;
      z.colwise() += l.bias;
      h = activate(z, l.activation);
    }
    return h;
  }

  VectorT forward(const VectorT& x) const { return forward(MatrixT(x)).col(0); }

  MatrixT forward(const MatrixT& x, Tape& tape) const {
    check_input(x);
    tape.inputs.clear();
    tape.outputs.clear();
    tape.inputs.push_back(x);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      MatrixT z = l.weight * tape.inputs.back();
      z.colwise() += l.bias;
      tape.outputs.push_back(activate(z, l.activation));
      if (i + 1 < layers_.size()) tape.inputs.push_back(tape.outputs.back());
    }
    return tape.outputs.back();
  }

  // Backpropagates dL/d(output). Parameter gradients are accumulated into
  // `grads` when it is non-null; the gradient with respect to the input is
  // returned.
  MatrixT backward(const Tape& tape, const MatrixT& grad_out, Mlp* grads) const {
    if (grad_out.rows() != output_width() || grad_out.cols() != tape.outputs.back().cols())
      throw ConfigError("backward: gradient shape does not match network output");
    MatrixT g = grad_out;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      const auto& l = layers_[k];
      apply_derivative(g, tape.outputs[k], l.activation);
      if (grads) {
        grads->layers_[k].weight.noalias() += g * tape.inputs[k].transpose();
        grads->layers_[k].bias += g.rowwise().sum();
      }
      MatrixT next = l.weight.transpose() * g;
      g.swap(next);
    }
    return g;
  }

  Mlp zeros_like() const {
    Mlp z = *this;
    for (auto& l : z.layers_) {
      l.weight.setZero();
      l.bias.setZero();
    }
    return z;
  }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  VectorT flatten() const {
    VectorT v(parameter_count());
    Index at = 0;
    for (const auto& l : layers_) {
      v.segment(at, l.weight.size()) = Eigen::Map<const VectorT>(l.weight.data(), l.weight.size());
      at += l.weight.size();
      v.segment(at, l.bias.size()) = l.bias;
      at += l.bias.size();
    }
    return v;
  }

  void assign(const VectorT& v) {
    if (v.size() != parameter_count()) throw ConfigError("assign: parameter count mismatch");
    Index at = 0;
    for (auto& l : layers_) {
      Eigen::Map<VectorT>(l.weight.data(), l.weight.size()) = v.segment(at, l.weight.size());
      at += l.weight.size();
      l.bias = v.segment(at, l.bias.size());
      at += l.bias.size();
    }
  }

  bool same_shape(const Mlp& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].weight.rows() != other.layers_[i].weight.rows() ||
          layers_[i].weight.cols() != other.layers_[i].weight.cols())
        return false;
    }
    return true;
  }

  bool all_finite() const {
    for (const auto& l : layers_)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
      if (a.layers_[i].activation != b.layers_[i].activation || a.layers_[i].weight != b.layers_[i].weight ||
          a.layers_[i].bias != b.layers_[i].bias)
        return false;
    }
    return true;
  }

 private:
  void check_input(const MatrixT& x) const {
    if (layers_.empty()) throw ConfigError("forward on an empty network");
    if (x.rows() != input_width())
      throw ConfigError("forward: input width " + std::to_string(x.rows()) + " does not match network input width " +
                        std::to_string(input_width()));
  }

  static MatrixT activate(const MatrixT& z, Activation a) {
    switch (a) {
      case Activation::kTanh: {
        // Saturated tanh rounds to +-1 in floating point; keep the range open.
        const T edge = std::nextafter(T(1), T(0));
        return z.array().tanh().min(edge).max(-edge).matrix();
      }
      case Activation::kRelu: return z.array().max(T(0)).matrix();
      default: return z;
    }
  }

  // relu'(0) = 0: the first branch of max(0, x) is taken at the tie.
  static void apply_derivative(MatrixT& g, const MatrixT& out, Activation a) {
    switch (a) {
      case Activation::kTanh: g.array() *= (T(1) - out.array().square()); break;
      case Activation::kRelu: g.array() *= (out.array() > T(0)).template cast<T>(); break;
      default: break;
    }
  }

  std::vector<Layer<T>> layers_;
};

// Adam moments over a flat parameter vector.
template <typename T>
struct AdamState {
  Eigen::Matrix<T, Eigen::Dynamic, 1> m;
  Eigen::Matrix<T, Eigen::Dynamic, 1> v;
  std::int64_t step = 0;
  T lr = T(1e-4);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);

  AdamState() = default;
  AdamState(Index size, T learning_rate)
      : m(Eigen::Matrix<T, Eigen::Dynamic, 1>::Zero(size)),
        v(Eigen::Matrix<T, Eigen::Dynamic, 1>::Zero(size)),
        lr(learning_rate) {}
};

// One bias-corrected Adam step that decreases the loss whose gradient is
// `grad`.
template <typename T>
void adam_step(Eigen::Matrix<T, Eigen::Dynamic, 1>& params, const Eigen::Matrix<T, Eigen::Dynamic, 1>& grad,
               AdamState<T>& opt) {
  if (grad.size() != params.size() || opt.m.size() != params.size())
    throw ConfigError("adam_step: gradient shape does not match parameters");
  require_finite(grad, "adam_step");
  ++opt.step;
  opt.m = opt.beta1 * opt.m + (T(1) - opt.beta1) * grad;
  opt.v = opt.beta2 * opt.v + (T(1) - opt.beta2) * grad.cwiseProduct(grad);
  const T c1 = T(1) - std::pow(opt.beta1, static_cast<T>(opt.step));
  const T c2 = T(1) - std::pow(opt.beta2, static_cast<T>(opt.step));
  params.array() -= opt.lr * (opt.m.array() / c1) / ((opt.v.array() / c2).sqrt() + opt.eps);
}

template <typename T>
void adam_step(Mlp<T>& net, const Mlp<T>& grads, AdamState<T>& opt) {
  if (!net.same_shape(grads)) throw ConfigError("adam_step: gradient shape does not match network");
  auto p = net.flatten();
  adam_step(p, grads.flatten(), opt);
  net.assign(p);
}

// target <- (1 - tau) target + tau online, in place.
template <typename T>
void blend_into(Mlp<T>& target, const Mlp<T>& online, T tau) {
  if (!target.same_shape(online)) throw ConfigError("blend: shape mismatch");
  for (std::size_t i = 0; i < target.layers().size(); ++i) {
    auto& t = target.layers()[i];
    const auto& o = online.layers()[i];
    t.weight = (T(1) - tau) * t.weight + tau * o.weight;
    t.bias = (T(1) - tau) * t.bias + tau * o.bias;
  }
}

template <typename T>
Mlp<T> blend(const Mlp<T>& target, const Mlp<T>& online, T tau) {
  Mlp<T> out = target;
  blend_into(out, online, tau);
  return out;
}

}  // namespace rsd::nn

namespace rsd {
using Net = nn::Mlp<Scalar>;
using Adam = nn::AdamState<Scalar>;
}  // namespace rsd
