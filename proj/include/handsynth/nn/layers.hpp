#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "handsynth/core/checkpoint.hpp"
#include "handsynth/nn/tensor.hpp"

namespace handsynth::nn {

/// Trainable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  FloatBuffer value;
  FloatBuffer grad;

  explicit Parameter(std::string n = {}, std::size_t size = 0) : name(std::move(n)), value(size), grad(size) {}
};

/// Kernel/stride geometry of a convolution, used for receptive-field arithmetic.
struct ConvGeometry {
  int kernel = 1;
  int stride = 1;
  int padding = 0;
};

/// A differentiable stage. `forward` caches what `backward` needs, so each
/// forward must be followed by at most one backward before the next forward.
/// `backward` accumulates parameter gradients and returns ∂L/∂input.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& x) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  /// Same result as forward without touching the backward cache.
  virtual Tensor infer(const Tensor& x) const = 0;
  virtual Shape output_shape(const Shape& in) const = 0;

  virtual void collect_parameters(std::vector<Parameter*>& /*out*/) {}
  /// Weights ~ N(0, stddev²), biases 0. stddev ≤ 0 selects fan-in scaling √(2/fan_in).
  virtual void initialize(std::mt19937_64& /*rng*/, float /*stddev*/) {}
  /// Convolution geometries in application order (empty for pointwise layers).
  virtual void collect_geometry(std::vector<ConvGeometry>& /*out*/) const {}
  virtual void set_prefix(const std::string& /*prefix*/) {}
};

using LayerPtr = std::unique_ptr<Layer>;

/// 2-D convolution with zero padding. Weights Cout×Cin×k×k.
class Conv2d : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride = 1, int padding = 0, bool bias = true);

  Tensor forward(const Tensor& x) override;
  Tensor infer(const Tensor& x) const override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  void collect_parameters(std::vector<Parameter*>& out) override;
  void initialize(std::mt19937_64& rng, float stddev) override;
  void collect_geometry(std::vector<ConvGeometry>& out) const override {
    out.push_back({kernel_, stride_, padding_});
  }
  void set_prefix(const std::string& prefix) override;

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int kernel() const { return kernel_; }

 private:
  int in_, out_, kernel_, stride_, padding_;
  bool has_bias_;
  Parameter weight_;
  Parameter bias_;
  Tensor run(const Tensor& x, std::vector<FloatBuffer>* cols) const;

  Shape in_shape_;
  std::vector<FloatBuffer> cols_;
};

/// Fractionally strided (transposed) convolution. Weights Cin×Cout×k×k.
/// Output size (H−1)·s − 2p + k + output_padding.
class ConvTranspose2d : public Layer {
 public:
  ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride, int padding, int output_padding,
                  bool bias = true);

  Tensor forward(const Tensor& x) override;
  Tensor infer(const Tensor& x) const override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  void collect_parameters(std::vector<Parameter*>& out) override;
  void initialize(std::mt19937_64& rng, float stddev) override;
  void set_prefix(const std::string& prefix) override;

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  int in_channels() const { return in_; }
  int out_channels() const { return out_; }

 private:
  int in_, out_, kernel_, stride_, padding_, output_padding_;
  bool has_bias_;
  Parameter weight_;
  Parameter bias_;
  Tensor input_;
};

/// Per-sample, per-channel normalization over H×W (no affine parameters).
class InstanceNorm2d : public Layer {
 public:
  explicit InstanceNorm2d(float eps = 1e-5f) : eps_(eps) {}

  Tensor forward(const Tensor& x) override;
  Tensor infer(const Tensor& x) const override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }

 private:
  Tensor run(const Tensor& x, std::vector<float>* inv_std) const;

  float eps_;
  Tensor normalized_;
  std::vector<float> inv_std_;
};

/// Mirror padding without repeating the edge pixel.
class ReflectionPad2d : public Layer {
 public:
  explicit ReflectionPad2d(int pad) : pad_(pad) {}

  Tensor forward(const Tensor& x) override;
  Tensor infer(const Tensor& x) const override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return {in.n, in.c, in.h + 2 * pad_, in.w + 2 * pad_}; }
  void collect_geometry(std::vector<ConvGeometry>& out) const override { out.push_back({1, 1, pad_}); }

 private:
  int pad_;
  Shape in_shape_;
};

class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor infer(const Tensor& x) const override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }

 private:
  Tensor input_;
};

class LeakyReLU : public Layer {
 public:
  explicit LeakyReLU(float slope = 0.2f) : slope_(slope) {}

  Tensor forward(const Tensor& x) override;
  Tensor infer(const Tensor& x) const override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }

 private:
  float slope_;
  Tensor input_;
};

class Tanh : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor infer(const Tensor& x) const override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }

 private:
  Tensor output_;
};

/// Ordered chain of layers; parameter names are "<index>.<leaf>" under the prefix.
class Sequential : public Layer {
 public:
  Sequential() = default;

  Sequential& add(LayerPtr layer);
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    add(std::move(layer));
    return ref;
  }

  Tensor forward(const Tensor& x) override;
  Tensor infer(const Tensor& x) const override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  void collect_parameters(std::vector<Parameter*>& out) override;
  void initialize(std::mt19937_64& rng, float stddev) override;
  void collect_geometry(std::vector<ConvGeometry>& out) const override;
  void set_prefix(const std::string& prefix) override;

  std::size_t size() const { return layers_.size(); }
  Layer& at(std::size_t i) { return *layers_[i]; }
  const Layer& at(std::size_t i) const { return *layers_[i]; }

 private:
  std::vector<LayerPtr> layers_;
  std::string prefix_;
};

/// x + body(x); the body keeps the channel count and spatial size.
class ResidualBlock : public Layer {
 public:
  ResidualBlock(int channels, bool normalize);

  Tensor forward(const Tensor& x) override;
  Tensor infer(const Tensor& x) const override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }
  void collect_parameters(std::vector<Parameter*>& out) override { body_.collect_parameters(out); }
  void initialize(std::mt19937_64& rng, float stddev) override { body_.initialize(rng, stddev); }
  void collect_geometry(std::vector<ConvGeometry>& out) const override { body_.collect_geometry(out); }
  void set_prefix(const std::string& prefix) override { body_.set_prefix(prefix); }

  Sequential& body() { return body_; }

 private:
  Sequential body_;
};

/// Receptive field (in input pixels) of one output unit of a conv chain.
int receptive_field(const std::vector<ConvGeometry>& chain);

std::size_t parameter_count(const std::vector<Parameter*>& params);
void zero_grad(const std::vector<Parameter*>& params);

/// Snapshot / restore parameter values by name order.
std::vector<NamedTensor> export_state(const std::vector<Parameter*>& params);
/// Throws ShapeMismatch when names or sizes disagree.
void import_state(const std::vector<Parameter*>& params, const std::vector<NamedTensor>& state);

}  // namespace handsynth::nn
