#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "handsynth/core/types.hpp"
#include "handsynth/nn/layers.hpp"

namespace handsynth::translate {

enum class Normalization { Instance, None };

std::string to_string(Normalization norm);
Normalization parse_normalization(const std::string& name);

/// Residual encoder/decoder generator.
struct GeneratorConfig {
  int input_size = 256;
  int base_channels = 64;
  int n_res_blocks = 9;
  int n_downsamples = 2;
  int in_channels = 3;
  int out_channels = 3;
  Normalization norm = Normalization::Instance;

  /// Throws ConfigInvalid.
  void validate() const;
  nlohmann::json to_json() const;
  static GeneratorConfig from_json(const nlohmann::json& j);
};

/// Fully convolutional patch discriminator.
struct DiscriminatorConfig {
  int patch_receptive_field = 70;
  int base_channels = 64;
  /// Number of stride-2 convolutions before the stride-1 layer and the head.
  int n_layers = 3;
  int in_channels = 3;
  Normalization norm = Normalization::Instance;

  /// Throws ConfigInvalid, including when the layer stack's receptive field
  /// differs from patch_receptive_field.
  void validate() const;
  nlohmann::json to_json() const;
  static DiscriminatorConfig from_json(const nlohmann::json& j);
};

/// Receptive field of the patch discriminator stack with `n_layers` stride-2 layers.
int patch_receptive_field(int n_layers);

/// c7s1 input conv → n_downsamples stride-2 convs → residual blocks →
/// n_downsamples stride-½ (transposed) convs → c7s1 output conv → tanh.
class Generator {
 public:
  explicit Generator(const GeneratorConfig& cfg);

  Generator(Generator&&) noexcept = default;
  Generator& operator=(Generator&&) noexcept = default;

  const GeneratorConfig& config() const { return cfg_; }

  nn::Tensor forward(const nn::Tensor& x) { return net_.forward(x); }
  nn::Tensor backward(const nn::Tensor& grad) { return net_.backward(grad); }
  nn::Tensor infer(const nn::Tensor& x) const;

  nn::Shape output_shape(const nn::Shape& in) const { return net_.output_shape(in); }
  /// Feature map shape entering the first residual block.
  nn::Shape bottleneck_shape(const nn::Shape& in) const;

  std::vector<nn::Parameter*> parameters();
  std::size_t parameter_count();
  int residual_block_count() const { return static_cast<int>(blocks_.size()); }
  std::vector<nn::ResidualBlock*>& residual_blocks() { return blocks_; }

  void initialize(std::uint64_t seed, float stddev = 0.02f);
  /// Sets every residual body's weights and biases to zero, so each block is the identity.
  void zero_residual_path();

  nn::Sequential& network() { return net_; }

 private:
  GeneratorConfig cfg_;
  nn::Sequential net_;
  std::vector<nn::ResidualBlock*> blocks_;
  std::size_t first_block_index_ = 0;
};

class Discriminator {
 public:
  explicit Discriminator(const DiscriminatorConfig& cfg);

  Discriminator(Discriminator&&) noexcept = default;
  Discriminator& operator=(Discriminator&&) noexcept = default;

  const DiscriminatorConfig& config() const { return cfg_; }

  /// Throws InputTooSmall for inputs smaller than the receptive field.
  nn::Tensor forward(const nn::Tensor& x);
  nn::Tensor backward(const nn::Tensor& grad) { return net_.backward(grad); }
  nn::Tensor infer(const nn::Tensor& x) const;

  nn::Shape score_shape(const nn::Shape& in) const;
  int receptive_field() const;

  std::vector<nn::Parameter*> parameters();
  std::size_t parameter_count();

  /// Parameters of a whole-image discriminator sharing this trunk but
  /// replacing the 1-channel conv head with a dense layer over the full
  /// pre-head feature map at `input_size`.
  std::size_t dense_head_parameter_count(int input_size);

  void initialize(std::uint64_t seed, float stddev = 0.02f);

  nn::Sequential& network() { return net_; }

 private:
  void check_input(const nn::Shape& in) const;

  DiscriminatorConfig cfg_;
  nn::Sequential net_;
};

/// Validates and builds an initialized network (N(0, 0.02) weights).
Generator build_generator(const GeneratorConfig& cfg, std::uint64_t seed = 0);
Discriminator build_patch_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed = 0);

/// Generator whose forward pass returns tanh of the input exactly (up to
/// float rounding): residual bodies zeroed, the input conv splits each colour
/// into ±x rectified channels, stride-2 convs and transposed convs act as
/// space-to-depth / depth-to-space, and the output conv recombines.
/// Requires norm = None, 3 input/output channels and
/// base_channels ≥ 6·2^n_downsamples; throws ConfigInvalid otherwise.
Generator make_passthrough_generator(const GeneratorConfig& cfg);

/// Deterministic forward pass: [0,1] RGB → [0,1] RGB. Throws ShapeIncompatible
/// when frame dimensions are not divisible by 2^n_downsamples.
ImageFrame translate(const ImageFrame& frame, const Generator& gen);

}  // namespace handsynth::translate
