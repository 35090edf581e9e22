#pragma once

#include <vector>

#include "handsynth/nn/layers.hpp"

namespace handsynth::nn {

struct AdamOptions {
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// L2 coefficient added to the gradient (coupled weight decay).
  double weight_decay = 0.0;
};

/// Adam with bias correction. The learning rate is passed per step so an
/// external schedule can drive it.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options = {});

  void step(double learning_rate);
  void zero_grad() { nn::zero_grad(params_); }

  const std::vector<Parameter*>& parameters() const { return params_; }
  long long steps_taken() const { return t_; }

  /// Moment buffers, for checkpointing.
  std::vector<NamedTensor> export_moments() const;
  void import_moments(const std::vector<NamedTensor>& moments, long long steps);

 private:
  std::vector<Parameter*> params_;
  AdamOptions options_;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
  long long t_ = 0;
};

}  // namespace handsynth::nn
