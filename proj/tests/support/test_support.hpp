#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "handsynth/core/types.hpp"
#include "handsynth/nn/layers.hpp"

namespace handsynth::testing {

inline nn::Tensor random_tensor(nn::Shape shape, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
  nn::Tensor t(shape);
  std::uniform_real_distribution<float> dist(lo, hi);
  for (float& v : t.data()) v = dist(rng);
  return t;
}

inline BinaryMask random_mask(int h, int w, double density, std::mt19937_64& rng) {
  BinaryMask m(h, w);
  std::bernoulli_distribution bit(density);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.set(y, x, bit(rng));
  }
  return m;
}

inline double weighted_sum(const nn::Tensor& out, const nn::Tensor& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.numel(); ++i) s += static_cast<double>(out.data()[i]) * weights.data()[i];
  return s;
}

/// Largest mismatch between analytic and central-difference gradients of
/// L = Σ g ⊙ layer(x), normalized as |a − n| / max(1, |a|, |n|).
struct GradCheck {
  double input_error = 0.0;
  double param_error = 0.0;
};

inline GradCheck check_layer_gradients(nn::Layer& layer, nn::Tensor x, std::mt19937_64& rng, float step = 1e-2f) {
  const nn::Tensor out = layer.forward(x);
  const nn::Tensor g = random_tensor(out.shape(), rng);
  std::vector<nn::Parameter*> params;
  layer.collect_parameters(params);
  nn::zero_grad(params);
  const nn::Tensor dx = layer.backward(g);

  auto rel = [](double a, double n) { return std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)}); };
  GradCheck result;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const float orig = x.data()[i];
    x.data()[i] = orig + step;
    const double up = weighted_sum(layer.infer(x), g);
    x.data()[i] = orig - step;
    const double down = weighted_sum(layer.infer(x), g);
    x.data()[i] = orig;
    result.input_error = std::max(result.input_error, rel(dx.data()[i], (up - down) / (2.0 * step)));
  }
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const float orig = p->value[i];
      p->value[i] = orig + step;
      const double up = weighted_sum(layer.infer(x), g);
      p->value[i] = orig - step;
      const double down = weighted_sum(layer.infer(x), g);
      p->value[i] = orig;
      result.param_error = std::max(result.param_error, rel(p->grad[i], (up - down) / (2.0 * step)));
    }
  }
  return result;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("handsynth_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace handsynth::testing
