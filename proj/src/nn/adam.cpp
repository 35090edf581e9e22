#include "handsynth/nn/adam.hpp"

#include <cmath>

#include "handsynth/core/error.hpp"

namespace handsynth::nn {

Adam::Adam(std::vector<Parameter*> params, AdamOptions options) : params_(std::move(params)), options_(options) {
  for (const auto* p : params_) {
    m_.emplace_back(p->value.size(), 0.0f);
    v_.emplace_back(p->value.size(), 0.0f);
  }
}

void Adam::step(double learning_rate) {
  ++t_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const float step_size = static_cast<float>(learning_rate / correction1);
  const float inv_sqrt_c2 = static_cast<float>(1.0 / std::sqrt(correction2));
  const float eps = static_cast<float>(options_.eps);
  const float decay = static_cast<float>(options_.weight_decay);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& value = params_[i]->value;
    const auto& grad = params_[i]->grad;
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const float g = grad[j] + decay * value[j];
      m[j] = static_cast<float>(b1) * m[j] + static_cast<float>(1.0 - b1) * g;
      v[j] = static_cast<float>(b2) * v[j] + static_cast<float>(1.0 - b2) * g * g;
      value[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_c2 + eps);
    }
  }
}

std::vector<NamedTensor> Adam::export_moments() const {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.push_back({params_[i]->name + "#m", m_[i]});
    out.push_back({params_[i]->name + "#v", v_[i]});
  }
  return out;
}

void Adam::import_moments(const std::vector<NamedTensor>& moments, long long steps) {
  if (moments.size() != 2 * params_.size()) throw Error(ErrorCode::ShapeMismatch, "optimizer state size mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (moments[2 * i].values.size() != m_[i].size() || moments[2 * i + 1].values.size() != v_[i].size()) {
      throw Error(ErrorCode::ShapeMismatch, "optimizer moment size mismatch for " + params_[i]->name);
    }
    m_[i] = moments[2 * i].values;
    v_[i] = moments[2 * i + 1].values;
  }
  t_ = steps;
}

}  // namespace handsynth::nn
