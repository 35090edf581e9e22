#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "handsynth/core/error.hpp"
#include "handsynth/core/types.hpp"

namespace handsynth::translate {

/// Least-squares adversarial objective values.
struct AdversarialLoss {
  double d_loss = 0.0;
  double g_loss = 0.0;
};

/// Gradients of the adversarial objective w.r.t. each score map.
template <typename T>
struct AdversarialGrad {
  std::vector<T> d_real;  ///< ∂d_loss/∂scores_real
  std::vector<T> d_fake;  ///< ∂d_loss/∂scores_fake
  std::vector<T> g_fake;  ///< ∂g_loss/∂scores_fake
};

namespace detail {

template <typename T>
void require_finite(std::span<const T> scores) {
  for (T s : scores) {
    if (!std::isfinite(static_cast<double>(s))) throw Error(ErrorCode::NonFiniteScores, "score map has non-finite values");
  }
  if (scores.empty()) throw Error(ErrorCode::NonFiniteScores, "empty score map");
}

}  // namespace detail

/// mean((s − target)²) and its gradient 2(s − target)/N.
template <typename T>
double squared_error_to(std::span<const T> scores, double target, std::vector<T>* grad = nullptr) {
  detail::require_finite(scores);
  const double n = static_cast<double>(scores.size());
  double sum = 0.0;
  if (grad) grad->resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double diff = static_cast<double>(scores[i]) - target;
    sum += diff * diff;
    if (grad) (*grad)[i] = static_cast<T>(2.0 * diff / n);
  }
  return sum / n;
}

/// d_loss = mean((real − 1)²) + mean(fake²); g_loss = mean((fake − 1)²).
/// Throws NonFiniteScores.
template <typename T>
AdversarialLoss adversarial_loss(std::span<const T> scores_real, std::span<const T> scores_fake,
                                 AdversarialGrad<T>* grad = nullptr) {
  AdversarialLoss loss;
  loss.d_loss = squared_error_to(scores_real, 1.0, grad ? &grad->d_real : nullptr) +
                squared_error_to(scores_fake, 0.0, grad ? &grad->d_fake : nullptr);
  loss.g_loss = squared_error_to(scores_fake, 1.0, grad ? &grad->g_fake : nullptr);
  return loss;
}

/// weight · mean(|x − x_rec|). The gradient is w.r.t. x_rec (subgradient 0
/// where the two agree). Throws ShapeMismatch.
template <typename T>
double cycle_loss(std::span<const T> x, std::span<const T> x_rec, double weight, std::vector<T>* grad = nullptr) {
  if (x.size() != x_rec.size() || x.empty()) {
    throw Error(ErrorCode::ShapeMismatch, "cycle_loss operands differ in size");
  }
  const double n = static_cast<double>(x.size());
  double sum = 0.0;
  if (grad) grad->resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = static_cast<double>(x_rec[i]) - static_cast<double>(x[i]);
    sum += std::abs(diff);
    if (grad) (*grad)[i] = static_cast<T>(diff > 0 ? weight / n : diff < 0 ? -weight / n : 0.0);
  }
  return weight * sum / n;
}

/// Image overload; shapes must match exactly.
inline double cycle_loss(const ImageFrame& x, const ImageFrame& x_rec, double weight = 10.0) {
  if (x.height() != x_rec.height() || x.width() != x_rec.width()) {
    throw Error(ErrorCode::ShapeMismatch, "cycle_loss frames differ in size");
  }
  return cycle_loss<float>(x.data(), x_rec.data(), weight);
}

}  // namespace handsynth::translate
