#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "handsynth/core/types.hpp"

namespace handsynth::mask {

enum class TrimapLabel : std::uint8_t { DefiniteBackground, ProbableBackground, ProbableForeground, DefiniteForeground };

/// Four-level seed labeling over a frame. Accessors take (y, x).
class Trimap {
 public:
  Trimap() = default;
  Trimap(int height, int width, TrimapLabel fill = TrimapLabel::ProbableBackground)
      : height_(height), width_(width), labels_(static_cast<std::size_t>(height) * width, fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  TrimapLabel at(int y, int x) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int y, int x, TrimapLabel label) { labels_[static_cast<std::size_t>(y) * width_ + x] = label; }
  const std::vector<TrimapLabel>& labels() const { return labels_; }

  /// Pixels with the given label as a mask.
  BinaryMask select(TrimapLabel label) const;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<TrimapLabel> labels_;
};

/// Mixture of isotropic Gaussians over RGB.
struct SphericalGmm {
  struct Component {
    double weight = 0.0;
    std::array<double, 3> mean{};
    double variance = 0.0;
  };
  std::vector<Component> components;

  /// −log p(color).
  double neg_log_likelihood(const std::array<double, 3>& color) const;
};

/// K-means (farthest-point seeding, fixed Lloyd iterations) followed by one
/// pass of per-cluster weight/mean/variance. Fewer than `k` samples falls
/// back to a single component. Requires at least one sample.
SphericalGmm fit_spherical_gmm(const std::vector<std::array<double, 3>>& samples, int k);

struct GrabCutParams {
  int components = 5;
  int iterations = 5;
  /// Pairwise weight γ on 8-neighbour edges; diagonal edges are divided by √2.
  double smoothness = 50.0;
};

/// Iterative colour-model / min-cut foreground extraction.
///
/// Each round fits a SphericalGmm to the current foreground and background
/// pixel sets, builds unary costs from their likelihoods and contrast-weighted
/// pairwise costs exp(−β‖Δc‖²) with β = 1/(2·mean‖Δc‖²), and solves the
/// energy exactly by max-flow. Definite labels are hard constraints.
///
/// Throws InvalidTrimap unless the trimap has at least one foreground-side
/// and one background-side pixel (definite or probable), and ConfigInvalid
/// for iterations < 1 or components < 1.
BinaryMask refine_foreground(const ImageFrame& rgb, const Trimap& trimap, const GrabCutParams& params = {});

}  // namespace handsynth::mask
