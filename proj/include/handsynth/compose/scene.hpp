#pragma once

#include <string>

#include "handsynth/core/types.hpp"
#include "handsynth/nn/tensor.hpp"

namespace handsynth::compose {

/// Binary hand layout plus fingertip, tagged with the target domain.
struct LayoutMap {
  BinaryMask mask;
  Point2D fingertip;
  std::string domain_label;
};

/// out(p) = fg(p) where mask is set, bg(p) elsewhere. Throws ShapeMismatch.
ImageFrame composite(const ImageFrame& fg, const ImageFrame& bg, const BinaryMask& mask);

inline constexpr double kFingertipSigma = 5.0;

/// 1×1×H×W Gaussian heatmap exp(−d²/2σ²) around the fingertip, peak 1.
nn::Tensor fingertip_channel(const LayoutMap& layout, double sigma = kFingertipSigma);

/// Replaces every masked pixel with the colour of the nearest unmasked pixel
/// (breadth-first over 4-neighbours, ties resolved by queue order). A fully
/// masked frame is returned unchanged.
ImageFrame inpaint_nearest_border(const ImageFrame& frame, const BinaryMask& mask);

/// Circular mean hue (degrees) of the masked pixels; NaN for an empty mask.
double mean_skin_hue(const ImageFrame& frame, const BinaryMask& mask);

}  // namespace handsynth::compose
