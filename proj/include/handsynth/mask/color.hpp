#pragma once

#include "handsynth/core/types.hpp"

namespace handsynth::mask {

/// Hexcone HSV conversion. H in degrees [0,360), S and V in [0,1].
/// Gray pixels get H = 0 and S = 0 exactly. Throws ValueOutOfRange for
/// channel values outside [0,1].
ImageFrame rgb_to_hsv(const ImageFrame& rgb);

/// Inverse of rgb_to_hsv.
ImageFrame hsv_to_rgb(const ImageFrame& hsv);

/// Skin colour box in HSV. h_low > h_high denotes a hue interval wrapping through 0°.
struct HsvRange {
  double h_low = 0.0;
  double h_high = 50.0;
  double s_low = 0.23;
  double s_high = 0.68;
  double v_low = 0.35;
  double v_high = 1.0;

  bool contains(double h, double s, double v) const;
  /// Throws ConfigInvalid when s/v bounds are inverted or out of range.
  void validate() const;
};

/// Pixel set iff its (H,S,V) lies in `range`. Frame must be HSV.
BinaryMask skin_threshold(const ImageFrame& hsv, const HsvRange& range);

}  // namespace handsynth::mask
