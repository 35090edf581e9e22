#pragma once

#include <cstdint>
#include <vector>

#include "handsynth/core/types.hpp"

namespace handsynth::mask {

/// Binary erosion by a (2r+1)×(2r+1) square. Out-of-bounds neighbours count as unset.
BinaryMask erode(const BinaryMask& mask, int radius);

/// Binary dilation by a (2r+1)×(2r+1) square.
BinaryMask dilate(const BinaryMask& mask, int radius);

/// 8-connected component labels: 0 for background, 1..count in raster order of first pixel.
struct ComponentLabels {
  int count = 0;
  std::vector<std::int32_t> labels;
  std::vector<std::size_t> areas;  // areas[k] for label k+1
};

ComponentLabels label_components(const BinaryMask& mask);

/// Clears every 8-connected component with area < min_area.
BinaryMask remove_small_blobs(const BinaryMask& mask, std::size_t min_area);

/// Keeps the largest 8-connected component (first in raster order on ties).
BinaryMask keep_largest_component(const BinaryMask& mask);

/// Topmost set pixel, ties broken by smallest x. Throws EmptyMask.
Pixel locate_fingertip(const BinaryMask& mask);

/// Tight inclusive box of set pixels. Throws EmptyMask.
BoundingBox bounding_box(const BinaryMask& mask);

/// Builds a HandMask from a non-empty mask via locate_fingertip and bounding_box.
HandMask make_hand_mask(BinaryMask mask);

}  // namespace handsynth::mask
