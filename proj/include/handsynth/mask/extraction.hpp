#pragma once

#include "handsynth/core/config.hpp"
#include "handsynth/core/types.hpp"
#include "handsynth/mask/color.hpp"
#include "handsynth/mask/grabcut.hpp"

namespace handsynth::mask {

struct ExtractionConfig {
  HsvRange skin;
  GrabCutParams grabcut;
  int erode_radius = 1;
  std::size_t min_blob_area = 50;

  /// Reads `skin.*`, `grabcut.k`, `grabcut.iterations`, `erode.radius`, `blob.min_area`.
  static ExtractionConfig from_config(const KeyValueConfig& cfg);
};

/// Seed trimap for a frame: skin pixels probable-fg, others probable-bg,
/// the one-pixel image border definite-bg.
Trimap seed_trimap(const BinaryMask& skin);

/// Skin threshold → foreground refinement → ∩ skin → erode → blob removal →
/// largest component, plus fingertip and bbox. Throws NoHandFound when
/// nothing survives.
HandMask extract_hand_mask(const ImageFrame& rgb, const ExtractionConfig& config = {});

}  // namespace handsynth::mask
