#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "handsynth/core/types.hpp"

namespace handsynth::pipeline {

/// Synthetic skin silhouette: an elliptical palm with one raised finger
/// ending in a rounded tip.
struct HandShape {
  Point2D palm_center{32.0, 40.0};
  double palm_half_width = 10.0;
  double palm_half_height = 8.0;
  double finger_half_width = 2.5;
  double finger_length = 14.0;
  /// Finger direction in radians; 0 points straight up.
  double finger_angle = 0.0;
};

struct RenderedScene {
  ImageFrame image;
  BinaryMask truth;
  Pixel fingertip;
  BoundingBox bbox;
};

/// Skin in HSV hue ~20°, saturation ~0.4, background a hue in 150–230°,
/// so both sit on opposite sides of the default skin range. Pixel noise
/// of ±`noise` is added to both regions.
RenderedScene render_hand_scene(int height, int width, const HandShape& shape, double background_hue,
                                std::uint64_t seed, double noise = 0.03);

struct ToyDatasetOptions {
  std::vector<std::string> environments{"indoor", "outdoor"};
  /// One background hue per environment.
  std::vector<double> background_hues{200.0, 150.0};
  int frames_per_environment = 16;
  int size = 64;
  std::uint64_t seed = 0;
};

/// Writes `root/<environment>/annotations.csv` plus PNG frames with
/// annotations derived from the truth masks.
void write_toy_dataset(const std::filesystem::path& root, const ToyDatasetOptions& options = {});

}  // namespace handsynth::pipeline
