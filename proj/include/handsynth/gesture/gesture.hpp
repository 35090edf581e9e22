#pragma once

#include <string>
#include <vector>

#include "handsynth/core/config.hpp"
#include "handsynth/core/types.hpp"
#include "handsynth/gesture/affine.hpp"

namespace handsynth::gesture {

enum class GestureKind { Up, Down, Left, Right, Circle };

std::string to_string(GestureKind kind);
/// Throws ConfigInvalid for unknown names.
GestureKind parse_gesture_kind(const std::string& name);

struct GestureSpec {
  GestureKind kind = GestureKind::Circle;
  int n_frames = 8;
  /// Pixels per frame for the linear kinds.
  double step = 4.0;
  /// Circle parameters.
  Point2D center{32.0, 32.0};
  double radius = 10.0;
  double start_angle = 0.0;
  /// Rotate the mask with the trajectory tangent.
  bool orient_mask = true;
  /// Fraction of reference area a frame may lose to clipping before a warning.
  double clip_warning_fraction = 0.2;

  /// Throws ConfigInvalid when an invariant fails.
  void validate() const;

  /// Reads the `gesture.*` keys.
  static GestureSpec from_config(const KeyValueConfig& cfg);
};

struct Pose2D {
  Point2D position;
  /// Radians, normalized to (−π, π].
  double orientation = 0.0;
};

double normalize_angle(double radians);

/// Linear kinds start at `start` and advance `step` px per frame along the
/// unit direction (up = −y). Circle ignores `start`; pose k sits at angle
/// start_angle + 2πk/n with orientation along the tangent.
std::vector<Pose2D> make_trajectory(const GestureSpec& spec, Point2D start);

/// Rigid map taking `reference.position` to `target.position`, rotating by
/// the orientation delta about the reference position when `orient_mask`.
AffineTransform2D pose_to_affine(const Pose2D& reference, const Pose2D& target, bool orient_mask);

struct MaskSequence {
  std::vector<HandMask> frames;
  std::vector<AffineTransform2D> transforms;
  GestureSpec spec;
  HandMask reference;
  /// Non-fatal notes such as MaskClipped, one entry per affected frame.
  std::vector<std::string> warnings;
};

/// Set pixel of `mask` nearest to `p` (Euclidean; ties by smaller y, then x). Throws EmptyMask.
Pixel nearest_set_pixel(const BinaryMask& mask, Point2D p);

/// Animates `reference` along the gesture trajectory. Throws EmptyFrame when a
/// warped frame loses every pixel.
MaskSequence synthesize_mask_sequence(const HandMask& reference, const GestureSpec& spec);

}  // namespace handsynth::gesture
