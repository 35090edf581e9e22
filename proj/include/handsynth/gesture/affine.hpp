#pragma once

#include "handsynth/core/types.hpp"

namespace handsynth::gesture {

/// 2×3 matrix [a b tx; c d ty] mapping (x, y) → (a·x + b·y + tx, c·x + d·y + ty)
/// in y-down image coordinates. A positive rotation angle turns +x toward +y,
/// which is clockwise on screen.
struct AffineTransform2D {
  double a = 1.0, b = 0.0, tx = 0.0;
  double c = 0.0, d = 1.0, ty = 0.0;

  static AffineTransform2D identity() { return {}; }
  static AffineTransform2D translation(double dx, double dy) { return {1.0, 0.0, dx, 0.0, 1.0, dy}; }
  /// Rotation by `angle` radians about `center`.
  static AffineTransform2D rotation(double angle, Point2D center);

  double determinant() const { return a * d - b * c; }
  bool invertible() const;
  /// Throws SingularTransform when |det| ≤ 1e-9.
  AffineTransform2D inverse() const;
  /// this ∘ other: apply `other` first.
  AffineTransform2D compose(const AffineTransform2D& other) const;

  friend bool operator==(const AffineTransform2D&, const AffineTransform2D&) = default;
};

Point2D transform_point(Point2D p, const AffineTransform2D& t);

/// Inverse-mapping nearest-neighbour warp: output pixel q is set iff
/// round(t⁻¹(q)) is in bounds and set in `mask`, rounding halves up
/// (floor(v + 0.5)). Output keeps input size.
BinaryMask warp_mask(const BinaryMask& mask, const AffineTransform2D& t);

}  // namespace handsynth::gesture
