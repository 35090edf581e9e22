#include "handsynth/gesture/affine.hpp"

#include <cmath>

#include "handsynth/core/error.hpp"

namespace handsynth::gesture {

namespace {
constexpr double kSingularEps = 1e-9;
}

AffineTransform2D AffineTransform2D::rotation(double angle, Point2D center) {
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  // R(p − center) + center
  return {cs, -sn, center.x - cs * center.x + sn * center.y, sn, cs, center.y - sn * center.x - cs * center.y};
}

bool AffineTransform2D::invertible() const { return std::fabs(determinant()) > kSingularEps; }

AffineTransform2D AffineTransform2D::inverse() const {
  const double det = determinant();
  if (!(std::fabs(det) > kSingularEps)) throw Error(ErrorCode::SingularTransform, "determinant " + std::to_string(det));
  const double ia = d / det;
  const double ib = -b / det;
  const double ic = -c / det;
  const double id = a / det;
  return {ia, ib, -(ia * tx + ib * ty), ic, id, -(ic * tx + id * ty)};
}

AffineTransform2D AffineTransform2D::compose(const AffineTransform2D& o) const {
  return {a * o.a + b * o.c, a * o.b + b * o.d, a * o.tx + b * o.ty + tx,
          c * o.a + d * o.c, c * o.b + d * o.d, c * o.tx + d * o.ty + ty};
}

Point2D transform_point(Point2D p, const AffineTransform2D& t) {
  return {t.a * p.x + t.b * p.y + t.tx, t.c * p.x + t.d * p.y + t.ty};
}

BinaryMask warp_mask(const BinaryMask& mask, const AffineTransform2D& t) {
  const AffineTransform2D inv = t.inverse();
  BinaryMask out(mask.height(), mask.width());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const Point2D src = transform_point({static_cast<double>(x), static_cast<double>(y)}, inv);
      const double sx = std::floor(src.x + 0.5);
      const double sy = std::floor(src.y + 0.5);
      if (sx < 0.0 || sy < 0.0 || sx >= mask.width() || sy >= mask.height()) continue;
      if (mask.at(static_cast<int>(sy), static_cast<int>(sx))) out.set(y, x);
    }
  }
  return out;
}

}  // namespace handsynth::gesture
