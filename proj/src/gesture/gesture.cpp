#include "handsynth/gesture/gesture.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "handsynth/core/error.hpp"
#include "handsynth/mask/morphology.hpp"

namespace handsynth::gesture {

std::string to_string(GestureKind kind) {
  switch (kind) {
    case GestureKind::Up: return "up";
    case GestureKind::Down: return "down";
    case GestureKind::Left: return "left";
    case GestureKind::Right: return "right";
    case GestureKind::Circle: return "circle";
  }
  return "unknown";
}

GestureKind parse_gesture_kind(const std::string& name) {
  for (auto kind : {GestureKind::Up, GestureKind::Down, GestureKind::Left, GestureKind::Right, GestureKind::Circle}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown gesture kind '" + name + "'");
}

void GestureSpec::validate() const {
  if (n_frames < 1) throw Error(ErrorCode::ConfigInvalid, "gesture needs at least one frame");
  if (kind == GestureKind::Circle && !(radius > 0.0)) throw Error(ErrorCode::ConfigInvalid, "circle radius must be > 0");
  if (kind != GestureKind::Circle && !(step >= 0.0)) throw Error(ErrorCode::ConfigInvalid, "step must be >= 0");
  if (!(clip_warning_fraction >= 0.0 && clip_warning_fraction <= 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "clip warning fraction must lie in [0,1]");
  }
}

GestureSpec GestureSpec::from_config(const KeyValueConfig& cfg) {
  GestureSpec spec;
  try {
    spec.kind = parse_gesture_kind(cfg.get_string("gesture.kind", to_string(spec.kind)));
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("key 'gesture.kind': ") + e.what());
  }
  spec.n_frames = static_cast<int>(cfg.get_int("gesture.n_frames", spec.n_frames));
  spec.step = cfg.get_double("gesture.step", spec.step);
  spec.center.x = cfg.get_double("gesture.center_x", spec.center.x);
  spec.center.y = cfg.get_double("gesture.center_y", spec.center.y);
  spec.radius = cfg.get_double("gesture.radius", spec.radius);
  spec.start_angle = cfg.get_double("gesture.start_angle", spec.start_angle);
  spec.orient_mask = cfg.get_bool("gesture.orient_mask", spec.orient_mask);
  spec.clip_warning_fraction = cfg.get_double("gesture.clip_threshold", spec.clip_warning_fraction);
  try {
    spec.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("key 'gesture.*': ") + e.what());
  }
  return spec;
}

double normalize_angle(double radians) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(radians, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

std::vector<Pose2D> make_trajectory(const GestureSpec& spec, Point2D start) {
  spec.validate();
  std::vector<Pose2D> poses;
  poses.reserve(spec.n_frames);
  if (spec.kind == GestureKind::Circle) {
    for (int k = 0; k < spec.n_frames; ++k) {
      const double angle = spec.start_angle + 2.0 * std::numbers::pi * k / spec.n_frames;
      poses.push_back({{spec.center.x + spec.radius * std::cos(angle), spec.center.y + spec.radius * std::sin(angle)},
                       normalize_angle(angle + std::numbers::pi / 2.0)});
    }
    return poses;
  }
  Point2D dir{0.0, 0.0};
  switch (spec.kind) {
    case GestureKind::Up: dir = {0.0, -1.0}; break;
    case GestureKind::Down: dir = {0.0, 1.0}; break;
    case GestureKind::Left: dir = {-1.0, 0.0}; break;
    case GestureKind::Right: dir = {1.0, 0.0}; break;
    case GestureKind::Circle: break;
  }
  for (int k = 0; k < spec.n_frames; ++k) {
    poses.push_back({{start.x + k * spec.step * dir.x, start.y + k * spec.step * dir.y}, 0.0});
  }
  return poses;
}

AffineTransform2D pose_to_affine(const Pose2D& reference, const Pose2D& target, bool orient_mask) {
  const double dx = target.position.x - reference.position.x;
  const double dy = target.position.y - reference.position.y;
  if (!orient_mask) return AffineTransform2D::translation(dx, dy);
  const double delta = target.orientation - reference.orientation;
  if (delta == 0.0) return AffineTransform2D::translation(dx, dy);
  // Rotation about the reference position, then the translation; the
  // translation column is set so reference.position lands exactly on target.
  AffineTransform2D t = AffineTransform2D::translation(dx, dy).compose(AffineTransform2D::rotation(delta, reference.position));
  t.tx = target.position.x - (t.a * reference.position.x + t.b * reference.position.y);
  t.ty = target.position.y - (t.c * reference.position.x + t.d * reference.position.y);
  return t;
}

Pixel nearest_set_pixel(const BinaryMask& mask, Point2D p) {
  Pixel best{-1, -1};
  double best_d = std::numeric_limits<double>::infinity();
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(y, x)) continue;
      const double d = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
      // Raster order visits smaller y, then smaller x, first; strict < keeps it.
      if (d < best_d) {
        best_d = d;
        best = {x, y};
      }
    }
  }
  if (best.x < 0) throw Error(ErrorCode::EmptyMask, "no set pixel to snap to");
  return best;
}

MaskSequence synthesize_mask_sequence(const HandMask& reference, const GestureSpec& spec) {
  spec.validate();
  if (!reference.consistent()) throw Error(ErrorCode::EmptyFrame, "reference hand mask is inconsistent");

  const Point2D tip{static_cast<double>(reference.fingertip.x), static_cast<double>(reference.fingertip.y)};
  const auto poses = make_trajectory(spec, tip);
  const Pose2D anchor{tip, poses.front().orientation};
  const double ref_area = static_cast<double>(reference.mask.area());

  MaskSequence seq;
  seq.spec = spec;
  seq.reference = reference;
  for (std::size_t k = 0; k < poses.size(); ++k) {
    const AffineTransform2D t = pose_to_affine(anchor, poses[k], spec.orient_mask);
    BinaryMask warped = warp_mask(reference.mask, t);
    if (!warped.any()) throw Error(ErrorCode::EmptyFrame, "frame " + std::to_string(k) + " left the canvas");
    const double lost = 1.0 - static_cast<double>(warped.area()) / ref_area;
    if (lost > spec.clip_warning_fraction) {
      seq.warnings.push_back("MaskClipped: frame " + std::to_string(k) + " lost " +
                             std::to_string(static_cast<int>(std::lround(lost * 100))) + "% of the reference area");
    }
    HandMask frame;
    frame.fingertip = nearest_set_pixel(warped, transform_point(tip, t));
    frame.bbox = mask::bounding_box(warped);
    frame.mask = std::move(warped);
    seq.frames.push_back(std::move(frame));
    seq.transforms.push_back(t);
  }
  return seq;
}

}  // namespace handsynth::gesture
