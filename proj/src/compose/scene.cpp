#include "handsynth/compose/scene.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "handsynth/core/error.hpp"
#include "handsynth/mask/color.hpp"

namespace handsynth::compose {

ImageFrame composite(const ImageFrame& fg, const ImageFrame& bg, const BinaryMask& mask) {
  if (fg.height() != bg.height() || fg.width() != bg.width() || mask.height() != bg.height() ||
      mask.width() != bg.width()) {
    throw Error(ErrorCode::ShapeMismatch, "composite operands differ in size");
  }
  ImageFrame out = bg;
  for (int y = 0; y < bg.height(); ++y) {
    for (int x = 0; x < bg.width(); ++x) {
      if (!mask.at(y, x)) continue;
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = fg.at(y, x, c);
    }
  }
  return out;
}

nn::Tensor fingertip_channel(const LayoutMap& layout, double sigma) {
  const int h = layout.mask.height();
  const int w = layout.mask.width();
  nn::Tensor t({1, 1, h, w});
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - layout.fingertip.x;
      const double dy = y - layout.fingertip.y;
      t.at(0, 0, y, x) = static_cast<float>(std::exp(-(dx * dx + dy * dy) * inv));
    }
  }
  return t;
}

ImageFrame inpaint_nearest_border(const ImageFrame& frame, const BinaryMask& mask) {
  if (mask.height() != frame.height() || mask.width() != frame.width()) {
    throw Error(ErrorCode::ShapeMismatch, "inpaint mask differs in size from the frame");
  }
  const int h = frame.height();
  const int w = frame.width();
  ImageFrame out = frame;
  std::vector<std::uint8_t> filled(static_cast<std::size_t>(h) * w);
  std::deque<Pixel> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(y, x)) {
        filled[static_cast<std::size_t>(y) * w + x] = 1;
        queue.push_back({x, y});
      }
    }
  }
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  while (!queue.empty()) {
    const Pixel p = queue.front();
    queue.pop_front();
    for (int k = 0; k < 4; ++k) {
      const int nx = p.x + kDx[k];
      const int ny = p.y + kDy[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      auto& f = filled[static_cast<std::size_t>(ny) * w + nx];
      if (f) continue;
      f = 1;
      for (int c = 0; c < 3; ++c) out.at(ny, nx, c) = out.at(p.y, p.x, c);
      queue.push_back({nx, ny});
    }
  }
  return out;
}

double mean_skin_hue(const ImageFrame& frame, const BinaryMask& mask) {
  const ImageFrame hsv = mask::rgb_to_hsv(frame);
  double sx = 0.0;
  double sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      if (!mask.at(y, x)) continue;
      const double rad = hsv.at(y, x, 0) * std::numbers::pi / 180.0;
      sx += std::cos(rad);
      sy += std::sin(rad);
      ++n;
    }
  }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  double deg = std::atan2(sy, sx) * 180.0 / std::numbers::pi;
  if (deg < 0) deg += 360.0;
  return deg;
}

}  // namespace handsynth::compose
