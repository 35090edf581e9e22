#pragma once

// Brute-force references for the geometry and morphology code. They follow
// the definitions literally and share no code with the library.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "handsynth/core/types.hpp"
#include "handsynth/gesture/affine.hpp"

namespace handsynth::oracle {

inline BinaryMask erode(const BinaryMask& m, int r) {
  BinaryMask out(m.height(), m.width());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool all = true;
      for (int dy = -r; dy <= r && all; ++dy) {
        for (int dx = -r; dx <= r && all; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || xx < 0 || yy >= m.height() || xx >= m.width() || !m.at(yy, xx)) all = false;
        }
      }
      out.set(y, x, all);
    }
  }
  return out;
}

/// Component id per pixel (−1 for unset) by depth-first flood fill.
inline std::vector<int> components(const BinaryMask& m, std::vector<int>& areas) {
  const int h = m.height(), w = m.width();
  std::vector<int> id(static_cast<std::size_t>(h) * w, -1);
  areas.clear();
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (!m.at(y0, x0) || id[y0 * w + x0] >= 0) continue;
      const int label = static_cast<int>(areas.size());
      areas.push_back(0);
      std::vector<std::pair<int, int>> stack{{y0, x0}};
      id[y0 * w + x0] = label;
      while (!stack.empty()) {
        const auto [y, x] = stack.back();
        stack.pop_back();
        ++areas[label];
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || xx < 0 || yy >= h || xx >= w) continue;
            if (!m.at(yy, xx) || id[yy * w + xx] >= 0) continue;
            id[yy * w + xx] = label;
            stack.push_back({yy, xx});
          }
        }
      }
    }
  }
  return id;
}

inline BinaryMask remove_small_blobs(const BinaryMask& m, std::size_t min_area) {
  std::vector<int> areas;
  const auto id = components(m, areas);
  BinaryMask out(m.height(), m.width());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      const int c = id[y * m.width() + x];
      if (c >= 0 && static_cast<std::size_t>(areas[c]) >= min_area) out.set(y, x);
    }
  }
  return out;
}

inline BoundingBox bounding_box(const BinaryMask& m) {
  BoundingBox b{m.width(), m.height(), -1, -1};
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(y, x)) continue;
      b.x_min = std::min(b.x_min, x);
      b.y_min = std::min(b.y_min, y);
      b.x_max = std::max(b.x_max, x);
      b.y_max = std::max(b.y_max, y);
    }
  }
  return b;
}

inline Point2D transform_point(Point2D p, const gesture::AffineTransform2D& t) {
  return {t.a * p.x + t.b * p.y + t.tx, t.c * p.x + t.d * p.y + t.ty};
}

/// Inverse mapping with the inverse solved per pixel by Cramer's rule.
inline BinaryMask warp_mask(const BinaryMask& m, const gesture::AffineTransform2D& t) {
  const double det = t.a * t.d - t.b * t.c;
  BinaryMask out(m.height(), m.width());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      const double rx = x - t.tx, ry = y - t.ty;
      const double sx = (t.d * rx - t.b * ry) / det;
      const double sy = (t.a * ry - t.c * rx) / det;
      const long ix = static_cast<long>(std::floor(sx + 0.5));
      const long iy = static_cast<long>(std::floor(sy + 0.5));
      if (ix < 0 || iy < 0 || ix >= m.width() || iy >= m.height()) continue;
      if (m.at(static_cast<int>(iy), static_cast<int>(ix))) out.set(y, x);
    }
  }
  return out;
}

/// Masks mixing sparse noise and solid rectangles/ellipses, sizes up to max_side.
inline BinaryMask random_shape_mask(std::mt19937_64& rng, int max_side) {
  std::uniform_int_distribution<int> side(4, max_side);
  const int h = side(rng), w = side(rng);
  BinaryMask m(h, w);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int shapes = 1 + static_cast<int>(u(rng) * 4);
  for (int s = 0; s < shapes; ++s) {
    const double cx = u(rng) * w, cy = u(rng) * h;
    const double rx = 1 + u(rng) * w / 3.0, ry = 1 + u(rng) * h / 3.0;
    const bool ellipse = u(rng) < 0.5;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double dx = (x - cx) / rx, dy = (y - cy) / ry;
        if (ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0) m.set(y, x);
      }
    }
  }
  const double noise = u(rng) * 0.1;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (u(rng) < noise) m.set(y, x, !m.at(y, x));
    }
  }
  return m;
}

}  // namespace handsynth::oracle
