#include "handsynth/mask/morphology.hpp"

#include <algorithm>
#include <climits>

#include "handsynth/core/error.hpp"

namespace handsynth::mask {

namespace {

/// Separable min/max filter along rows then columns; `erosion` selects min.
BinaryMask square_filter(const BinaryMask& mask, int radius, bool erosion) {
  if (radius < 0) throw Error(ErrorCode::ConfigInvalid, "radius must be non-negative");
  if (radius == 0) return mask;
  const int h = mask.height();
  const int w = mask.width();
  BinaryMask rows(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool v = erosion;
      for (int dx = -radius; dx <= radius; ++dx) {
        const int xx = x + dx;
        const bool s = xx >= 0 && xx < w && mask.at(y, xx);
        if (erosion ? !s : s) {
          v = !erosion;
          break;
        }
      }
      rows.set(y, x, v);
    }
  }
  BinaryMask out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool v = erosion;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = y + dy;
        const bool s = yy >= 0 && yy < h && rows.at(yy, x);
        if (erosion ? !s : s) {
          v = !erosion;
          break;
        }
      }
      out.set(y, x, v);
    }
  }
  return out;
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, int radius) { return square_filter(mask, radius, true); }

BinaryMask dilate(const BinaryMask& mask, int radius) { return square_filter(mask, radius, false); }

ComponentLabels label_components(const BinaryMask& mask) {
  const int h = mask.height();
  const int w = mask.width();
  ComponentLabels out;
  out.labels.assign(static_cast<std::size_t>(h) * w, 0);
  std::vector<int> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int idx = y * w + x;
      if (!mask.at(y, x) || out.labels[idx] != 0) continue;
      const int label = ++out.count;
      std::size_t area = 0;
      out.labels[idx] = label;
      stack.push_back(idx);
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        ++area;
        const int cy = cur / w;
        const int cx = cur % w;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = cy + dy;
            const int nx = cx + dx;
            if (!mask.in_bounds(ny, nx) || !mask.at(ny, nx)) continue;
            const int nidx = ny * w + nx;
            if (out.labels[nidx] != 0) continue;
            out.labels[nidx] = label;
            stack.push_back(nidx);
          }
        }
      }
      out.areas.push_back(area);
    }
  }
  return out;
}

BinaryMask remove_small_blobs(const BinaryMask& mask, std::size_t min_area) {
  if (min_area == 0) return mask;
  const auto cc = label_components(mask);
  BinaryMask out(mask.height(), mask.width());
  for (std::size_t i = 0; i < cc.labels.size(); ++i) {
    const int label = cc.labels[i];
    if (label != 0 && cc.areas[label - 1] >= min_area) out.bits()[i] = 1;
  }
  return out;
}

BinaryMask keep_largest_component(const BinaryMask& mask) {
  const auto cc = label_components(mask);
  BinaryMask out(mask.height(), mask.width());
  if (cc.count == 0) return out;
  const auto best = std::max_element(cc.areas.begin(), cc.areas.end()) - cc.areas.begin();
  const int keep = static_cast<int>(best) + 1;
  for (std::size_t i = 0; i < cc.labels.size(); ++i) out.bits()[i] = cc.labels[i] == keep ? 1 : 0;
  return out;
}

Pixel locate_fingertip(const BinaryMask& mask) {
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(y, x)) return {x, y};
    }
  }
  throw Error(ErrorCode::EmptyMask, "cannot locate fingertip in an empty mask");
}

BoundingBox bounding_box(const BinaryMask& mask) {
  BoundingBox box{INT_MAX, INT_MAX, INT_MIN, INT_MIN};
  bool found = false;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(y, x)) continue;
      found = true;
      box.x_min = std::min(box.x_min, x);
      box.x_max = std::max(box.x_max, x);
      box.y_min = std::min(box.y_min, y);
      box.y_max = std::max(box.y_max, y);
    }
  }
  if (!found) throw Error(ErrorCode::EmptyMask, "bounding box of an empty mask");
  return box;
}

HandMask make_hand_mask(BinaryMask mask) {
  HandMask hand;
  hand.fingertip = locate_fingertip(mask);
  hand.bbox = bounding_box(mask);
  hand.mask = std::move(mask);
  return hand;
}

}  // namespace handsynth::mask
