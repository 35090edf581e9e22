#include "handsynth/mask/color.hpp"

#include <algorithm>
#include <cmath>

#include "handsynth/core/error.hpp"

namespace handsynth::mask {

ImageFrame rgb_to_hsv(const ImageFrame& rgb) {
  if (rgb.color_space() != ColorSpace::RGB) throw Error(ErrorCode::ValueOutOfRange, "expected an RGB frame");
  ImageFrame hsv(rgb.height(), rgb.width(), ColorSpace::HSV);
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      const float r = rgb.at(y, x, 0);
      const float g = rgb.at(y, x, 1);
      const float b = rgb.at(y, x, 2);
      for (float c : {r, g, b}) {
        if (!(c >= 0.0f && c <= 1.0f)) {
          throw Error(ErrorCode::ValueOutOfRange,
                      "channel value outside [0,1] at (" + std::to_string(x) + "," + std::to_string(y) + ")");
        }
      }
      const float max = std::max({r, g, b});
      const float min = std::min({r, g, b});
      const float delta = max - min;
      float h = 0.0f;
      if (delta > 0.0f) {
        if (max == r) {
          h = 60.0f * std::fmod((g - b) / delta + 6.0f, 6.0f);
        } else if (max == g) {
          h = 60.0f * ((b - r) / delta + 2.0f);
        } else {
          h = 60.0f * ((r - g) / delta + 4.0f);
        }
        if (h >= 360.0f) h -= 360.0f;
      }
      hsv.at(y, x, 0) = h;
      hsv.at(y, x, 1) = max > 0.0f ? delta / max : 0.0f;
      hsv.at(y, x, 2) = max;
    }
  }
  return hsv;
}

ImageFrame hsv_to_rgb(const ImageFrame& hsv) {
  if (hsv.color_space() != ColorSpace::HSV) throw Error(ErrorCode::ValueOutOfRange, "expected an HSV frame");
  ImageFrame rgb(hsv.height(), hsv.width(), ColorSpace::RGB);
  for (int y = 0; y < hsv.height(); ++y) {
    for (int x = 0; x < hsv.width(); ++x) {
      const float h = hsv.at(y, x, 0);
      const float s = hsv.at(y, x, 1);
      const float v = hsv.at(y, x, 2);
      const float c = v * s;
      const float hp = h / 60.0f;
      const float xx = c * (1.0f - std::fabs(std::fmod(hp, 2.0f) - 1.0f));
      float r = 0, g = 0, b = 0;
      switch (static_cast<int>(hp) % 6) {
        case 0: r = c; g = xx; break;
        case 1: r = xx; g = c; break;
        case 2: g = c; b = xx; break;
        case 3: g = xx; b = c; break;
        case 4: r = xx; b = c; break;
        default: r = c; b = xx; break;
      }
      const float m = v - c;
      rgb.at(y, x, 0) = r + m;
      rgb.at(y, x, 1) = g + m;
      rgb.at(y, x, 2) = b + m;
    }
  }
  return rgb;
}

bool HsvRange::contains(double h, double s, double v) const {
  const bool hue_ok = h_low <= h_high ? (h >= h_low && h <= h_high) : (h >= h_low || h <= h_high);
  return hue_ok && s >= s_low && s <= s_high && v >= v_low && v <= v_high;
}

void HsvRange::validate() const {
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!(h_low >= 0.0 && h_low < 360.0 && h_high >= 0.0 && h_high < 360.0)) {
    throw Error(ErrorCode::ConfigInvalid, "hue bounds must lie in [0,360)");
  }
  if (!(unit(s_low) && unit(s_high) && unit(v_low) && unit(v_high)) || s_low > s_high || v_low > v_high) {
    throw Error(ErrorCode::ConfigInvalid, "saturation/value bounds must be ordered fractions");
  }
}

BinaryMask skin_threshold(const ImageFrame& hsv, const HsvRange& range) {
  if (hsv.color_space() != ColorSpace::HSV) throw Error(ErrorCode::ValueOutOfRange, "skin_threshold expects HSV");
  BinaryMask mask(hsv.height(), hsv.width());
  for (int y = 0; y < hsv.height(); ++y) {
    for (int x = 0; x < hsv.width(); ++x) {
      mask.set(y, x, range.contains(hsv.at(y, x, 0), hsv.at(y, x, 1), hsv.at(y, x, 2)));
    }
  }
  return mask;
}

}  // namespace handsynth::mask
