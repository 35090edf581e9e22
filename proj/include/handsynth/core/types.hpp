#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace handsynth {

/// Integer pixel coordinate. Origin top-left, x rightward, y downward.
struct Pixel {
  int x = 0;
  int y = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Continuous image-plane coordinate, same axes as Pixel.
struct Point2D {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2D&, const Point2D&) = default;
};

/// Axis-aligned box, inclusive on both ends.
struct BoundingBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  bool contains(Pixel p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
  bool inside(int width, int height) const {
    return x_min >= 0 && y_min >= 0 && x_max < width && y_max < height && x_min <= x_max && y_min <= y_max;
  }
  int width() const { return x_max - x_min + 1; }
  int height() const { return y_max - y_min + 1; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

enum class ColorSpace { RGB, HSV };

/// H×W×3 float raster stored row-major, channels interleaved.
/// RGB values lie in [0,1]; HSV stores H in degrees [0,360) and S,V in [0,1].
class ImageFrame {
 public:
  ImageFrame() = default;
  ImageFrame(int height, int width, ColorSpace space = ColorSpace::RGB, float fill = 0.0f)
      : height_(height), width_(width), space_(space),
        data_(static_cast<std::size_t>(height) * width * 3, fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  ColorSpace color_space() const { return space_; }
  bool empty() const { return data_.empty(); }

  float& at(int y, int x, int c) { return data_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return data_[index(y, x, c)]; }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  friend bool operator==(const ImageFrame&, const ImageFrame&) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
  }

  int height_ = 0;
  int width_ = 0;
  ColorSpace space_ = ColorSpace::RGB;
  std::vector<float> data_;
};

/// H×W boolean raster, row-major. Accessors take (y, x).
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width, bool fill = false)
      : height_(height), width_(width), bits_(static_cast<std::size_t>(height) * width, fill ? 1 : 0) {}

  int height() const { return height_; }
  int width() const { return width_; }

  bool at(int y, int x) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int y, int x, bool value = true) { bits_[static_cast<std::size_t>(y) * width_ + x] = value ? 1 : 0; }
  bool in_bounds(int y, int x) const { return y >= 0 && x >= 0 && y < height_ && x < width_; }

  std::size_t area() const;
  bool any() const;
  bool subset_of(const BinaryMask& other) const;

  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::vector<std::uint8_t>& bits() { return bits_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Binary hand mask with its fingertip and tight bounding box.
struct HandMask {
  BinaryMask mask;
  Pixel fingertip;
  BoundingBox bbox;

  /// Fingertip is a set pixel and bbox is the tight box of set pixels.
  bool consistent() const;
};

/// Intersection over union of two equally sized masks; 1 when both are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b);

}  // namespace handsynth
