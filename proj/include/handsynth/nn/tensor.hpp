#pragma once

#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "handsynth/core/types.hpp"

namespace handsynth::nn {

/// Allocator returning 64-byte aligned storage. Vectorized kernels peel
/// loops according to the address, so fixed alignment keeps float sums
/// independent of where the heap happens to place a buffer.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) {
    return true;
  }
};

using FloatBuffer = std::vector<float, AlignedAllocator<float>>;

/// NCHW extents.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const { return static_cast<std::size_t>(n) * c * h * w; }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense float tensor in NCHW layout.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f) : shape_(shape), data_(shape.numel(), fill) {}

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }

  float& at(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
  float at(int n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }

  float* sample(int n) { return data_.data() + static_cast<std::size_t>(n) * shape_.c * shape_.plane(); }
  const float* sample(int n) const { return data_.data() + static_cast<std::size_t>(n) * shape_.c * shape_.plane(); }

  FloatBuffer& data() { return data_; }
  const FloatBuffer& data() const { return data_; }
  std::span<const float> view() const { return data_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t offset(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  Shape shape_;
  FloatBuffer data_;
};

/// Concatenates along channels; all inputs share n, h, w.
Tensor concat_channels(const std::vector<const Tensor*>& parts);

/// Copies channels [begin, begin+count) into a new tensor.
Tensor slice_channels(const Tensor& t, int begin, int count);

/// Stacks 1-sample tensors into a batch.
Tensor stack_batch(const std::vector<Tensor>& samples);

/// Extracts sample `n` as a batch of one.
Tensor take_sample(const Tensor& t, int n);

/// RGB frame in [0,1] → 1×3×H×W tensor in [−1,1].
Tensor image_to_tensor(const ImageFrame& frame);

/// Sample `n` of an N×3×H×W tensor in [−1,1] → RGB frame in [0,1] (clamped).
ImageFrame tensor_to_image(const Tensor& t, int n = 0);

/// Mask → 1×1×H×W tensor of {0,1}.
Tensor mask_to_tensor(const BinaryMask& mask);

}  // namespace handsynth::nn
