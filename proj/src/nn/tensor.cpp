#include "handsynth/nn/tensor.hpp"

#include <algorithm>

#include "handsynth/core/error.hpp"

namespace handsynth::nn {

std::string Shape::str() const {
  return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

Tensor concat_channels(const std::vector<const Tensor*>& parts) {
  if (parts.empty()) throw Error(ErrorCode::ShapeMismatch, "nothing to concatenate");
  Shape out_shape = parts.front()->shape();
  out_shape.c = 0;
  for (const auto* p : parts) {
    const Shape& s = p->shape();
    if (s.n != out_shape.n || s.h != out_shape.h || s.w != out_shape.w) {
      throw Error(ErrorCode::ShapeMismatch, "concat of " + s.str() + " onto " + out_shape.str());
    }
    out_shape.c += s.c;
  }
  Tensor out(out_shape);
  const std::size_t plane = out_shape.plane();
  for (int n = 0; n < out_shape.n; ++n) {
    float* dst = out.sample(n);
    for (const auto* p : parts) {
      const std::size_t count = static_cast<std::size_t>(p->shape().c) * plane;
      std::copy_n(p->sample(n), count, dst);
      dst += count;
    }
  }
  return out;
}

Tensor slice_channels(const Tensor& t, int begin, int count) {
  const Shape& s = t.shape();
  if (begin < 0 || count < 0 || begin + count > s.c) throw Error(ErrorCode::ShapeMismatch, "channel slice out of range");
  Tensor out({s.n, count, s.h, s.w});
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    std::copy_n(t.sample(n) + static_cast<std::size_t>(begin) * plane, static_cast<std::size_t>(count) * plane,
                out.sample(n));
  }
  return out;
}

Tensor stack_batch(const std::vector<Tensor>& samples) {
  if (samples.empty()) throw Error(ErrorCode::ShapeMismatch, "empty batch");
  Shape s = samples.front().shape();
  if (s.n != 1) throw Error(ErrorCode::ShapeMismatch, "stack_batch expects single-sample tensors");
  s.n = static_cast<int>(samples.size());
  Tensor out(s);
  const std::size_t per = samples.front().numel();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].shape() != samples.front().shape()) throw Error(ErrorCode::ShapeMismatch, "ragged batch");
    std::copy_n(samples[i].data().data(), per, out.data().data() + i * per);
  }
  return out;
}

Tensor take_sample(const Tensor& t, int n) {
  Shape s = t.shape();
  s.n = 1;
  Tensor out(s);
  std::copy_n(t.sample(n), out.numel(), out.data().data());
  return out;
}

Tensor image_to_tensor(const ImageFrame& frame) {
  Tensor t({1, 3, frame.height(), frame.width()});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < frame.height(); ++y) {
      for (int x = 0; x < frame.width(); ++x) t.at(0, c, y, x) = frame.at(y, x, c) * 2.0f - 1.0f;
    }
  }
  return t;
}

ImageFrame tensor_to_image(const Tensor& t, int n) {
  const Shape& s = t.shape();
  if (s.c != 3) throw Error(ErrorCode::ShapeMismatch, "expected 3 channels, got " + s.str());
  ImageFrame frame(s.h, s.w, ColorSpace::RGB);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) frame.at(y, x, c) = std::clamp((t.at(n, c, y, x) + 1.0f) * 0.5f, 0.0f, 1.0f);
    }
  }
  return frame;
}

Tensor mask_to_tensor(const BinaryMask& mask) {
  Tensor t({1, 1, mask.height(), mask.width()});
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) t.at(0, 0, y, x) = mask.at(y, x) ? 1.0f : 0.0f;
  }
  return t;
}

}  // namespace handsynth::nn
