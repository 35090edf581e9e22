#include "handsynth/translate/toy_domains.hpp"

#include <random>

#include "handsynth/core/error.hpp"

namespace handsynth::translate {

std::vector<ImageFrame> make_toy_domain(ToyShape shape, int count, int size, std::uint64_t seed) {
  if (count < 0 || size < 8) throw Error(ErrorCode::ConfigInvalid, "toy domain needs size >= 8 and count >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> gray(0.35, 0.85);
  std::uniform_int_distribution<int> half(size / 8, size / 4);

  std::vector<ImageFrame> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const float g = static_cast<float>(gray(rng));
    const int r = half(rng);
    std::uniform_int_distribution<int> pos(r, size - 1 - r);
    const int cx = pos(rng);
    const int cy = pos(rng);

    ImageFrame img(size, size, ColorSpace::RGB, 0.0f);
    for (int y = cy - r; y <= cy + r; ++y) {
      for (int x = cx - r; x <= cx + r; ++x) {
        const int dx = x - cx;
        const int dy = y - cy;
        if (shape == ToyShape::Disk && dx * dx + dy * dy > r * r) continue;
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = g;
      }
    }
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace handsynth::translate
