#pragma once

#include <cstdint>
#include <vector>

#include "handsynth/core/types.hpp"

namespace handsynth::translate {

enum class ToyShape { Square, Disk };

/// `count` size×size images of one gray shape on black. Gray level, extent
/// and position are drawn from a generator seeded with `seed`.
std::vector<ImageFrame> make_toy_domain(ToyShape shape, int count, int size, std::uint64_t seed);

}  // namespace handsynth::translate
