#pragma once

#include <filesystem>

#include "handsynth/core/types.hpp"

namespace handsynth {

/// Reads a PNG/JPEG as an RGB frame with values in [0,1]. Throws ImageNotFound.
ImageFrame read_image(const std::filesystem::path& path);

/// Writes an RGB frame as 8-bit PNG (values clamped to [0,1]). Throws IoError.
void write_image(const std::filesystem::path& path, const ImageFrame& frame);

/// Reads a mask image; any nonzero pixel is set.
BinaryMask read_mask(const std::filesystem::path& path);

/// Writes a 1-bit PNG.
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);

/// Nearest-neighbour resize.
BinaryMask resize_mask(const BinaryMask& mask, int height, int width);

/// Area-averaging resize for shrinking, bilinear otherwise.
ImageFrame resize_image(const ImageFrame& frame, int height, int width);

/// Quantizes every channel to 8 bits, as a PNG round trip would.
ImageFrame quantize_8bit(const ImageFrame& frame);

}  // namespace handsynth
