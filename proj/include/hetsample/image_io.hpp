#pragma once

#include <filesystem>

#include "hetsample/image.hpp"

namespace hetsample {

struct LoadedImage {
  GrayImage image;
  int bit_depth = 8; // 8 or 16
};

/// Reads an 8- or 16-bit grayscale PNG or a binary/ASCII PGM (P5/P2),
/// chosen by file signature. Colour PNGs are rejected.
LoadedImage read_gray_image(const std::filesystem::path& path);

/// Nonzero pixels become foreground.
BinaryMask read_mask(const std::filesystem::path& path);

/// Writes a grayscale PNG; values are rounded and clamped to the depth range.
void write_png(const std::filesystem::path& path, const GrayImage& image, int bit_depth = 8);
void write_png(const std::filesystem::path& path, const BinaryMask& mask);

/// Binary PGM (P5); 16-bit samples are big-endian.
void write_pgm(const std::filesystem::path& path, const GrayImage& image, int bit_depth = 8);

} // namespace hetsample
