#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hetsample {

/// Row-major grayscale image with non-negative intensities.
class GrayImage {
public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, double fill = 0.0);
  GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t area() const { return width_ * height_; }

  double& at(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }
  double at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }

  GrayImage crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const;

private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> pixels_;
};

/// Row-major foreground mask; true marks vessel pixels.
class BinaryMask {
public:
  BinaryMask() = default;
  BinaryMask(std::size_t width, std::size_t height, bool fill = false);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t area() const { return width_ * height_; }

  bool at(std::size_t x, std::size_t y) const { return bits_[y * width_ + x] != 0; }
  void set(std::size_t x, std::size_t y, bool v = true) { bits_[y * width_ + x] = v ? 1 : 0; }
  std::size_t count() const;

  BinaryMask crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<unsigned char> bits_;
};

/// Throws IoError when the mask and image sizes differ.
void require_same_size(const GrayImage& image, const BinaryMask& mask);

} // namespace hetsample
