#include "hetsample/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hetsample/error.hpp"

namespace hetsample {

GrayImage::GrayImage(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), pixels_(width * height, fill) {}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.size() != width_ * height_) throw IoError("image: pixel count does not match size");
  for (double v : pixels_)
    if (!std::isfinite(v)) throw IoError("image: non-finite pixel value");
}

GrayImage GrayImage::crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const {
  if (x + w > width_ || y + h > height_) throw Error("image crop outside bounds");
  GrayImage out(w, h);
  for (std::size_t r = 0; r < h; ++r)
    std::copy_n(pixels_.begin() + static_cast<std::ptrdiff_t>((y + r) * width_ + x), w,
                out.pixels_.begin() + static_cast<std::ptrdiff_t>(r * w));
  return out;
}

BinaryMask::BinaryMask(std::size_t width, std::size_t height, bool fill)
    : width_(width), height_(height), bits_(width * height, fill ? 1 : 0) {}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

BinaryMask BinaryMask::crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const {
  if (x + w > width_ || y + h > height_) throw Error("mask crop outside bounds");
  BinaryMask out(w, h);
  for (std::size_t r = 0; r < h; ++r)
    std::copy_n(bits_.begin() + static_cast<std::ptrdiff_t>((y + r) * width_ + x), w,
                out.bits_.begin() + static_cast<std::ptrdiff_t>(r * w));
  return out;
}

void require_same_size(const GrayImage& image, const BinaryMask& mask) {
  if (image.width() != mask.width() || image.height() != mask.height())
    throw IoError("mask size " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                  " does not match image size " + std::to_string(image.width()) + "x" +
                  std::to_string(image.height()));
}

} // namespace hetsample
