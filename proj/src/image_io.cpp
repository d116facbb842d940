#include "hetsample/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "hetsample/error.hpp"

namespace hetsample {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  return f;
}

[[noreturn]] void png_error_handler(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

LoadedImage read_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler,
                                           png_warning_handler);
  if (!png) throw IoError("libpng: cannot allocate read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng: cannot allocate info struct");
  }

  LoadedImage out;
  std::vector<png_byte> data;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int depth = 0, color = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png '" + path.string() + "': " + error);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &depth, &color, nullptr, nullptr, nullptr);
  if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_GRAY_ALPHA)
    png_error(png, "only grayscale images are supported");
  if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
  if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  const auto rowbytes = png_get_rowbytes(png, info);
  data.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = data.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.bit_depth = depth == 16 ? 16 : 8;
  std::vector<double> pixels(static_cast<std::size_t>(width) * height);
  for (png_uint_32 y = 0; y < height; ++y) {
    const png_byte* row = rows[y];
    for (png_uint_32 x = 0; x < width; ++x) {
      double v = 0.0;
      if (out.bit_depth == 16)
        v = static_cast<double>((row[2 * x] << 8) | row[2 * x + 1]);
      else
        v = row[x];
      pixels[static_cast<std::size_t>(y) * width + x] = v;
    }
  }
  out.image = GrayImage(width, height, std::move(pixels));
  return out;
}

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token += static_cast<char>(c);
  }
  return token;
}

LoadedImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const std::string magic = pgm_token(in);
  if (magic != "P5" && magic != "P2") throw IoError("pgm '" + path.string() + "': bad magic");
  std::size_t width = 0, height = 0;
  long maxval = 0;
  try {
    width = std::stoul(pgm_token(in));
    height = std::stoul(pgm_token(in));
    maxval = std::stol(pgm_token(in));
  } catch (const std::exception&) {
    throw IoError("pgm '" + path.string() + "': malformed header");
  }
  if (width == 0 || height == 0 || maxval <= 0 || maxval > 65535)
    throw IoError("pgm '" + path.string() + "': invalid header values");

  LoadedImage out;
  out.bit_depth = maxval > 255 ? 16 : 8;
  std::vector<double> pixels(width * height);
  if (magic == "P5") {
    const std::size_t bytes = out.bit_depth == 16 ? 2 : 1;
    std::vector<unsigned char> raw(width * height * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
      throw IoError("pgm '" + path.string() + "': truncated pixel data");
    for (std::size_t i = 0; i < pixels.size(); ++i)
      pixels[i] = bytes == 2 ? static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]) : raw[i];
  } else {
    for (auto& p : pixels) {
      const auto token = pgm_token(in);
      if (token.empty()) throw IoError("pgm '" + path.string() + "': truncated pixel data");
      p = std::stod(token);
    }
  }
  out.image = GrayImage(width, height, std::move(pixels));
  return out;
}

bool has_png_signature(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

void write_png_rows(const std::filesystem::path& path, std::size_t width, std::size_t height,
                    int bit_depth, const std::vector<png_byte>& data) {
  auto file = open_file(path, "wb");
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler,
                                            png_warning_handler);
  if (!png) throw IoError("libpng: cannot allocate write struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng: cannot allocate info struct");
  }
  const std::size_t rowbytes = width * (bit_depth == 16 ? 2 : 1);
  std::vector<png_bytep> rows(height);
  for (std::size_t y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(data.data() + y * rowbytes);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png '" + path.string() + "': " + error);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<png_byte> encode_samples(const GrayImage& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw Error("unsupported bit depth");
  const double top = bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<png_byte> data;
  data.reserve(image.area() * (bit_depth == 16 ? 2 : 1));
  for (double v : image.pixels()) {
    const auto s = static_cast<unsigned>(std::clamp(std::round(v), 0.0, top));
    if (bit_depth == 16) data.push_back(static_cast<png_byte>(s >> 8));
    data.push_back(static_cast<png_byte>(s & 0xFF));
  }
  return data;
}

} // namespace

LoadedImage read_gray_image(const std::filesystem::path& path) {
  return has_png_signature(path) ? read_png(path) : read_pgm(path);
}

BinaryMask read_mask(const std::filesystem::path& path) {
  const auto loaded = read_gray_image(path);
  const auto& img = loaded.image;
  BinaryMask mask(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      if (img.at(x, y) != 0.0) mask.set(x, y);
  return mask;
}

void write_png(const std::filesystem::path& path, const GrayImage& image, int bit_depth) {
  write_png_rows(path, image.width(), image.height(), bit_depth, encode_samples(image, bit_depth));
}

void write_png(const std::filesystem::path& path, const BinaryMask& mask) {
  GrayImage img(mask.width(), mask.height());
  for (std::size_t y = 0; y < mask.height(); ++y)
    for (std::size_t x = 0; x < mask.width(); ++x) img.at(x, y) = mask.at(x, y) ? 255.0 : 0.0;
  write_png(path, img, 8);
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image, int bit_depth) {
  const auto data = encode_samples(image, bit_depth);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "P5\n" << image.width() << ' ' << image.height() << '\n'
      << (bit_depth == 16 ? 65535 : 255) << '\n';
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace hetsample
