#include "hetsample/skeleton.hpp"

#include <array>
#include <cmath>

#include "hetsample/error.hpp"

namespace hetsample {

namespace {

// Neighbours counter-clockwise from east: E, NE, N, NW, W, SW, S, SE.
constexpr std::array<int, 8> kDx = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr std::array<int, 8> kDy = {0, -1, -1, -1, 0, 1, 1, 1};

std::array<int, 8> neighbourhood(const BinaryMask& m, std::size_t x, std::size_t y) {
  std::array<int, 8> n{};
  for (int k = 0; k < 8; ++k) {
    const long nx = static_cast<long>(x) + kDx[k];
    const long ny = static_cast<long>(y) + kDy[k];
    n[k] = nx >= 0 && ny >= 0 && nx < static_cast<long>(m.width()) && ny < static_cast<long>(m.height()) &&
           m.at(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny));
  }
  return n;
}

// Yokoi connectivity number for 8-connected foreground.
int connectivity8(const std::array<int, 8>& n) {
  int c = 0;
  for (int k = 0; k < 8; k += 2) {
    const int a = 1 - n[k], b = 1 - n[(k + 1) % 8], d = 1 - n[(k + 2) % 8];
    c += a - a * b * d;
  }
  return c;
}

} // namespace

std::vector<std::pair<std::size_t, std::size_t>> Skeleton::coordinates() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t y = 0; y < pixels.height(); ++y)
    for (std::size_t x = 0; x < pixels.width(); ++x)
      if (pixels.at(x, y)) out.emplace_back(x, y);
  return out;
}

Skeleton skeletonize(const BinaryMask& mask) {
  BinaryMask current = mask;
  // border direction index into the neighbourhood: N, S, E, W
  constexpr std::array<int, 4> kBorder = {2, 6, 0, 4};
  std::vector<std::pair<std::size_t, std::size_t>> doomed;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int dir : kBorder) {
      doomed.clear();
      for (std::size_t y = 0; y < current.height(); ++y) {
        for (std::size_t x = 0; x < current.width(); ++x) {
          if (!current.at(x, y)) continue;
          const auto n = neighbourhood(current, x, y);
          if (n[dir]) continue;
          int count = 0;
          for (int v : n) count += v;
          if (count < 2) continue; // end point or isolated pixel
          if (connectivity8(n) != 1) continue;
          doomed.emplace_back(x, y);
        }
      }
      for (auto [x, y] : doomed) current.set(x, y, false);
      changed = changed || !doomed.empty();
    }
  }
  Skeleton s;
  s.arc_length = arc_length(current);
  s.pixels = std::move(current);
  return s;
}

double arc_length(const BinaryMask& m) {
  const double diag = std::sqrt(2.0);
  std::size_t axial = 0, diagonal = 0;
  for (std::size_t y = 0; y < m.height(); ++y) {
    for (std::size_t x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      const bool right = x + 1 < m.width();
      const bool below = y + 1 < m.height();
      if (right && m.at(x + 1, y)) ++axial;
      if (below && m.at(x, y + 1)) ++axial;
      if (right && below && m.at(x + 1, y + 1)) ++diagonal;
      if (x > 0 && below && m.at(x - 1, y + 1)) ++diagonal;
    }
  }
  return static_cast<double>(axial) + diag * static_cast<double>(diagonal);
}

double vessel_density(const Skeleton& skeleton, std::size_t image_area) {
  if (image_area == 0) throw Error("vessel density: zero image area");
  return skeleton.arc_length / static_cast<double>(image_area);
}

} // namespace hetsample
