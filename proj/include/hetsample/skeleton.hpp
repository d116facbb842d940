#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "hetsample/image.hpp"

namespace hetsample {

/// One-pixel-wide, 8-connected medial lines of a mask.
struct Skeleton {
  BinaryMask pixels;
  double arc_length = 0.0;

  std::size_t size() const { return pixels.count(); }
  /// (x, y) of every skeleton pixel in row-major order.
  std::vector<std::pair<std::size_t, std::size_t>> coordinates() const;
};

/// Directional parallel thinning (north, south, east, west subiterations)
/// that removes 8-simple border pixels with at least two foreground
/// neighbours, repeated until stable. Connected components and holes of the
/// mask are preserved.
Skeleton skeletonize(const BinaryMask& mask);

/// Sum over 8-adjacent pixel pairs of the step length (1 axial, sqrt(2)
/// diagonal); each pair counted once.
double arc_length(const BinaryMask& pixels);

/// Medial-line length per unit image area.
double vessel_density(const Skeleton& skeleton, std::size_t image_area);

} // namespace hetsample
