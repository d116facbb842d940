#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hetsample/image.hpp"

namespace hetsample {

enum class WindowKind { CornerTopLeft, CornerTopRight, CornerBottomLeft, CornerBottomRight, Center, Random1, Random2 };

std::string_view to_string(WindowKind kind);
WindowKind window_kind_from_string(std::string_view text);

struct PatchSpec {
  std::string source_id;
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t size = 256;
  WindowKind kind = WindowKind::CornerTopLeft;

  /// `{source_id}__{kind}`; also the patch image file stem.
  std::string patch_id() const;
};

inline constexpr std::size_t kDefaultWindowSize = 256;
inline constexpr double kDefaultMinSkeletonLength = 32.0;

/// Four corner windows, the centre window and two uniformly random windows
/// (which may overlap the others). The random positions depend only on
/// (source_id, seed).
std::vector<PatchSpec> plan_windows(const std::string& source_id, std::size_t source_width,
                                    std::size_t source_height, std::size_t size, std::uint64_t seed);

/// Arc length of the skeleton of the mask restricted to the window.
double window_skeleton_length(const BinaryMask& source_mask, const PatchSpec& spec);

/// Keeps windows whose in-window skeleton length reaches `min_length`.
/// `masks` maps source ids to full-size masks. Output is sorted by
/// (source_id, kind).
std::vector<PatchSpec> filter_windows(std::span<const PatchSpec> specs,
                                      const std::map<std::string, BinaryMask>& masks,
                                      double min_length = kDefaultMinSkeletonLength);

bool patch_order(const PatchSpec& a, const PatchSpec& b);

} // namespace hetsample
