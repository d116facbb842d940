#include "hetsample/patch_extraction.hpp"

#include <algorithm>
#include <array>
#include <random>

#include "hetsample/error.hpp"
#include "hetsample/random.hpp"
#include "hetsample/skeleton.hpp"

namespace hetsample {

namespace {
constexpr std::array<std::string_view, 7> kKindNames = {
    "corner-tl", "corner-tr", "corner-bl", "corner-br", "center", "random-1", "random-2"};
}

std::string_view to_string(WindowKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

WindowKind window_kind_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == text) return static_cast<WindowKind>(i);
  throw IoError("unknown window kind '" + std::string(text) + "'");
}

std::string PatchSpec::patch_id() const { return source_id + "__" + std::string(to_string(kind)); }

std::vector<PatchSpec> plan_windows(const std::string& source_id, std::size_t source_width,
                                    std::size_t source_height, std::size_t size, std::uint64_t seed) {
  if (size == 0) throw InfeasibleError("window size must be positive");
  if (source_width < size || source_height < size)
    throw InfeasibleError("source too small: " + std::to_string(source_width) + "x" +
                          std::to_string(source_height) + " for window " + std::to_string(size));
  const std::size_t max_x = source_width - size;
  const std::size_t max_y = source_height - size;

  std::vector<PatchSpec> plan;
  auto add = [&](WindowKind kind, std::size_t x, std::size_t y) {
    plan.push_back(PatchSpec{source_id, x, y, size, kind});
  };
  add(WindowKind::CornerTopLeft, 0, 0);
  add(WindowKind::CornerTopRight, max_x, 0);
  add(WindowKind::CornerBottomLeft, 0, max_y);
  add(WindowKind::CornerBottomRight, max_x, max_y);
  add(WindowKind::Center, max_x / 2, max_y / 2);

  std::mt19937_64 rng(mix64(seed ^ fnv1a(source_id)));
  for (auto kind : {WindowKind::Random1, WindowKind::Random2}) {
    const auto x = static_cast<std::size_t>(uniform_below(rng, max_x + 1));
    const auto y = static_cast<std::size_t>(uniform_below(rng, max_y + 1));
    add(kind, x, y);
  }
  return plan;
}

double window_skeleton_length(const BinaryMask& source_mask, const PatchSpec& spec) {
  return skeletonize(source_mask.crop(spec.x, spec.y, spec.size, spec.size)).arc_length;
}

bool patch_order(const PatchSpec& a, const PatchSpec& b) {
  if (a.source_id != b.source_id) return a.source_id < b.source_id;
  return a.kind < b.kind;
}

std::vector<PatchSpec> filter_windows(std::span<const PatchSpec> specs,
                                      const std::map<std::string, BinaryMask>& masks,
                                      double min_length) {
  std::vector<PatchSpec> kept;
  for (const auto& spec : specs) {
    auto it = masks.find(spec.source_id);
    if (it == masks.end()) throw IoError("no mask for source '" + spec.source_id + "'");
    if (window_skeleton_length(it->second, spec) >= min_length) kept.push_back(spec);
  }
  std::stable_sort(kept.begin(), kept.end(), patch_order);
  return kept;
}

} // namespace hetsample
