#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hetsample/feature_space.hpp"
#include "hetsample/kd_tree.hpp"

namespace hetsample {

/// Integer offsets of a filled discrete ball of radius `radius` (grid units),
/// stored row-major with `dims` columns in lexicographic order.
struct StructuringElement {
  std::size_t dims = 0;
  double radius = 0.0;
  std::vector<std::int32_t> offsets;

  std::size_t size() const { return dims == 0 ? 0 : offsets.size() / dims; }
  std::span<const std::int32_t> offset(std::size_t i) const {
    return {offsets.data() + i * dims, dims};
  }
};

inline constexpr std::size_t kDefaultElementCap = 10'000'000;

StructuringElement build_structuring_element(std::size_t dims, double radius,
                                             std::size_t max_offsets = kDefaultElementCap);

/// Deduplicated lattice points covered by the dilated grid, sorted
/// lexicographically. Multiplicities are not kept.
class SamplingSet {
public:
  SamplingSet() = default;
  /// Sorts and deduplicates `points` (row-major, `dims` columns).
  SamplingSet(std::size_t dims, std::vector<std::int32_t> points);

  std::size_t dims() const { return dims_; }
  std::size_t size() const { return dims_ == 0 ? 0 : points_.size() / dims_; }
  std::span<const std::int32_t> point(std::size_t i) const {
    return {points_.data() + i * dims_, dims_};
  }
  const std::vector<std::int32_t>& points() const { return points_; }
  bool contains(std::span<const std::int32_t> p) const;

private:
  std::size_t dims_ = 0;
  std::vector<std::int32_t> points_;
};

SamplingSet dilate(const GridPointSet& grid_points, const StructuringElement& element);

struct SelectionParams {
  std::size_t k = 100;
  std::size_t n_trials = 1000;
  std::uint64_t seed = 0;
  bool enforce_group_exclusion = false;

  void validate() const;
};

/// Per-trial seed: the splitmix64 finalizer applied to
/// `master_seed + (trial_index + 1) * 0x9E3779B97F4A7C15`.
std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index);

/// Read-only state shared by all trials of one selection run.
class Sampler {
public:
  Sampler(const FeatureMatrix& matrix, const GridPointSet& grid_points, const SamplingSet& sset);

  /// One draw-until-k-unique pass. Points are taken from the sampling set
  /// uniformly without replacement and each maps to its nearest sample in
  /// grid-scaled coordinates. Returns row indices in selection order.
  std::vector<std::size_t> draw(const SelectionParams& params, std::uint64_t seed_for_trial) const;

  /// Nearest sample (grid-scaled coordinates) to a lattice point; ties go to
  /// the lowest row.
  std::size_t nearest_sample(std::span<const std::int32_t> lattice_point) const;

  std::size_t samples() const { return grid_points_.rows(); }
  std::size_t distinct_groups() const { return group_count_; }
  bool has_groups() const { return !group_of_.empty(); }

private:
  const GridPointSet& grid_points_;
  const SamplingSet& sset_;
  KdTree index_;
  std::vector<std::size_t> group_of_; // dense group label per row; empty without groups
  std::size_t group_count_ = 0;
};

std::vector<std::size_t> draw_one_trial(const SamplingSet& sset, const GridPointSet& grid_points,
                                        const FeatureMatrix& matrix, const SelectionParams& params,
                                        std::uint64_t seed_for_trial);

/// Largest squared lattice distance from an unselected sample to its nearest
/// selected sample (0 when every sample is selected). Integer valued.
double fus_squared(std::span<const std::size_t> selected, const GridPointSet& grid_points);

/// Farthest unselected point metric, in lattice units.
double compute_fus(std::span<const std::size_t> selected, const GridPointSet& grid_points);

/// (unselected row, lattice distance to its nearest selected row), sorted by
/// descending distance then ascending row.
std::vector<std::pair<std::size_t, double>>
nearest_selected_distances(std::span<const std::size_t> selected, const GridPointSet& grid_points);

inline constexpr const char* kTieBreakPolicy =
    "nearest sample: lowest row index; equal FUS across trials: lowest trial index";

struct SelectionResult {
  std::vector<std::string> selected_ids;
  std::vector<std::size_t> selected_rows;
  double fus = 0.0;
  std::size_t winning_trial = 0;
  SelectionParams params;
  GridConfig grid_config;
  double radius = 0.0;
  std::vector<std::string> dropped_features;
  std::vector<double> trial_fus; // one entry per trial, in trial order
};

/// Best of `params.n_trials` independent draws by FUS. The result does not
/// depend on `threads`.
SelectionResult select(const FeatureMatrix& matrix, const GridPointSet& grid_points,
                       const SamplingSet& sset, const SelectionParams& params,
                       const GridConfig& grid, double radius, unsigned threads = 1);

} // namespace hetsample
