#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hetsample {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// The mapped dataset: one row of features per sample.
///
/// `groups`, when present, carries one group label per sample (the source
/// image of a patch, for instance) and drives same-group exclusion during
/// selection.
struct FeatureMatrix {
  std::vector<std::string> ids;
  std::optional<std::vector<std::string>> groups;
  RowMatrix values;
  std::vector<std::string> feature_names;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }

  /// Throws IoError when ids are duplicated, shapes disagree or a value is
  /// not finite.
  void validate() const;

  /// Row index of every id, in the order given. Throws on unknown ids.
  std::vector<std::size_t> indices_of(std::span<const std::string> wanted) const;
};

struct NormalizationModel {
  std::vector<std::string> feature_names; // names of the fitted matrix, dropped ones included
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<std::size_t> dropped_features;
  std::vector<std::string> warnings;

  bool is_dropped(std::size_t feature) const;
  std::vector<std::string> dropped_feature_names() const;
  std::vector<std::size_t> retained_features() const;
};

/// Per-column population mean and standard deviation. Zero-variance columns
/// are recorded as dropped (with a warning) instead of failing the run.
NormalizationModel fit_zscore(const FeatureMatrix& matrix);

/// Standardizes the retained columns and removes the dropped ones.
FeatureMatrix apply_zscore(const FeatureMatrix& matrix, const NormalizationModel& model);

/// x * std + mean over the retained columns of a standardized matrix.
RowMatrix invert_zscore(const RowMatrix& standardized, const NormalizationModel& model);

struct GridConfig {
  double cell_size = 0.1;

  explicit GridConfig(double cell = 0.1);
};

/// Lattice coordinates (floor of values / cell size) together with the
/// continuous coordinates they were floored from. Row-major, n x d.
class GridPointSet {
public:
  GridPointSet() = default;
  GridPointSet(std::size_t rows, std::size_t dims, std::vector<std::int32_t> lattice,
               std::vector<double> scaled);

  std::size_t rows() const { return rows_; }
  std::size_t dims() const { return dims_; }

  std::span<const std::int32_t> lattice_row(std::size_t i) const {
    return {lattice_.data() + i * dims_, dims_};
  }
  std::span<const double> scaled_row(std::size_t i) const {
    return {scaled_.data() + i * dims_, dims_};
  }
  const std::vector<std::int32_t>& lattice() const { return lattice_; }
  const std::vector<double>& scaled() const { return scaled_; }

  /// Number of distinct occupied lattice cells.
  std::size_t distinct_cells() const;

private:
  std::size_t rows_ = 0;
  std::size_t dims_ = 0;
  std::vector<std::int32_t> lattice_;
  std::vector<double> scaled_;
};

GridPointSet discretize(const FeatureMatrix& matrix, const GridConfig& grid);

} // namespace hetsample
