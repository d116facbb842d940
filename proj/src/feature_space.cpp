#include "hetsample/feature_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include "hetsample/error.hpp"

namespace hetsample {

void FeatureMatrix::validate() const {
  if (ids.size() != rows())
    throw IoError("feature matrix: " + std::to_string(ids.size()) + " ids for " +
                  std::to_string(rows()) + " rows");
  if (groups && groups->size() != rows())
    throw IoError("feature matrix: group column length does not match row count");
  if (feature_names.size() != cols())
    throw IoError("feature matrix: feature name count does not match column count");
  std::set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second)
      throw IoError("feature matrix: duplicate id '" + id + "'");
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      if (!std::isfinite(values(i, j)))
        throw IoError("feature matrix: non-finite value for id '" + ids[i] + "', feature '" +
                      feature_names[j] + "'");
}

std::vector<std::size_t> FeatureMatrix::indices_of(std::span<const std::string> wanted) const {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
  std::vector<std::size_t> out;
  out.reserve(wanted.size());
  for (const auto& id : wanted) {
    auto it = index.find(id);
    if (it == index.end()) throw IoError("unknown sample id '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

bool NormalizationModel::is_dropped(std::size_t feature) const {
  return std::find(dropped_features.begin(), dropped_features.end(), feature) !=
         dropped_features.end();
}

std::vector<std::string> NormalizationModel::dropped_feature_names() const {
  std::vector<std::string> out;
  for (auto j : dropped_features) out.push_back(feature_names.at(j));
  return out;
}

std::vector<std::size_t> NormalizationModel::retained_features() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < means.size(); ++j)
    if (!is_dropped(j)) out.push_back(j);
  return out;
}

NormalizationModel fit_zscore(const FeatureMatrix& matrix) {
  const auto n = matrix.rows();
  const auto d = matrix.cols();
  if (n < 2) throw InfeasibleError("z-score fit needs at least 2 rows, got " + std::to_string(n));

  NormalizationModel model;
  model.feature_names = matrix.feature_names;
  model.means.resize(d);
  model.stds.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto col = matrix.values.col(static_cast<Eigen::Index>(j));
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(n);
    model.means[j] = mean;
    model.stds[j] = std::sqrt(var);
    if (!(model.stds[j] > 0.0)) {
      model.dropped_features.push_back(j);
      model.warnings.push_back("dropped zero-variance feature '" + matrix.feature_names[j] + "'");
    }
  }
  if (model.dropped_features.size() == d) throw InfeasibleError("degenerate feature space");
  return model;
}

FeatureMatrix apply_zscore(const FeatureMatrix& matrix, const NormalizationModel& model) {
  if (matrix.feature_names != model.feature_names)
    throw InfeasibleError("normalization model was fitted on different features");
  const auto kept = model.retained_features();

  FeatureMatrix out;
  out.ids = matrix.ids;
  out.groups = matrix.groups;
  out.values.resize(matrix.values.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const auto j = kept[c];
    out.values.col(static_cast<Eigen::Index>(c)) =
        (matrix.values.col(static_cast<Eigen::Index>(j)).array() - model.means[j]) / model.stds[j];
    out.feature_names.push_back(matrix.feature_names[j]);
  }
  return out;
}

RowMatrix invert_zscore(const RowMatrix& standardized, const NormalizationModel& model) {
  const auto kept = model.retained_features();
  if (static_cast<std::size_t>(standardized.cols()) != kept.size())
    throw InfeasibleError("inverse z-score: column count does not match retained features");
  RowMatrix out(standardized.rows(), standardized.cols());
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const auto j = kept[c];
    const auto col = static_cast<Eigen::Index>(c);
    out.col(col) = standardized.col(col).array() * model.stds[j] + model.means[j];
  }
  return out;
}

GridConfig::GridConfig(double cell) : cell_size(cell) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size))
    throw InfeasibleError("cell size must be a positive finite number");
}

GridPointSet::GridPointSet(std::size_t rows, std::size_t dims, std::vector<std::int32_t> lattice,
                           std::vector<double> scaled)
    : rows_(rows), dims_(dims), lattice_(std::move(lattice)), scaled_(std::move(scaled)) {
  if (lattice_.size() != rows_ * dims_ || scaled_.size() != rows_ * dims_)
    throw Error("grid point set: storage does not match shape");
}

std::size_t GridPointSet::distinct_cells() const {
  std::set<std::vector<std::int32_t>> cells;
  for (std::size_t i = 0; i < rows_; ++i) {
    auto row = lattice_row(i);
    cells.emplace(row.begin(), row.end());
  }
  return cells.size();
}

namespace {

// Quotients within a few ulps of an integer are snapped onto it, so that
// lattice points multiplied back by the cell size land in their own cell.
double snap_to_integer(double s) {
  const double r = std::nearbyint(s);
  const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(r));
  return std::abs(s - r) <= tol ? r : s;
}

} // namespace

GridPointSet discretize(const FeatureMatrix& matrix, const GridConfig& grid) {
  const auto n = matrix.rows();
  const auto d = matrix.cols();
  std::vector<std::int32_t> lattice(n * d);
  std::vector<double> scaled(n * d);
  constexpr double lo = std::numeric_limits<std::int32_t>::min();
  constexpr double hi = std::numeric_limits<std::int32_t>::max();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double s = snap_to_integer(
          matrix.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / grid.cell_size);
      const double f = std::floor(s);
      if (!(f >= lo && f <= hi))
        throw InfeasibleError("lattice coordinate out of range; cell size too small for the data");
      scaled[i * d + j] = s;
      lattice[i * d + j] = static_cast<std::int32_t>(f);
    }
  }
  return GridPointSet(n, d, std::move(lattice), std::move(scaled));
}

} // namespace hetsample
