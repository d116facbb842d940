#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetsample/feature_space.hpp"
#include "hetsample/sampling_core.hpp"

namespace hetsample {

inline constexpr std::size_t kDefaultBins = 20;

struct HistogramPair {
  std::string feature_name;
  std::vector<double> bin_edges; // bins + 1, strictly increasing
  std::vector<double> full_freq;
  std::vector<double> subset_freq;
};

/// Equal-width bins spanning [min, max] of `full`; the maximum falls in the
/// last bin. Subset values outside that range are clamped to the end bins.
/// Each series is normalized by its own count. A constant `full` column
/// yields one bin of width 1 centred on the value.
HistogramPair histogram_pair(std::span<const double> full, std::span<const double> subset,
                             std::size_t bins = kDefaultBins, std::string feature_name = {});

/// Shannon entropy (natural log) of a frequency vector; zero bins skipped.
double shannon_entropy(std::span<const double> freq);

struct PcaProjection {
  Eigen::MatrixXd components;            // 2 x d, orthonormal rows
  Eigen::Vector2d explained_variance;    // descending
  Eigen::VectorXd eigenvalues;           // all covariance eigenvalues, descending
  Eigen::MatrixXd coords;                // n x 2
  std::vector<bool> selected_flags;
};

/// Two-component PCA of a standardized matrix using the population
/// covariance. Each component is signed so that its largest-magnitude entry
/// is positive.
PcaProjection pca_project(const FeatureMatrix& standardized, std::span<const std::string> selected_ids);

struct CoverageReport {
  double fus = 0.0;
  double distance_p50 = 0.0;
  double distance_p90 = 0.0;
  double distance_p100 = 0.0;
  std::size_t unselected = 0;
  std::size_t cells_total = 0;
  std::size_t cells_covered = 0; // distinct cells within `radius` of a selected sample
  double radius = 0.0;
};

/// Linear-interpolation quantile of an ascending sequence; 0 when empty.
double quantile_sorted(std::span<const double> ascending, double q);

CoverageReport coverage_report(const SelectionResult& result, const GridPointSet& grid_points);
nlohmann::json to_json(const CoverageReport& report);

void write_histogram_csv(std::ostream& out, const HistogramPair& h);
void write_pca_csv(std::ostream& out, const std::vector<std::string>& ids, const PcaProjection& p);
/// Static scatter of pc1 vs pc2; selected points drawn larger and in red.
void write_pca_svg(std::ostream& out, const PcaProjection& p, const std::string& title = "PCA",
                   const std::string& metadata_text = {});

} // namespace hetsample
