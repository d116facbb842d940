#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetsample/diagnostics.hpp"
#include "hetsample/image_metrics.hpp"
#include "hetsample/patch_extraction.hpp"
#include "hetsample/sampling_core.hpp"

namespace hetsample::cli {

namespace fs = std::filesystem;

/// Everything that determines the output of a run. Serialized into every
/// artifact. The thread count is deliberately absent: it never changes
/// results.
struct RunConfig {
  double cell_size = 0.1;
  double radius = 4.0;
  std::size_t k = 100;
  std::size_t n_trials = 1000;
  std::uint64_t seed = 0;
  bool group_exclusion = true;
  std::string group_column = "group";
  std::vector<std::string> feature_columns; // empty: every numeric column
  std::size_t bins = kDefaultBins;
  std::size_t window_size = kDefaultWindowSize;
  double min_skeleton_length = kDefaultMinSkeletonLength;
  std::map<std::string, std::string> paths;

  void validate() const;
  nlohmann::json to_json() const;
};

std::string tool_version();

/// {"tool": ..., "version": ..., "run_config": ...}
nlohmann::json metadata(const RunConfig& config);

/// Metadata as '#'-prefixed lines for CSV headers.
std::string csv_metadata_lines(const RunConfig& config);

struct PatchSummary {
  std::size_t sources = 0;
  std::size_t planned = 0;
  std::size_t retained = 0;
  std::vector<std::string> warnings; // unpaired files, skipped sources
  std::vector<PatchSpec> patches;
};

/// Pairs images and masks by file stem, plans and filters seven windows per
/// source and writes `manifest.csv`, `images/{patch}.png` and
/// `masks/{patch}.png` under `out_dir`.
PatchSummary cmd_extract_patches(const fs::path& images_dir, const fs::path& masks_dir,
                                 const fs::path& out_dir, RunConfig config, unsigned threads = 1);

std::vector<PatchSpec> read_manifest(const fs::path& manifest);

struct FeatureRow {
  std::string id;
  std::string group;
  MetricVector metrics;
};

struct FeatureSummary {
  std::vector<FeatureRow> rows;
  std::optional<DetrendModel> detrend;
  std::size_t complete_rows = 0;
};

/// Names of the four sampling features in the feature CSV.
std::vector<std::string> sampling_feature_names();

/// Computes metrics for every patch in the manifest, fits the dataset-wide
/// detrend line and writes the metric CSV (all rows, with an error column)
/// plus a sampling-ready feature CSV holding the complete rows only.
FeatureSummary cmd_extract_features(const fs::path& manifest, const fs::path& metrics_csv,
                                    const fs::path& features_csv, RunConfig config,
                                    unsigned threads = 1);

/// Full selection pipeline on a feature CSV. Writes the selection JSON and,
/// when requested, the per-trial log.
SelectionResult cmd_sample(const fs::path& feature_csv, const fs::path& out_json,
                           const std::optional<fs::path>& trial_log, RunConfig config,
                           unsigned threads = 1);

struct DiagnoseSummary {
  std::vector<fs::path> histogram_files;
  fs::path pca_csv, pca_svg, coverage_json;
  CoverageReport coverage;
};

DiagnoseSummary cmd_diagnose(const fs::path& feature_csv, const fs::path& selection_json,
                             const fs::path& out_dir, RunConfig config);

/// Exit status convention: 0 success, 1 I/O or parse error, 2 infeasible or
/// degenerate configuration.
int exit_code_for(const std::exception& e);

} // namespace hetsample::cli
