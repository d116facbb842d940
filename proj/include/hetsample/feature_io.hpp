#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetsample/feature_space.hpp"

namespace hetsample {

struct CsvReadOptions {
  /// Column holding group labels; ignored when absent from the header.
  std::string group_column = "group";
  /// When non-empty, only these feature columns are loaded, in this order.
  std::vector<std::string> feature_columns;
  /// Columns that are neither id, group nor features (e.g. an error column).
  std::vector<std::string> ignore_columns;
};

/// Reads a feature CSV: a header row whose first column is `id`, an optional
/// group column and real-valued feature columns. Lines starting with '#' are
/// metadata comments and are skipped.
FeatureMatrix read_feature_csv(std::istream& in, const CsvReadOptions& options = {});
FeatureMatrix read_feature_csv(const std::filesystem::path& path, const CsvReadOptions& options = {});

/// Splits one CSV line on commas, honouring double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_escape(const std::string& field);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

nlohmann::json to_json(const NormalizationModel& model);
NormalizationModel normalization_from_json(const nlohmann::json& j);

} // namespace hetsample
