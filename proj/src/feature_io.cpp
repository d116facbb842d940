#include "hetsample/feature_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <system_error>

#include "hetsample/error.hpp"

namespace hetsample {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& text, std::size_t line_no, const std::string& column) {
  const auto t = trim(text);
  double value = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (!t.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (t.empty() || ec != std::errc() || ptr != end)
    throw IoError("line " + std::to_string(line_no) + ": column '" + column +
                  "': cannot parse '" + t + "' as a number");
  return value;
}

} // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r' && c != '\n') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("format_double: buffer too small");
  return std::string(buf, ptr);
}

FeatureMatrix read_feature_csv(std::istream& in, const CsvReadOptions& options) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw IoError("feature csv: missing header row");
  for (auto& h : header) h = trim(h);
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
  if (header[0] != "id") throw IoError("feature csv: first column must be 'id', got '" + header[0] + "'");

  std::optional<std::size_t> group_col;
  std::vector<std::size_t> feature_cols;
  std::vector<std::string> names;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto& name = header[c];
    if (name == options.group_column) {
      group_col = c;
      continue;
    }
    if (std::find(options.ignore_columns.begin(), options.ignore_columns.end(), name) !=
        options.ignore_columns.end())
      continue;
    if (options.feature_columns.empty()) {
      feature_cols.push_back(c);
      names.push_back(name);
    }
  }
  for (const auto& wanted : options.feature_columns) {
    auto it = std::find(header.begin() + 1, header.end(), wanted);
    if (it == header.end()) throw IoError("feature csv: no column named '" + wanted + "'");
    feature_cols.push_back(static_cast<std::size_t>(it - header.begin()));
    names.push_back(wanted);
  }
  if (feature_cols.empty()) throw IoError("feature csv: no feature columns");

  FeatureMatrix m;
  m.feature_names = names;
  if (group_col) m.groups.emplace();
  std::vector<double> flat;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw IoError("line " + std::to_string(line_no) + ": expected " +
                    std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    m.ids.push_back(trim(fields[0]));
    if (group_col) m.groups->push_back(trim(fields[*group_col]));
    for (auto c : feature_cols) flat.push_back(parse_double(fields[c], line_no, header[c]));
  }
  const auto n = static_cast<Eigen::Index>(m.ids.size());
  const auto d = static_cast<Eigen::Index>(feature_cols.size());
  m.values = Eigen::Map<RowMatrix>(flat.data(), n, d);
  m.validate();
  return m;
}

FeatureMatrix read_feature_csv(const std::filesystem::path& path, const CsvReadOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature csv '" + path.string() + "'");
  return read_feature_csv(in, options);
}

nlohmann::json to_json(const NormalizationModel& model) {
  nlohmann::json j;
  j["feature_names"] = model.feature_names;
  j["means"] = model.means;
  j["stds"] = model.stds;
  j["dropped_features"] = model.dropped_feature_names();
  j["std_convention"] = "population";
  return j;
}

NormalizationModel normalization_from_json(const nlohmann::json& j) {
  NormalizationModel model;
  try {
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.means = j.at("means").get<std::vector<double>>();
    model.stds = j.at("stds").get<std::vector<double>>();
    for (const auto& name : j.at("dropped_features").get<std::vector<std::string>>()) {
      auto it = std::find(model.feature_names.begin(), model.feature_names.end(), name);
      if (it == model.feature_names.end())
        throw IoError("normalization json: unknown dropped feature '" + name + "'");
      model.dropped_features.push_back(static_cast<std::size_t>(it - model.feature_names.begin()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("normalization json: ") + e.what());
  }
  if (model.means.size() != model.feature_names.size() || model.stds.size() != model.feature_names.size())
    throw IoError("normalization json: array lengths disagree");
  return model;
}

} // namespace hetsample
