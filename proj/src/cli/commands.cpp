#include "hetsample/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hetsample/error.hpp"
#include "hetsample/feature_io.hpp"
#include "hetsample/image_io.hpp"
#include "hetsample/parallel.hpp"
#include "hetsample/selection_io.hpp"
#include "hetsample/skeleton.hpp"

namespace hetsample::cli {

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

bool is_image_file(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pgm";
}

std::map<std::string, fs::path> images_by_stem(const fs::path& dir, std::vector<std::string>& warnings) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: '" + dir.string() + "'");
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
    const auto stem = entry.path().stem().string();
    auto [it, inserted] = out.emplace(stem, entry.path());
    if (!inserted) {
      warnings.push_back("duplicate stem '" + stem + "' in " + dir.string() + "; using " +
                         std::min(it->second, entry.path()).filename().string());
      it->second = std::min(it->second, entry.path());
    }
  }
  return out;
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string safe_filename(const std::string& name) {
  std::string out;
  for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out.empty() ? "feature" : out;
}

} // namespace

void RunConfig::validate() const {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw InfeasibleError("--cell-size must be positive");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InfeasibleError("--radius must be positive");
  if (k < 1) throw InfeasibleError("--k must be at least 1");
  if (n_trials < 1) throw InfeasibleError("--trials must be at least 1");
  if (bins < 1) throw InfeasibleError("--bins must be at least 1");
  if (window_size < 1) throw InfeasibleError("--window-size must be at least 1");
  if (!(min_skeleton_length >= 0.0)) throw InfeasibleError("--min-skeleton-length must be non-negative");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["cell_size"] = cell_size;
  j["radius"] = radius;
  j["k"] = k;
  j["n_trials"] = n_trials;
  j["seed"] = seed;
  j["group_exclusion"] = group_exclusion;
  j["group_column"] = group_column;
  j["feature_columns"] = feature_columns;
  j["bins"] = bins;
  j["window_size"] = window_size;
  j["min_skeleton_length"] = min_skeleton_length;
  j["paths"] = paths;
  return j;
}

std::string tool_version() { return HETSAMPLE_VERSION; }

nlohmann::json metadata(const RunConfig& config) {
  return {{"tool", "hetsample"}, {"version", tool_version()}, {"run_config", config.to_json()}};
}

std::string csv_metadata_lines(const RunConfig& config) {
  return "# hetsample " + tool_version() + "\n# run_config " + config.to_json().dump() + "\n";
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InfeasibleError*>(&e)) return 2;
  return 1;
}

// ---------------------------------------------------------------- patches

PatchSummary cmd_extract_patches(const fs::path& images_dir, const fs::path& masks_dir,
                                 const fs::path& out_dir, RunConfig config, unsigned threads) {
  config.validate();
  config.paths["images"] = images_dir.string();
  config.paths["masks"] = masks_dir.string();
  config.paths["out"] = out_dir.string();

  PatchSummary summary;
  const auto images = images_by_stem(images_dir, summary.warnings);
  const auto masks = images_by_stem(masks_dir, summary.warnings);
  std::vector<std::string> sources;
  for (const auto& [stem, path] : images) {
    if (masks.count(stem))
      sources.push_back(stem);
    else
      summary.warnings.push_back("unpaired image '" + path.filename().string() + "' (no mask)");
  }
  for (const auto& [stem, path] : masks)
    if (!images.count(stem)) summary.warnings.push_back("unpaired mask '" + path.filename().string() + "' (no image)");
  if (sources.empty()) throw IoError("no paired image/mask files found");

  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "masks");

  struct SourceResult {
    std::size_t planned = 0;
    std::vector<PatchSpec> kept;
    std::string skipped;
  };
  std::vector<SourceResult> results(sources.size());
  parallel_for(sources.size(), threads, [&](std::size_t i) {
    const auto& id = sources[i];
    const auto loaded = read_gray_image(images.at(id));
    const auto mask = read_mask(masks.at(id));
    require_same_size(loaded.image, mask);
    auto& res = results[i];
    std::vector<PatchSpec> plan;
    try {
      plan = plan_windows(id, loaded.image.width(), loaded.image.height(), config.window_size, config.seed);
    } catch (const InfeasibleError& e) {
      res.skipped = "skipped source '" + id + "': " + e.what();
      return;
    }
    res.planned = plan.size();
    std::map<std::string, BinaryMask> source_masks{{id, mask}};
    res.kept = filter_windows(plan, source_masks, config.min_skeleton_length);
    for (const auto& spec : res.kept) {
      const auto name = spec.patch_id() + ".png";
      write_png(out_dir / "images" / name, loaded.image.crop(spec.x, spec.y, spec.size, spec.size),
                loaded.bit_depth);
      write_png(out_dir / "masks" / name, mask.crop(spec.x, spec.y, spec.size, spec.size));
    }
  });

  summary.sources = sources.size();
  for (auto& r : results) {
    if (!r.skipped.empty()) summary.warnings.push_back(r.skipped);
    summary.planned += r.planned;
    summary.retained += r.kept.size();
    summary.patches.insert(summary.patches.end(), r.kept.begin(), r.kept.end());
  }
  std::stable_sort(summary.patches.begin(), summary.patches.end(), patch_order);

  auto out = open_out(out_dir / "manifest.csv");
  out << csv_metadata_lines(config);
  out << "patch_id,source_id,kind,x,y,size\n";
  for (const auto& p : summary.patches)
    out << csv_escape(p.patch_id()) << ',' << csv_escape(p.source_id) << ',' << to_string(p.kind) << ','
        << p.x << ',' << p.y << ',' << p.size << '\n';
  if (!out) throw IoError("write failed for manifest");
  return summary;
}

std::vector<PatchSpec> read_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest '" + manifest.string() + "'");
  std::string line;
  std::vector<std::string> header;
  std::vector<PatchSpec> specs;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (header.empty()) {
      header = fields;
      const std::vector<std::string> expected = {"patch_id", "source_id", "kind", "x", "y", "size"};
      if (header != expected) throw IoError("manifest: unexpected header");
      continue;
    }
    if (fields.size() != 6) throw IoError("manifest: expected 6 fields in '" + line + "'");
    try {
      PatchSpec s;
      s.source_id = fields[1];
      s.kind = window_kind_from_string(fields[2]);
      s.x = std::stoul(fields[3]);
      s.y = std::stoul(fields[4]);
      s.size = std::stoul(fields[5]);
      if (s.patch_id() != fields[0]) throw IoError("manifest: patch id '" + fields[0] + "' does not match source/kind");
      specs.push_back(std::move(s));
    } catch (const std::logic_error&) {
      throw IoError("manifest: malformed row '" + line + "'");
    }
  }
  if (header.empty()) throw IoError("manifest: missing header");
  return specs;
}

// ---------------------------------------------------------------- features

std::vector<std::string> sampling_feature_names() {
  return {"contrast", "noise_sigma", "vessel_density", "detrended_heterogeneity"};
}

FeatureSummary cmd_extract_features(const fs::path& manifest, const fs::path& metrics_csv,
                                    const fs::path& features_csv, RunConfig config, unsigned threads) {
  config.validate();
  config.paths["manifest"] = manifest.string();
  config.paths["metrics_csv"] = metrics_csv.string();
  config.paths["features_csv"] = features_csv.string();

  const auto specs = read_manifest(manifest);
  if (specs.empty()) throw IoError("manifest lists no patches");
  const auto root = manifest.parent_path();

  FeatureSummary summary;
  summary.rows.resize(specs.size());
  parallel_for(specs.size(), threads, [&](std::size_t i) {
    const auto name = specs[i].patch_id() + ".png";
    auto& row = summary.rows[i];
    row.id = specs[i].patch_id();
    row.group = specs[i].source_id;
    try {
      const auto image = read_gray_image(root / "images" / name).image;
      const auto mask = read_mask(root / "masks" / name);
      row.metrics = extract_metrics(image, mask);
    } catch (const Error& e) {
      row.metrics.errors["io"] = e.what();
    }
  });

  std::vector<MetricVector> metrics;
  for (const auto& r : summary.rows) metrics.push_back(r.metrics);
  try {
    summary.detrend = apply_detrend(metrics);
    for (std::size_t i = 0; i < metrics.size(); ++i) summary.rows[i].metrics = metrics[i];
  } catch (const InfeasibleError& e) {
    for (auto& r : summary.rows) r.metrics.errors["detrended_heterogeneity"] = e.what();
  }

  auto header_meta = csv_metadata_lines(config);
  if (summary.detrend)
    header_meta += "# detrend {\"slope\":" + format_double(summary.detrend->slope) +
                   ",\"intercept\":" + format_double(summary.detrend->intercept) + "}\n";

  auto out = open_out(metrics_csv);
  out << header_meta;
  out << "id,group,contrast,noise_sigma,vessel_density,heterogeneity,mean_medial_intensity,"
         "detrended_heterogeneity,error\n";
  for (const auto& r : summary.rows) {
    const auto& m = r.metrics;
    std::string errors;
    for (const auto& [field, msg] : m.errors) errors += (errors.empty() ? "" : "; ") + field + ": " + msg;
    out << csv_escape(r.id) << ',' << csv_escape(r.group) << ',' << optional_cell(m.contrast) << ','
        << optional_cell(m.noise_sigma) << ',' << optional_cell(m.vessel_density) << ','
        << optional_cell(m.heterogeneity) << ',' << optional_cell(m.mean_medial_intensity) << ','
        << optional_cell(m.detrended_heterogeneity) << ',' << csv_escape(errors) << '\n';
  }
  if (!out) throw IoError("write failed for '" + metrics_csv.string() + "'");

  auto feat = open_out(features_csv);
  feat << header_meta;
  feat << "id,group";
  for (const auto& n : sampling_feature_names()) feat << ',' << n;
  feat << '\n';
  for (const auto& r : summary.rows) {
    const auto& m = r.metrics;
    if (!(m.contrast && m.noise_sigma && m.vessel_density && m.detrended_heterogeneity)) continue;
    ++summary.complete_rows;
    feat << csv_escape(r.id) << ',' << csv_escape(r.group) << ',' << format_double(*m.contrast) << ','
         << format_double(*m.noise_sigma) << ',' << format_double(*m.vessel_density) << ','
         << format_double(*m.detrended_heterogeneity) << '\n';
  }
  if (!feat) throw IoError("write failed for '" + features_csv.string() + "'");
  return summary;
}

// ---------------------------------------------------------------- sampling

namespace {

struct PreparedSpace {
  FeatureMatrix raw;
  NormalizationModel model;
  FeatureMatrix standardized;
  GridPointSet grid;
};

PreparedSpace prepare_space(const fs::path& feature_csv, const RunConfig& config, double cell_size) {
  CsvReadOptions opts;
  opts.group_column = config.group_column;
  opts.feature_columns = config.feature_columns;
  opts.ignore_columns = {"error"};
  PreparedSpace s;
  s.raw = read_feature_csv(feature_csv, opts);
  s.model = fit_zscore(s.raw);
  s.standardized = apply_zscore(s.raw, s.model);
  s.grid = discretize(s.standardized, GridConfig(cell_size));
  return s;
}

} // namespace

SelectionResult cmd_sample(const fs::path& feature_csv, const fs::path& out_json,
                           const std::optional<fs::path>& trial_log, RunConfig config, unsigned threads) {
  config.validate();
  config.paths["features"] = feature_csv.string();
  config.paths["selection"] = out_json.string();
  if (trial_log) config.paths["trial_log"] = trial_log->string();

  auto space = prepare_space(feature_csv, config, config.cell_size);
  const bool exclusion = config.group_exclusion && space.raw.groups.has_value();

  const GridConfig grid(config.cell_size);
  const auto element = build_structuring_element(space.grid.dims(), config.radius);
  const auto sset = dilate(space.grid, element);

  SelectionParams params;
  params.k = config.k;
  params.n_trials = config.n_trials;
  params.seed = config.seed;
  params.enforce_group_exclusion = exclusion;
  auto result = select(space.standardized, space.grid, sset, params, grid, config.radius, threads);
  result.dropped_features = space.model.dropped_feature_names();

  auto j = to_json(result);
  j["metadata"] = metadata(config);
  j["normalization"] = to_json(space.model);
  j["warnings"] = space.model.warnings;
  j["sampling_set_size"] = sset.size();
  j["structuring_element_size"] = element.size();
  j["samples"] = space.raw.rows();
  j["distance_space"] = {{"nearest_sample", "grid-scaled continuous coordinates"},
                         {"fus", "integer lattice coordinates"}};
  write_json(out_json, j);

  if (trial_log) {
    auto out = open_out(*trial_log);
    out << csv_metadata_lines(config);
    write_trial_log(out, result);
  }
  return result;
}

// ---------------------------------------------------------------- diagnostics

DiagnoseSummary cmd_diagnose(const fs::path& feature_csv, const fs::path& selection_json,
                             const fs::path& out_dir, RunConfig config) {
  config.validate();
  config.paths["features"] = feature_csv.string();
  config.paths["selection"] = selection_json.string();
  config.paths["out"] = out_dir.string();

  std::ifstream in(selection_json);
  if (!in) throw IoError("cannot open selection '" + selection_json.string() + "'");
  nlohmann::json sj;
  try {
    in >> sj;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("selection json: " + std::string(e.what()));
  }
  auto selection = selection_from_json(sj);

  auto space = prepare_space(feature_csv, config, selection.grid_config.cell_size);
  selection.selected_rows = space.raw.indices_of(selection.selected_ids);

  DiagnoseSummary summary;
  fs::create_directories(out_dir);
  const auto meta = csv_metadata_lines(config);

  std::set<std::string> used_names;
  for (std::size_t j = 0; j < space.raw.cols(); ++j) {
    const auto col = space.raw.values.col(static_cast<Eigen::Index>(j));
    std::vector<double> full(col.begin(), col.end());
    std::vector<double> subset;
    for (auto r : selection.selected_rows) subset.push_back(full[r]);
    const auto h = histogram_pair(full, subset, config.bins, space.raw.feature_names[j]);
    auto name = "hist_" + safe_filename(h.feature_name);
    while (!used_names.insert(name).second) name += "_";
    const auto path = out_dir / (name + ".csv");
    auto out = open_out(path);
    out << meta << "# feature " << h.feature_name << '\n';
    write_histogram_csv(out, h);
    summary.histogram_files.push_back(path);
  }

  const auto pca = pca_project(space.standardized, selection.selected_ids);
  summary.pca_csv = out_dir / "pca.csv";
  {
    auto out = open_out(summary.pca_csv);
    out << meta;
    write_pca_csv(out, space.raw.ids, pca);
  }
  summary.pca_svg = out_dir / "pca.svg";
  {
    auto out = open_out(summary.pca_svg);
    write_pca_svg(out, pca, "PCA of z-scored features", metadata(config).dump());
  }

  summary.coverage = coverage_report(selection, space.grid);
  auto cj = to_json(summary.coverage);
  cj["selection_fus"] = selection.fus;
  cj["metadata"] = metadata(config);
  summary.coverage_json = out_dir / "coverage.json";
  write_json(summary.coverage_json, cj);
  return summary;
}

} // namespace hetsample::cli
