// hetsample: select a heterogeneous, uniformly covering subset of a
// feature-mapped image dataset.
//
//   hetsample extract-patches --images DIR --masks DIR --out DIR
//   hetsample extract-features --manifest FILE --out metrics.csv [--features-out features.csv]
//   hetsample sample --features FILE --out selection.json [--trial-log FILE]
//   hetsample diagnose --features FILE --selection FILE --out DIR
//   hetsample run-all --images DIR --masks DIR --out DIR

#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "hetsample/cli/commands.hpp"
#include "hetsample/error.hpp"

namespace fs = std::filesystem;
using namespace hetsample;

namespace {

void add_sampling_options(CLI::App& app, cli::RunConfig& config, bool& no_exclusion) {
  app.add_option("--cell-size", config.cell_size, "Grid cell size in z-score units")->capture_default_str();
  app.add_option("--radius", config.radius, "Structuring element radius in grid units")->capture_default_str();
  app.add_option("--k", config.k, "Subset size")->capture_default_str();
  app.add_option("--trials", config.n_trials, "Number of candidate subsets (best FUS wins)")->capture_default_str();
  app.add_option("--group-column", config.group_column, "Column with group labels for same-group exclusion")
      ->capture_default_str();
  app.add_option("--feature-columns", config.feature_columns, "Feature columns to use (default: all)")
      ->delimiter(',');
  app.add_flag("--no-group-exclusion", no_exclusion, "Allow several samples from one group");
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous subset sampling by grid dilation and FUS minimization"};
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");
  app.require_subcommand(1);

  cli::RunConfig config;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool no_exclusion = false;
  app.add_option("--seed", config.seed, "Master random seed")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (results do not depend on this)");
  app.add_option("--bins", config.bins, "Histogram bins")->capture_default_str();
  app.add_option("--window-size", config.window_size, "Patch window size in pixels")->capture_default_str();
  app.add_option("--min-skeleton-length", config.min_skeleton_length,
                 "Minimum in-window medial line length to keep a patch")
      ->capture_default_str();
  add_sampling_options(app, config, no_exclusion);
  app.fallthrough();

  fs::path images, masks, out, manifest, features, selection, features_out;
  std::optional<fs::path> trial_log;

  auto* patches_cmd = app.add_subcommand("extract-patches", "Cut seven windows per source image");
  patches_cmd->add_option("--images", images, "Directory of source images")->required();
  patches_cmd->add_option("--masks", masks, "Directory of masks (same file stems)")->required();
  patches_cmd->add_option("--out", out, "Output directory")->required();

  auto* features_cmd = app.add_subcommand("extract-features", "Compute image metrics for every patch");
  features_cmd->add_option("--manifest", manifest, "Patch manifest CSV")->required();
  features_cmd->add_option("--out", out, "Metric CSV to write")->required();
  features_cmd->add_option("--features-out", features_out,
                           "Sampling feature CSV (default: features.csv next to --out)");

  auto* sample_cmd = app.add_subcommand("sample", "Select a subset from a feature CSV");
  sample_cmd->add_option("--features", features, "Feature CSV")->required();
  sample_cmd->add_option("--out", out, "Selection JSON to write")->required();
  sample_cmd->add_option("--trial-log", trial_log, "Optional per-trial FUS CSV");

  auto* diagnose_cmd = app.add_subcommand("diagnose", "Histograms, PCA and coverage of a selection");
  diagnose_cmd->add_option("--features", features, "Feature CSV")->required();
  diagnose_cmd->add_option("--selection", selection, "Selection JSON")->required();
  diagnose_cmd->add_option("--out", out, "Output directory")->required();

  auto* all_cmd = app.add_subcommand("run-all", "Patches, features, sampling and diagnostics in one go");
  all_cmd->add_option("--images", images, "Directory of source images")->required();
  all_cmd->add_option("--masks", masks, "Directory of masks")->required();
  all_cmd->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  config.group_exclusion = !no_exclusion;
  threads = std::max(1u, threads);

  try {
    if (*patches_cmd) {
      const auto s = cli::cmd_extract_patches(images, masks, out, config, threads);
      print_warnings(s.warnings);
      std::cout << "sources " << s.sources << ", planned " << s.planned << ", retained " << s.retained
                << ", warnings " << s.warnings.size() << '\n';
    } else if (*features_cmd) {
      if (features_out.empty()) features_out = out.parent_path() / "features.csv";
      const auto s = cli::cmd_extract_features(manifest, out, features_out, config, threads);
      std::cout << "patches " << s.rows.size() << ", complete " << s.complete_rows << '\n';
    } else if (*sample_cmd) {
      const auto r = cli::cmd_sample(features, out, trial_log, config, threads);
      std::cout << "selected " << r.selected_ids.size() << ", fus " << r.fus << ", winning trial "
                << r.winning_trial << '\n';
    } else if (*diagnose_cmd) {
      const auto s = cli::cmd_diagnose(features, selection, out, config);
      std::cout << "fus " << s.coverage.fus << ", cells covered " << s.coverage.cells_covered << "/"
                << s.coverage.cells_total << '\n';
    } else if (*all_cmd) {
      const auto p = cli::cmd_extract_patches(images, masks, out / "patches", config, threads);
      print_warnings(p.warnings);
      std::cout << "patches: planned " << p.planned << ", retained " << p.retained << '\n';
      const auto f = cli::cmd_extract_features(out / "patches" / "manifest.csv", out / "metrics.csv",
                                               out / "features.csv", config, threads);
      std::cout << "features: complete rows " << f.complete_rows << '\n';
      const auto r = cli::cmd_sample(out / "features.csv", out / "selection.json", out / "trial_log.csv",
                                     config, threads);
      std::cout << "selection: " << r.selected_ids.size() << " samples, fus " << r.fus << '\n';
      cli::cmd_diagnose(out / "features.csv", out / "selection.json", out / "diagnostics", config);
      std::cout << "diagnostics written to " << (out / "diagnostics").string() << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
