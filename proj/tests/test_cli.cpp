#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <set>

#include "hetsample/cli/commands.hpp"
#include "hetsample/error.hpp"
#include "hetsample/feature_io.hpp"
#include "hetsample/image_io.hpp"
#include "test_support.hpp"

using namespace hetsample;
namespace fs = std::filesystem;

namespace {

// Dark noisy background crossed by a horizontal and a vertical bright vessel,
// placed so every 256 window of a source up to 300 px sees both.
void write_source(const fs::path& images, const fs::path& masks, const std::string& stem, std::size_t w,
                  std::size_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0, 3 + static_cast<double>(seed % 5));
  GrayImage img(w, h);
  BinaryMask mask(w, h);
  const std::size_t hy = h / 2 - 2 + seed % 3, vx = w / 2 - 2 + seed % 4;
  const double level = 90 + 10.0 * static_cast<double>(seed % 7);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const bool vessel = (y >= hy && y < hy + 4) || (x >= vx && x < vx + 3);
      mask.set(x, y, vessel);
      img.at(x, y) = (vessel ? level + 0.2 * static_cast<double>(x % 40) : 30.0) + noise(rng);
    }
  write_png(images / (stem + ".png"), img, 8);
  write_png(masks / (stem + ".png"), mask);
}

struct Corpus {
  testing::TempDir dir{"cli"};
  fs::path images = dir / "images", masks = dir / "masks";
  Corpus() {
    fs::create_directories(images);
    fs::create_directories(masks);
  }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Separated 2-d points so that every sample owns a lattice point of its own.
std::string grid_features_csv(std::size_t n, bool groups) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  std::string s = groups ? "id,group,a,b\n" : "id,a,b\n";
  for (std::size_t i = 0; i < n; ++i) {
    s += "p" + std::to_string(i) + ",";
    if (groups) s += "g" + std::to_string(i / 7) + ",";
    s += format_double(static_cast<double>(i % 6) + jitter(rng)) + "," +
         format_double(static_cast<double>(i / 6) + jitter(rng)) + "\n";
  }
  return s;
}

std::string grouped_random_csv(std::size_t sources, std::size_t per_source, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  std::string s = "id,group,f1,f2,f3,f4\n";
  for (std::size_t g = 0; g < sources; ++g)
    for (std::size_t p = 0; p < per_source; ++p) {
      s += "src" + std::to_string(g) + "__" + std::to_string(p) + ",src" + std::to_string(g);
      for (int j = 0; j < 4; ++j) s += "," + format_double(n(rng));
      s += "\n";
    }
  return s;
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(HETSAMPLE_TOOL) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

} // namespace

TEST_CASE("extract-patches writes seven patches per source and skips small ones") {
  Corpus c;
  for (int i = 0; i < 3; ++i) write_source(c.images, c.masks, "src" + std::to_string(i), 300, 280, i);
  write_source(c.images, c.masks, "small", 200, 300, 9);
  write_source(c.images, c.dir.path(), "lonely", 300, 300, 10); // image without mask
  cli::RunConfig config;
  const auto out = c.dir / "out";
  const auto s = cli::cmd_extract_patches(c.images, c.masks, out, config, 2);
  CHECK(s.sources == 4);
  CHECK(s.planned == 21);
  CHECK(s.retained == 21);
  CHECK(s.patches.size() == 21);
  CHECK(s.warnings.size() == 2);
  bool skipped = false, unpaired = false;
  for (const auto& w : s.warnings) {
    skipped |= w.find("small") != std::string::npos && w.find("source too small") != std::string::npos;
    unpaired |= w.find("lonely") != std::string::npos;
  }
  CHECK(skipped);
  CHECK(unpaired);
  for (const auto& p : s.patches) {
    CHECK(fs::exists(out / "images" / (p.patch_id() + ".png")));
    CHECK(fs::exists(out / "masks" / (p.patch_id() + ".png")));
    const auto img = read_gray_image(out / "images" / (p.patch_id() + ".png"));
    CHECK(img.image.width() == 256);
    CHECK(img.bit_depth == 8);
  }
  const auto manifest = cli::read_manifest(out / "manifest.csv");
  REQUIRE(manifest.size() == 21);
  for (std::size_t i = 0; i < 21; ++i) CHECK(manifest[i].patch_id() == s.patches[i].patch_id());

  const auto first = testing::slurp(out / "manifest.csv");
  CHECK(first.find("# run_config") != std::string::npos);
  cli::cmd_extract_patches(c.images, c.masks, out, config, 1);
  CHECK(testing::slurp(out / "manifest.csv") == first);

  // The filter drops patches once the threshold exceeds the vessel length.
  config.min_skeleton_length = 1e6;
  CHECK(cli::cmd_extract_patches(c.images, c.masks, c.dir / "out2", config).retained == 0);

  const auto empty = c.dir / "empty";
  fs::create_directories(empty);
  CHECK_THROWS_AS(cli::cmd_extract_patches(empty, empty, c.dir / "out3", cli::RunConfig{}), IoError);
}

TEST_CASE("extract-features equals composing the metric operations") {
  Corpus c;
  for (int i = 0; i < 2; ++i) write_source(c.images, c.masks, "s" + std::to_string(i), 260, 260, i + 3);
  cli::RunConfig config;
  const auto out = c.dir / "patches";
  cli::cmd_extract_patches(c.images, c.masks, out, config);
  const auto manifest = cli::read_manifest(out / "manifest.csv");
  REQUIRE(manifest.size() == 14);

  const auto summary = cli::cmd_extract_features(out / "manifest.csv", c.dir / "metrics.csv",
                                                 c.dir / "features.csv", config, 3);
  REQUIRE(summary.rows.size() == 14);
  REQUIRE(summary.detrend);
  CHECK(summary.complete_rows == 14);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto name = manifest[i].patch_id() + ".png";
    const auto img = read_gray_image(out / "images" / name).image;
    const auto mask = read_mask(out / "masks" / name);
    const auto v = extract_metrics(img, mask);
    const auto& row = summary.rows[i];
    CHECK(row.id == manifest[i].patch_id());
    CHECK(row.group == manifest[i].source_id);
    CHECK(*row.metrics.contrast == *v.contrast);
    CHECK(*row.metrics.noise_sigma == *v.noise_sigma);
    CHECK(*row.metrics.vessel_density == *v.vessel_density);
    CHECK(*row.metrics.heterogeneity == *v.heterogeneity);
    CHECK(*row.metrics.detrended_heterogeneity ==
          detrend(*v.heterogeneity, *v.mean_medial_intensity, *summary.detrend));
  }

  // Metric CSV rows carry the same numbers in round-trip form.
  CsvReadOptions opts;
  opts.ignore_columns = {"error"};
  const auto parsed = read_feature_csv(c.dir / "metrics.csv", opts);
  REQUIRE(parsed.rows() == 14);
  CHECK(parsed.values(0, 0) == *summary.rows[0].metrics.contrast);
  const auto feats = read_feature_csv(c.dir / "features.csv", CsvReadOptions{});
  CHECK(feats.feature_names == cli::sampling_feature_names());
  CHECK(feats.groups.has_value());
  CHECK(testing::slurp(c.dir / "metrics.csv").find("# detrend {\"slope\":") != std::string::npos);

  const auto before = testing::slurp(c.dir / "metrics.csv");
  cli::cmd_extract_features(out / "manifest.csv", c.dir / "metrics.csv", c.dir / "features.csv", config, 1);
  CHECK(testing::slurp(c.dir / "metrics.csv") == before);

  write_text(c.dir / "empty.csv", "patch_id,source_id,kind,x,y,size\n");
  CHECK_THROWS_AS(cli::cmd_extract_features(c.dir / "empty.csv", c.dir / "m.csv", c.dir / "f.csv", config), IoError);
}

TEST_CASE("sample: k = n selects everything and the output is thread invariant") {
  testing::TempDir dir("sample");
  write_text(dir / "f.csv", grid_features_csv(30, false));
  cli::RunConfig config;
  config.k = 30;
  config.n_trials = 20;
  const auto r = cli::cmd_sample(dir / "f.csv", dir / "sel.json", dir / "trials.csv", config);
  CHECK(r.fus == 0.0);
  CHECK(std::set<std::string>(r.selected_ids.begin(), r.selected_ids.end()).size() == 30);
  const auto j = read_json(dir / "sel.json");
  CHECK(j.at("fus") == 0.0);
  CHECK(j.at("metadata").at("run_config").at("k") == 30);
  CHECK(j.contains("tie_break_policy"));
  CHECK(testing::slurp(dir / "trials.csv").find("trial_index,fus") != std::string::npos);

  config.k = 8;
  config.n_trials = 300;
  config.seed = 77;
  cli::cmd_sample(dir / "f.csv", dir / "sel.json", std::nullopt, config, 1);
  const auto base = testing::slurp(dir / "sel.json");
  for (unsigned t : {1u, 4u, 8u}) {
    cli::cmd_sample(dir / "f.csv", dir / "sel.json", std::nullopt, config, t);
    CHECK(testing::slurp(dir / "sel.json") == base);
  }
}

TEST_CASE("sample: group exclusion picks one patch per source") {
  testing::TempDir dir("groups");
  write_text(dir / "f.csv", grouped_random_csv(20, 7, 5));
  cli::RunConfig config;
  config.k = 20;
  config.n_trials = 100;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    config.seed = seed;
    const auto r = cli::cmd_sample(dir / "f.csv", dir / "sel.json", std::nullopt, config);
    std::set<std::string> sources;
    for (const auto& id : r.selected_ids) sources.insert(id.substr(0, id.find("__")));
    CHECK(sources.size() == 20);
  }
  config.k = 21;
  CHECK_THROWS_AS(cli::cmd_sample(dir / "f.csv", dir / "sel.json", std::nullopt, config), InfeasibleError);
  config.group_exclusion = false;
  CHECK_NOTHROW(cli::cmd_sample(dir / "f.csv", dir / "sel.json", std::nullopt, config));
}

TEST_CASE("diagnose is consistent with the selection and the diagnostics module") {
  testing::TempDir dir("diag");
  write_text(dir / "f.csv", grouped_random_csv(10, 3, 8));
  cli::RunConfig config;
  config.k = 30;
  config.n_trials = 5;
  config.group_exclusion = false;
  cli::cmd_sample(dir / "f.csv", dir / "all.json", std::nullopt, config);
  const auto all = cli::cmd_diagnose(dir / "f.csv", dir / "all.json", dir / "d_all", config);
  CHECK(all.histogram_files.size() == 4);
  for (const auto& f : all.histogram_files) {
    std::ifstream in(f);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line[0] == 'b') continue;
      const auto cells = split_csv_line(line);
      CHECK(cells[2] == cells[3]);
    }
  }

  config.k = 6;
  config.n_trials = 50;
  const auto r = cli::cmd_sample(dir / "f.csv", dir / "sel.json", std::nullopt, config);
  const auto d = cli::cmd_diagnose(dir / "f.csv", dir / "sel.json", dir / "d", config);
  const auto cov = read_json(d.coverage_json);
  CHECK(cov.at("fus") == r.fus);
  CHECK(cov.at("selection_fus") == r.fus);

  const auto raw = read_feature_csv(dir / "f.csv", CsvReadOptions{});
  const auto model = fit_zscore(raw);
  const auto pca = pca_project(apply_zscore(raw, model), r.selected_ids);
  std::ifstream in(d.pca_csv);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("id,", 0) == 0) continue;
    const auto cells = split_csv_line(line);
    CHECK(cells[0] == raw.ids[row]);
    CHECK(std::stod(cells[1]) == pca.coords(static_cast<Eigen::Index>(row), 0));
    CHECK(std::stod(cells[2]) == pca.coords(static_cast<Eigen::Index>(row), 1));
    ++row;
  }
  CHECK(row == 30);
  CHECK(testing::slurp(d.pca_svg).find("<svg") != std::string::npos);

  auto bad = read_json(dir / "sel.json");
  bad["selected_ids"].push_back("nope");
  write_text(dir / "bad.json", bad.dump());
  CHECK_THROWS_AS(cli::cmd_diagnose(dir / "f.csv", dir / "bad.json", dir / "d2", config), IoError);
}

TEST_CASE("tool exit codes") {
  testing::TempDir dir("exit");
  write_text(dir / "f.csv", grid_features_csv(30, false));
  const auto f = (dir / "f.csv").string();
  const auto sel = (dir / "sel.json").string();
  CHECK(run_tool("--help") == 0);
  CHECK(run_tool("--k 5 --trials 10 sample --features " + f + " --out " + sel) == 0);
  CHECK(fs::exists(sel));
  CHECK(run_tool("sample --features " + f + " --out " + sel + " --k 31 --trials 10") == 2);
  CHECK(run_tool("sample --features " + (dir / "missing.csv").string() + " --out " + sel) == 1);
  CHECK(run_tool("sample --features " + f + " --out " + sel + " --cell-size -1") == 2);
  CHECK(run_tool("sample --bogus") == 1);
  CHECK(run_tool("") == 1);
  write_text(dir / "cfg.toml", "k = 4\ntrials = 7\nseed = 3\n");
  CHECK(run_tool("--config " + (dir / "cfg.toml").string() + " --seed 9 sample --features " + f + " --out " + sel) ==
        0);
  const auto j = read_json(sel);
  CHECK(j.at("k") == 4);
  CHECK(j.at("n_trials") == 7);
  CHECK(j.at("seed") == 9);
}

TEST_CASE("run-all produces every artifact") {
  Corpus c;
  for (int i = 0; i < 6; ++i) write_source(c.images, c.masks, "r" + std::to_string(i), 280, 270, i + 20);
  const auto out = c.dir / "run";
  CHECK(run_tool("--k 5 --trials 30 --threads 2 run-all --images " + c.images.string() + " --masks " +
                 c.masks.string() + " --out " + out.string()) == 0);
  for (const char* p : {"patches/manifest.csv", "metrics.csv", "features.csv", "selection.json", "trial_log.csv",
                        "diagnostics/coverage.json", "diagnostics/pca.csv", "diagnostics/pca.svg"})
    CHECK_MESSAGE(fs::exists(out / p), p);
  const auto j = read_json(out / "selection.json");
  CHECK(j.at("selected_ids").size() == 5);
  std::set<std::string> sources;
  for (const auto& id : j.at("selected_ids")) sources.insert(id.get<std::string>().substr(0, 2));
  CHECK(sources.size() == 5);
}
