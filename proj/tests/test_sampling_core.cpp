#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "hetsample/error.hpp"
#include "hetsample/kd_tree.hpp"
#include "hetsample/sampling_core.hpp"
#include "hetsample/selection_io.hpp"
#include "test_support.hpp"

using namespace hetsample;
using testing::lattice_grid;

namespace {

using Point = std::vector<std::int32_t>;

std::set<Point> enumerate_ball_oracle(std::size_t d, double r) {
  const int reach = static_cast<int>(std::floor(r));
  std::set<Point> out;
  Point p(d, -reach);
  for (;;) {
    long long s = 0;
    for (auto v : p) s += static_cast<long long>(v) * v;
    if (static_cast<double>(s) <= r * r) out.insert(p);
    std::size_t j = 0;
    while (j < d && p[j] == reach) p[j++] = -reach;
    if (j == d) break;
    ++p[j];
  }
  return out;
}

std::set<Point> dilation_oracle(const GridPointSet& g, double r) {
  const auto ball = enumerate_ball_oracle(g.dims(), r);
  std::set<Point> out;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (const auto& o : ball) {
      Point q(g.dims());
      for (std::size_t j = 0; j < g.dims(); ++j) q[j] = g.lattice_row(i)[j] + o[j];
      out.insert(q);
    }
  return out;
}

std::set<Point> as_set(const SamplingSet& s) {
  std::set<Point> out;
  for (std::size_t i = 0; i < s.size(); ++i) out.emplace(s.point(i).begin(), s.point(i).end());
  return out;
}

// Exhaustive double loop over integer lattice coordinates.
long long fus_squared_oracle(const std::vector<std::vector<int>>& pts, const std::vector<std::size_t>& sel) {
  long long worst = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (std::find(sel.begin(), sel.end(), i) != sel.end()) continue;
    long long best = -1;
    for (auto s : sel) {
      long long d2 = 0;
      for (std::size_t j = 0; j < pts[i].size(); ++j) {
        const long long t = pts[i][j] - pts[s][j];
        d2 += t * t;
      }
      if (best < 0 || d2 < best) best = d2;
    }
    worst = std::max(worst, best);
  }
  return worst;
}

FeatureMatrix matrix_for(const GridPointSet& g, std::vector<std::string> groups = {}) {
  RowMatrix v(static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.dims()));
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.dims(); ++j) v(i, j) = g.scaled_row(i)[j];
  return testing::make_matrix(v, std::move(groups));
}

std::vector<std::vector<int>> distinct_lattice(std::size_t n, std::size_t d, int lo, int hi, std::mt19937_64& rng) {
  std::set<std::vector<int>> seen;
  std::vector<std::vector<int>> out;
  while (out.size() < n) {
    auto p = testing::random_lattice(1, d, lo, hi, rng).front();
    if (seen.insert(p).second) out.push_back(p);
  }
  return out;
}

} // namespace

TEST_CASE("structuring element sizes") {
  const auto e1 = build_structuring_element(1, 2.0);
  CHECK(e1.size() == 5);
  CHECK(e1.offsets == std::vector<std::int32_t>{-2, -1, 0, 1, 2});
  CHECK(build_structuring_element(2, 2.0).size() == enumerate_ball_oracle(2, 2.0).size());
  CHECK(build_structuring_element(2, 2.0).size() == 13);
  CHECK(build_structuring_element(3, 1.0).size() == 7);
  for (std::size_t d = 1; d <= 4; ++d)
    for (double r : {0.5, 1.0, 1.5, 2.0, 2.9, 4.0}) {
      const auto e = build_structuring_element(d, r);
      std::set<Point> got;
      for (std::size_t i = 0; i < e.size(); ++i) got.emplace(e.offset(i).begin(), e.offset(i).end());
      CHECK(got == enumerate_ball_oracle(d, r));
      CHECK(got.count(Point(d, 0)) == 1);
      for (const auto& p : got) {
        Point neg(p);
        for (auto& v : neg) v = -v;
        CHECK(got.count(neg) == 1);
      }
    }
}

TEST_CASE("structuring element guards") {
  CHECK_THROWS_WITH_AS(build_structuring_element(8, 6.0, 1000), "structuring element too large", InfeasibleError);
  CHECK_THROWS_AS(build_structuring_element(0, 1.0), InfeasibleError);
  CHECK_THROWS_AS(build_structuring_element(2, 0.0), InfeasibleError);
}

TEST_CASE("dilate examples") {
  const auto e = build_structuring_element(2, 1.0);
  const auto one = dilate(lattice_grid({{0, 0}}), e);
  CHECK(as_set(one) == std::set<Point>{{-1, 0}, {0, -1}, {0, 0}, {0, 1}, {1, 0}});
  const auto twice = dilate(lattice_grid({{0, 0}, {0, 0}}), e);
  CHECK(as_set(twice) == as_set(one));
  CHECK(twice.size() == 5);
  CHECK_THROWS_AS(dilate(lattice_grid({{0, 0, 0}}), e), InfeasibleError);
}

TEST_CASE("dilate matches a nested-union oracle") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const auto g = lattice_grid(testing::random_lattice(50, 2, -20, 20, rng));
    const auto s = dilate(g, build_structuring_element(2, 3.0));
    CHECK(as_set(s) == dilation_oracle(g, 3.0));
    for (std::size_t i = 1; i < s.size(); ++i)
      REQUIRE(std::lexicographical_compare(s.point(i - 1).begin(), s.point(i - 1).end(), s.point(i).begin(),
                                           s.point(i).end()));
    for (std::size_t i = 0; i < g.rows(); ++i) CHECK(s.contains(g.lattice_row(i)));
  }
}

TEST_CASE("kd-tree nearest equals brute force, ties to lowest index") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t d = 1 + rep % 4;
    const std::size_t n = 1 + rng() % 300;
    std::vector<double> pts(n * d);
    const bool integer = rep % 2 == 0;
    std::uniform_real_distribution<double> u(-5, 5);
    for (auto& v : pts) v = integer ? std::round(u(rng)) : u(rng);
    const KdTree tree(pts, d);
    for (int q = 0; q < 20; ++q) {
      std::vector<double> query(d);
      for (auto& v : query) v = integer ? std::round(u(rng)) : u(rng);
      const auto a = tree.nearest(query);
      const auto b = brute_force_nearest(pts, d, {}, query);
      REQUIRE(a.index == b.index);
      REQUIRE(a.squared_distance == b.squared_distance);
    }
  }
}

TEST_CASE("compute_fus examples") {
  const auto g = lattice_grid({{0, 0}, {3, 4}});
  const std::vector<std::size_t> first{0};
  CHECK(compute_fus(first, g) == 5.0);
  const std::vector<std::size_t> all{0, 1};
  CHECK(compute_fus(all, g) == 0.0);
  CHECK(nearest_selected_distances(all, g).empty());
  CHECK_THROWS_AS(compute_fus(std::vector<std::size_t>{}, g), InfeasibleError);
  CHECK_THROWS_AS(nearest_selected_distances(std::vector<std::size_t>{}, g), InfeasibleError);
}

TEST_CASE("compute_fus matches an exhaustive oracle on every 3-subset") {
  std::mt19937_64 rng(101);
  for (int rep = 0; rep < 5; ++rep) {
    const auto pts = testing::random_lattice(12, 2, -10, 10, rng);
    const auto g = lattice_grid(pts);
    for (std::size_t a = 0; a < 12; ++a)
      for (std::size_t b = a + 1; b < 12; ++b)
        for (std::size_t c = b + 1; c < 12; ++c) {
          const std::vector<std::size_t> sel{a, b, c};
          const auto expected = fus_squared_oracle(pts, sel);
          REQUIRE(fus_squared(sel, g) == static_cast<double>(expected));
          REQUIRE(compute_fus(sel, g) == std::sqrt(static_cast<double>(expected)));
        }
  }
}

TEST_CASE("nearest_selected_distances is sorted and consistent") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const auto pts = testing::random_lattice(40, 3, -6, 6, rng);
    const auto g = lattice_grid(pts);
    std::vector<std::size_t> sel{static_cast<std::size_t>(rng() % 40), static_cast<std::size_t>(rng() % 40),
                                 static_cast<std::size_t>(rng() % 40)};
    const auto list = nearest_selected_distances(sel, g);
    CHECK(list.size() == 40 - std::set<std::size_t>(sel.begin(), sel.end()).size());
    for (std::size_t i = 1; i < list.size(); ++i) CHECK(list[i - 1].second >= list[i].second);
    CHECK(list.front().second == compute_fus(sel, g));
    for (auto [row, dist] : list) {
      const auto expected = fus_squared_oracle({pts[row], pts[sel[0]], pts[sel[1]], pts[sel[2]]}, {1, 2, 3});
      CHECK(dist == std::sqrt(static_cast<double>(expected)));
    }
  }
}

TEST_CASE("compute_fus never increases when a sample is added") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 50; ++rep) {
    const auto g = lattice_grid(testing::random_lattice(60, 2, -15, 15, rng));
    std::vector<std::size_t> order(60);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= 60; ++k) {
      const std::vector<std::size_t> sel(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
      const double f = compute_fus(sel, g);
      REQUIRE(f <= previous);
      previous = f;
    }
    CHECK(previous == 0.0);
  }
}

TEST_CASE("draw_one_trial returns every sample when k == n") {
  std::mt19937_64 rng(4);
  const auto g = lattice_grid(distinct_lattice(25, 2, -8, 8, rng));
  const auto m = matrix_for(g);
  const auto sset = dilate(g, build_structuring_element(2, 2.0));
  SelectionParams p;
  p.k = 25;
  auto rows = draw_one_trial(sset, g, m, p, 77);
  std::sort(rows.begin(), rows.end());
  std::vector<std::size_t> all(25);
  std::iota(all.begin(), all.end(), std::size_t{0});
  CHECK(rows == all);
}

TEST_CASE("identical samples are both reachable; nearest ties go to the lowest row") {
  const auto g = lattice_grid({{2, 2}, {2, 2}});
  const auto m = matrix_for(g);
  const auto sset = dilate(g, build_structuring_element(2, 1.0));
  const Sampler sampler(m, g, sset);
  for (std::size_t i = 0; i < sset.size(); ++i) CHECK(sampler.nearest_sample(sset.point(i)) == 0);
  // Row 1 is never anyone's nearest sample, so k = 2 cannot be met.
  SelectionParams p;
  p.k = 2;
  CHECK_THROWS_WITH_AS(sampler.draw(p, 1), doctest::Contains("insufficient diversity for k"), InfeasibleError);
  p.k = 1;
  CHECK(sampler.draw(p, 1) == std::vector<std::size_t>{0});
}

TEST_CASE("draws are deterministic per trial seed and select is thread-count invariant") {
  std::mt19937_64 rng(30);
  const auto g = lattice_grid(distinct_lattice(30, 2, -12, 12, rng));
  const auto m = matrix_for(g);
  const auto sset = dilate(g, build_structuring_element(2, 2.0));
  SelectionParams p;
  p.k = 5;
  p.n_trials = 200;
  p.seed = 1234;
  const auto first = draw_one_trial(sset, g, m, p, 99);
  for (int run = 0; run < 5; ++run) CHECK(draw_one_trial(sset, g, m, p, 99) == first);
  CHECK(std::set<std::size_t>(first.begin(), first.end()).size() == 5);

  const auto base = select(m, g, sset, p, GridConfig(1.0), 2.0, 1);
  for (unsigned threads : {2u, 4u, 8u}) {
    const auto other = select(m, g, sset, p, GridConfig(1.0), 2.0, threads);
    CHECK(other.selected_rows == base.selected_rows);
    CHECK(other.winning_trial == base.winning_trial);
    CHECK(other.trial_fus == base.trial_fus);
    CHECK(to_json(other).dump() == to_json(base).dump());
  }
}

TEST_CASE("select picks the minimum FUS trial") {
  std::mt19937_64 rng(31);
  const auto g = lattice_grid(distinct_lattice(40, 2, -12, 12, rng));
  const auto m = matrix_for(g);
  const auto sset = dilate(g, build_structuring_element(2, 2.0));
  SelectionParams p;
  p.k = 6;
  p.n_trials = 1;
  p.seed = 5;
  const auto single = select(m, g, sset, p, GridConfig(1.0), 2.0);
  CHECK(single.selected_rows == draw_one_trial(sset, g, m, p, trial_seed(5, 0)));
  CHECK(single.winning_trial == 0);

  p.n_trials = 300;
  const auto r = select(m, g, sset, p, GridConfig(1.0), 2.0, 3);
  REQUIRE(r.trial_fus.size() == 300);
  const auto min_it = std::min_element(r.trial_fus.begin(), r.trial_fus.end());
  CHECK(r.fus == *min_it);
  CHECK(r.winning_trial == static_cast<std::size_t>(min_it - r.trial_fus.begin()));
  CHECK(r.fus == compute_fus(r.selected_rows, g));
  CHECK(r.selected_ids.size() == 6);
  CHECK(std::set<std::string>(r.selected_ids.begin(), r.selected_ids.end()).size() == 6);
  for (std::size_t i = 0; i < r.selected_rows.size(); ++i) CHECK(r.selected_ids[i] == m.ids[r.selected_rows[i]]);
}

TEST_CASE("best-of-N reaches the exhaustive optimum on small instances") {
  int hits = 0;
  for (std::uint64_t master = 0; master < 20; ++master) {
    std::mt19937_64 rng(1000 + master);
    const auto pts = distinct_lattice(12, 2, 0, 12, rng);
    const auto g = lattice_grid(pts);
    const auto m = matrix_for(g);
    const auto sset = dilate(g, build_structuring_element(2, 2.0));
    long long optimum = std::numeric_limits<long long>::max();
    for (std::size_t a = 0; a < 12; ++a)
      for (std::size_t b = a + 1; b < 12; ++b)
        for (std::size_t c = b + 1; c < 12; ++c) optimum = std::min(optimum, fus_squared_oracle(pts, {a, b, c}));
    SelectionParams p;
    p.k = 3;
    p.n_trials = 5000;
    p.seed = master;
    const auto r = select(m, g, sset, p, GridConfig(1.0), 2.0);
    if (r.fus <= std::sqrt(static_cast<double>(optimum))) ++hits;
  }
  CHECK(hits >= 18);
}

TEST_CASE("group exclusion never selects two samples of one group") {
  std::mt19937_64 rng(12);
  const auto g = lattice_grid(distinct_lattice(60, 2, -20, 20, rng));
  std::vector<std::string> groups;
  for (int i = 0; i < 60; ++i) groups.push_back("src" + std::to_string(i % 12));
  const auto m = matrix_for(g, groups);
  const auto sset = dilate(g, build_structuring_element(2, 2.0));
  SelectionParams p;
  p.k = 12;
  p.n_trials = 50;
  p.enforce_group_exclusion = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    p.seed = seed;
    const auto r = select(m, g, sset, p, GridConfig(1.0), 2.0);
    std::set<std::string> used;
    for (auto row : r.selected_rows) CHECK(used.insert(groups[row]).second);
  }
  p.k = 13;
  CHECK_THROWS_WITH_AS(select(m, g, sset, p, GridConfig(1.0), 2.0), doctest::Contains("insufficient diversity"),
                       InfeasibleError);
  const auto ungrouped = matrix_for(g);
  p.k = 3;
  CHECK_THROWS_AS(select(ungrouped, g, sset, p, GridConfig(1.0), 2.0), InfeasibleError);
}

TEST_CASE("k larger than the sample count is infeasible") {
  const auto g = lattice_grid({{0, 0}, {5, 5}});
  const auto m = matrix_for(g);
  const auto sset = dilate(g, build_structuring_element(2, 1.0));
  SelectionParams p;
  p.k = 3;
  CHECK_THROWS_AS(draw_one_trial(sset, g, m, p, 0), InfeasibleError);
  p.k = 0;
  CHECK_THROWS_AS(draw_one_trial(sset, g, m, p, 0), InfeasibleError);
}

TEST_CASE("row permutation leaves the FUS distribution unchanged") {
  std::mt19937_64 rng(55);
  const auto pts = distinct_lattice(80, 2, -15, 15, rng);
  std::vector<std::size_t> perm(80);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<int>> permuted;
  for (auto i : perm) permuted.push_back(pts[i]);

  auto mean_fus = [](const std::vector<std::vector<int>>& p) {
    const auto g = lattice_grid(p);
    const auto m = matrix_for(g);
    const auto sset = dilate(g, build_structuring_element(2, 3.0));
    SelectionParams params;
    params.k = 8;
    params.n_trials = 3000;
    params.seed = 9;
    const auto r = select(m, g, sset, params, GridConfig(1.0), 3.0);
    return std::accumulate(r.trial_fus.begin(), r.trial_fus.end(), 0.0) / static_cast<double>(r.trial_fus.size());
  };
  const double a = mean_fus(pts);
  const double b = mean_fus(permuted);
  CHECK(std::abs(a - b) / a < 0.03);
}

TEST_CASE("trial seeds are distinct and stable") {
  CHECK(trial_seed(0, 0) != trial_seed(0, 1));
  CHECK(trial_seed(1, 0) != trial_seed(0, 0));
  CHECK(trial_seed(42, 7) == trial_seed(42, 7));
}

TEST_CASE("selection json round trip") {
  SelectionResult r;
  r.selected_ids = {"a", "b"};
  r.fus = 2.5;
  r.winning_trial = 3;
  r.params.k = 2;
  r.params.n_trials = 10;
  r.params.seed = 18446744073709551615ULL;
  r.grid_config = GridConfig(0.1);
  r.radius = 4;
  r.dropped_features = {"z"};
  const auto j = to_json(r);
  for (const char* key : {"selected_ids", "fus", "winning_trial", "seed", "k", "n_trials", "cell_size", "radius",
                          "dropped_features", "tie_break_policy"})
    CHECK(j.contains(key));
  const auto back = selection_from_json(j);
  CHECK(back.selected_ids == r.selected_ids);
  CHECK(back.params.seed == r.params.seed);
  CHECK(back.grid_config.cell_size == 0.1);
  CHECK(back.dropped_features == r.dropped_features);
  CHECK_THROWS_AS(selection_from_json(nlohmann::json{{"fus", 1}}), IoError);
}
