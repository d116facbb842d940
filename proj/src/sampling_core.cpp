#include "hetsample/sampling_core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>
#include <unordered_map>

#include "hetsample/error.hpp"
#include "hetsample/random.hpp"

namespace hetsample {

namespace {

bool row_less(const std::int32_t* a, const std::int32_t* b, std::size_t d) {
  return std::lexicographical_compare(a, a + d, b, b + d);
}

void enumerate_ball(std::size_t dims, std::int32_t reach, double r2, std::size_t cap,
                    std::vector<std::int32_t>& current, double used,
                    std::vector<std::int32_t>& out) {
  const std::size_t depth = current.size();
  if (depth == dims) {
    if (out.size() / dims >= cap) throw InfeasibleError("structuring element too large");
    out.insert(out.end(), current.begin(), current.end());
    return;
  }
  for (std::int32_t v = -reach; v <= reach; ++v) {
    const double next = used + static_cast<double>(v) * static_cast<double>(v);
    if (next > r2) continue;
    current.push_back(v);
    enumerate_ball(dims, reach, r2, cap, current, next, out);
    current.pop_back();
  }
}

// Open-addressing set of fixed-width integer rows.
class RowSet {
public:
  explicit RowSet(std::size_t dims, std::size_t expected) : dims_(dims) {
    std::size_t cap = 16;
    while (cap < expected * 2) cap <<= 1;
    slots_.assign(cap, kEmpty);
    rows_.reserve(expected * dims);
  }

  void insert(const std::int32_t* row) {
    if ((count_ + 1) * 2 > slots_.size()) grow();
    std::size_t h = hash(row) & (slots_.size() - 1);
    for (;;) {
      const auto s = slots_[h];
      if (s == kEmpty) {
        slots_[h] = count_++;
        rows_.insert(rows_.end(), row, row + dims_);
        return;
      }
      if (std::equal(row, row + dims_, rows_.data() + s * dims_)) return;
      h = (h + 1) & (slots_.size() - 1);
    }
  }

  std::vector<std::int32_t> release() { return std::move(rows_); }

private:
  static constexpr std::size_t kEmpty = std::numeric_limits<std::size_t>::max();

  std::size_t hash(const std::int32_t* row) const {
    std::uint64_t h = 0x243F6A8885A308D3ULL;
    for (std::size_t j = 0; j < dims_; ++j)
      h = mix64(h ^ static_cast<std::uint32_t>(row[j]));
    return static_cast<std::size_t>(h);
  }

  void grow() {
    std::vector<std::size_t> fresh(slots_.size() * 2, kEmpty);
    for (std::size_t s = 0; s < count_; ++s) {
      std::size_t h = hash(rows_.data() + s * dims_) & (fresh.size() - 1);
      while (fresh[h] != kEmpty) h = (h + 1) & (fresh.size() - 1);
      fresh[h] = s;
    }
    slots_.swap(fresh);
  }

  std::size_t dims_;
  std::size_t count_ = 0;
  std::vector<std::size_t> slots_;
  std::vector<std::int32_t> rows_;
};

std::vector<double> lattice_as_double(const GridPointSet& grid, std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size() * grid.dims());
  for (auto r : rows)
    for (auto v : grid.lattice_row(r)) out.push_back(static_cast<double>(v));
  return out;
}

std::vector<char> selection_mask(std::span<const std::size_t> selected, std::size_t n) {
  if (selected.empty()) throw InfeasibleError("empty selection");
  std::vector<char> mask(n, 0);
  for (auto s : selected) {
    if (s >= n) throw Error("selected row " + std::to_string(s) + " out of range");
    mask[s] = 1;
  }
  return mask;
}

// Squared distance from every unselected row to the nearest selected row.
template <class Visit>
void for_each_unselected_nearest(std::span<const std::size_t> selected, const GridPointSet& grid,
                                 Visit&& visit) {
  const auto mask = selection_mask(selected, grid.rows());
  std::vector<std::size_t> ids(selected.begin(), selected.end());
  KdTree tree(lattice_as_double(grid, ids), grid.dims(), ids);
  std::vector<double> query(grid.dims());
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    if (mask[i]) continue;
    auto row = grid.lattice_row(i);
    std::copy(row.begin(), row.end(), query.begin());
    visit(i, tree.nearest(query).squared_distance);
  }
}

} // namespace

StructuringElement build_structuring_element(std::size_t dims, double radius,
                                             std::size_t max_offsets) {
  if (dims == 0) throw InfeasibleError("structuring element needs at least one dimension");
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw InfeasibleError("structuring element radius must be positive");
  if (radius >= static_cast<double>(std::numeric_limits<std::int32_t>::max()))
    throw InfeasibleError("structuring element too large");
  StructuringElement element;
  element.dims = dims;
  element.radius = radius;
  std::vector<std::int32_t> current;
  current.reserve(dims);
  enumerate_ball(dims, static_cast<std::int32_t>(std::floor(radius)), radius * radius, max_offsets,
                 current, 0.0, element.offsets);
  return element;
}

SamplingSet::SamplingSet(std::size_t dims, std::vector<std::int32_t> points) : dims_(dims) {
  if (dims_ == 0 || points.size() % dims_ != 0)
    throw Error("sampling set: storage does not match dimension");
  const std::size_t n = points.size() / dims_;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return row_less(points.data() + a * dims_, points.data() + b * dims_, dims_);
  });
  points_.reserve(points.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto* row = points.data() + order[i] * dims_;
    if (i > 0 && std::equal(row, row + dims_, points_.end() - static_cast<std::ptrdiff_t>(dims_)))
      continue;
    points_.insert(points_.end(), row, row + dims_);
  }
}

bool SamplingSet::contains(std::span<const std::int32_t> p) const {
  if (p.size() != dims_) return false;
  std::size_t lo = 0, hi = size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (row_less(points_.data() + mid * dims_, p.data(), dims_))
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo < size() && std::equal(p.begin(), p.end(), points_.data() + lo * dims_);
}

SamplingSet dilate(const GridPointSet& grid_points, const StructuringElement& element) {
  const std::size_t d = grid_points.dims();
  if (element.dims != d)
    throw InfeasibleError("structuring element dimension " + std::to_string(element.dims) +
                          " does not match grid dimension " + std::to_string(d));
  RowSet centers(d, grid_points.rows());
  for (std::size_t i = 0; i < grid_points.rows(); ++i) centers.insert(grid_points.lattice_row(i).data());
  const auto distinct = centers.release();
  const std::size_t m = distinct.size() / d;

  RowSet covered(d, m * std::min<std::size_t>(element.size(), 64));
  std::vector<std::int32_t> shifted(d);
  for (std::size_t c = 0; c < m; ++c) {
    const auto* center = distinct.data() + c * d;
    for (std::size_t o = 0; o < element.size(); ++o) {
      const auto off = element.offset(o);
      for (std::size_t j = 0; j < d; ++j) {
        const std::int64_t v = std::int64_t{center[j]} + off[j];
        if (v < std::numeric_limits<std::int32_t>::min() || v > std::numeric_limits<std::int32_t>::max())
          throw InfeasibleError("dilated lattice point out of range");
        shifted[j] = static_cast<std::int32_t>(v);
      }
      covered.insert(shifted.data());
    }
  }
  return SamplingSet(d, covered.release());
}

void SelectionParams::validate() const {
  if (k < 1) throw InfeasibleError("k must be at least 1");
  if (n_trials < 1) throw InfeasibleError("number of trials must be at least 1");
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index) {
  return mix64(master_seed + (trial_index + 1) * 0x9E3779B97F4A7C15ULL);
}

Sampler::Sampler(const FeatureMatrix& matrix, const GridPointSet& grid_points, const SamplingSet& sset)
    : grid_points_(grid_points), sset_(sset), index_(grid_points.scaled(), grid_points.dims()) {
  if (matrix.rows() != grid_points.rows())
    throw Error("sampler: feature matrix and grid have different row counts");
  if (sset.dims() != grid_points.dims())
    throw Error("sampler: sampling set and grid have different dimensions");
  if (matrix.groups) {
    std::unordered_map<std::string, std::size_t> label;
    group_of_.reserve(matrix.rows());
    for (const auto& g : *matrix.groups) {
      auto [it, inserted] = label.emplace(g, label.size());
      group_of_.push_back(it->second);
    }
    group_count_ = label.size();
  }
}

std::size_t Sampler::nearest_sample(std::span<const std::int32_t> lattice_point) const {
  std::vector<double> q(lattice_point.begin(), lattice_point.end());
  return index_.nearest(q).index;
}

std::vector<std::size_t> Sampler::draw(const SelectionParams& params, std::uint64_t seed_for_trial) const {
  params.validate();
  const std::size_t n = grid_points_.rows();
  if (params.k > n)
    throw InfeasibleError("insufficient diversity for k: k = " + std::to_string(params.k) +
                          " exceeds the " + std::to_string(n) + " available samples");
  if (params.enforce_group_exclusion) {
    if (!has_groups()) throw InfeasibleError("group exclusion requested but samples carry no groups");
    if (params.k > group_count_)
      throw InfeasibleError("insufficient diversity for k: k = " + std::to_string(params.k) +
                            " exceeds the " + std::to_string(group_count_) + " distinct groups");
  }

  std::mt19937_64 rng(seed_for_trial);
  const std::uint64_t total = sset_.size();
  // Lazy Fisher-Yates: only displaced slots are stored.
  std::unordered_map<std::uint64_t, std::uint64_t> displaced;
  auto slot_value = [&](std::uint64_t s) {
    auto it = displaced.find(s);
    return it == displaced.end() ? s : it->second;
  };

  std::vector<char> taken(n, 0);
  std::vector<char> group_taken(group_count_, 0);
  std::vector<std::size_t> chosen;
  chosen.reserve(params.k);
  std::vector<double> query(grid_points_.dims());

  for (std::uint64_t t = 0; t < total && chosen.size() < params.k; ++t) {
    const std::uint64_t j = t + uniform_below(rng, total - t);
    const std::uint64_t picked = slot_value(j);
    displaced[j] = slot_value(t);

    const auto point = sset_.point(static_cast<std::size_t>(picked));
    std::copy(point.begin(), point.end(), query.begin());
    const std::size_t sample = index_.nearest(query).index;
    if (taken[sample]) continue;
    if (params.enforce_group_exclusion && group_taken[group_of_[sample]]) continue;
    taken[sample] = 1;
    if (params.enforce_group_exclusion) group_taken[group_of_[sample]] = 1;
    chosen.push_back(sample);
  }
  if (chosen.size() < params.k)
    throw InfeasibleError("insufficient diversity for k: the sampling set reaches only " +
                          std::to_string(chosen.size()) + " admissible samples, k = " +
                          std::to_string(params.k));
  return chosen;
}

std::vector<std::size_t> draw_one_trial(const SamplingSet& sset, const GridPointSet& grid_points,
                                        const FeatureMatrix& matrix, const SelectionParams& params,
                                        std::uint64_t seed_for_trial) {
  return Sampler(matrix, grid_points, sset).draw(params, seed_for_trial);
}

double fus_squared(std::span<const std::size_t> selected, const GridPointSet& grid_points) {
  double worst = 0.0;
  for_each_unselected_nearest(selected, grid_points,
                              [&](std::size_t, double d2) { worst = std::max(worst, d2); });
  return worst;
}

double compute_fus(std::span<const std::size_t> selected, const GridPointSet& grid_points) {
  return std::sqrt(fus_squared(selected, grid_points));
}

std::vector<std::pair<std::size_t, double>>
nearest_selected_distances(std::span<const std::size_t> selected, const GridPointSet& grid_points) {
  std::vector<std::pair<std::size_t, double>> out;
  for_each_unselected_nearest(selected, grid_points, [&](std::size_t i, double d2) {
    out.emplace_back(i, std::sqrt(d2));
  });
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return out;
}

SelectionResult select(const FeatureMatrix& matrix, const GridPointSet& grid_points,
                       const SamplingSet& sset, const SelectionParams& params,
                       const GridConfig& grid, double radius, unsigned threads) {
  params.validate();
  const Sampler sampler(matrix, grid_points, sset);

  struct Best {
    double fus2 = std::numeric_limits<double>::infinity();
    std::size_t trial = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> rows;
  };

  std::vector<double> trial_fus2(params.n_trials, 0.0);
  std::atomic<std::size_t> next{0};
  // Trials past the lowest failing one are skipped, so the reported error is
  // the same for any thread count.
  std::atomic<std::size_t> error_trial{std::numeric_limits<std::size_t>::max()};
  std::mutex error_mutex;
  std::exception_ptr error;

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(params.n_trials)));
  std::vector<Best> best(workers);

  auto work = [&](unsigned w) {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= params.n_trials || t > error_trial.load()) return;
      try {
        auto rows = sampler.draw(params, trial_seed(params.seed, t));
        const double f2 = fus_squared(rows, grid_points);
        trial_fus2[t] = f2;
        Best& b = best[w];
        if (f2 < b.fus2 || (f2 == b.fus2 && t < b.trial)) b = {f2, t, std::move(rows)};
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (t < error_trial.load()) {
          error_trial = t;
          error = std::current_exception();
        }
      }
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  Best winner;
  for (auto& b : best)
    if (b.fus2 < winner.fus2 || (b.fus2 == winner.fus2 && b.trial < winner.trial)) winner = std::move(b);

  SelectionResult result;
  result.selected_rows = winner.rows;
  for (auto r : winner.rows) result.selected_ids.push_back(matrix.ids[r]);
  result.fus = std::sqrt(winner.fus2);
  result.winning_trial = winner.trial;
  result.params = params;
  result.grid_config = grid;
  result.radius = radius;
  result.trial_fus.reserve(trial_fus2.size());
  for (double f2 : trial_fus2) result.trial_fus.push_back(std::sqrt(f2));
  return result;
}

} // namespace hetsample
