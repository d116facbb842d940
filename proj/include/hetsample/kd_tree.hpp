#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hetsample {

/// Squared Euclidean distance, summed in coordinate order. Both the tree and
/// the brute-force paths use this so that their results compare bitwise.
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

struct Neighbor {
  std::size_t index = 0; // caller's row index
  double squared_distance = 0.0;
};

/// Exact nearest-neighbour search over a static point set.
///
/// Among points at equal distance the one with the lowest caller index wins,
/// which makes results identical to a linear scan that keeps the first
/// minimum.
class KdTree {
public:
  /// `points` is row-major with `dims` columns; `ids` gives the caller's
  /// index for each row (defaults to 0..n-1).
  KdTree(std::vector<double> points, std::size_t dims, std::vector<std::size_t> ids = {});

  std::size_t size() const { return ids_.size(); }
  std::size_t dims() const { return dims_; }

  Neighbor nearest(std::span<const double> query) const;

private:
  struct Node {
    std::size_t begin = 0, end = 0; // leaf range into order_
    std::size_t axis = 0;
    double split = 0.0;
    int left = -1, right = -1;
  };

  int build(std::size_t begin, std::size_t end);
  void search(int node, std::span<const double> query, Neighbor& best, bool& found) const;

  std::span<const double> row(std::size_t slot) const {
    return {points_.data() + slot * dims_, dims_};
  }

  std::vector<double> points_;
  std::size_t dims_;
  std::vector<std::size_t> ids_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

/// Linear-scan reference for KdTree::nearest.
Neighbor brute_force_nearest(std::span<const double> points, std::size_t dims,
                             std::span<const std::size_t> ids, std::span<const double> query);

} // namespace hetsample
