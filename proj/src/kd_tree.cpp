#include "hetsample/kd_tree.hpp"

#include <algorithm>
#include <numeric>

#include "hetsample/error.hpp"

namespace hetsample {

namespace {
constexpr std::size_t kLeafSize = 8;
}

KdTree::KdTree(std::vector<double> points, std::size_t dims, std::vector<std::size_t> ids)
    : points_(std::move(points)), dims_(dims), ids_(std::move(ids)) {
  if (dims_ == 0) throw Error("kd-tree: zero dimensions");
  if (points_.size() % dims_ != 0) throw Error("kd-tree: storage is not a multiple of dims");
  const std::size_t n = points_.size() / dims_;
  if (ids_.empty()) {
    ids_.resize(n);
    std::iota(ids_.begin(), ids_.end(), std::size_t{0});
  }
  if (ids_.size() != n) throw Error("kd-tree: id count does not match point count");
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (n > 0) {
    nodes_.reserve(2 * n / kLeafSize + 1);
    build(0, n);
  }
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  // split on the axis of largest spread
  std::size_t axis = 0;
  double widest = -1.0;
  for (std::size_t a = 0; a < dims_; ++a) {
    double lo = points_[order_[begin] * dims_ + a], hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      const double v = points_[order_[i] * dims_ + a];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      axis = a;
    }
  }
  if (widest <= 0.0) return id; // all coincident: keep as a leaf

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     return points_[a * dims_ + axis] < points_[b * dims_ + axis];
                   });
  const double split = points_[order_[mid] * dims_ + axis];
  // left holds values <= split, right holds values >= split
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::search(int node_id, std::span<const double> query, Neighbor& best, bool& found) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.left < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t slot = order_[i];
      const double d2 = squared_distance(query, row(slot));
      const std::size_t id = ids_[slot];
      if (!found || d2 < best.squared_distance ||
          (d2 == best.squared_distance && id < best.index)) {
        best = {id, d2};
        found = true;
      }
    }
    return;
  }
  const double diff = query[node.axis] - node.split;
  const int near = diff <= 0.0 ? node.left : node.right;
  const int far = diff <= 0.0 ? node.right : node.left;
  search(near, query, best, found);
  // Equal bounds must still be visited: the far side may hold a tie with a
  // lower index.
  if (!found || diff * diff <= best.squared_distance) search(far, query, best, found);
}

Neighbor KdTree::nearest(std::span<const double> query) const {
  if (ids_.empty()) throw Error("kd-tree: nearest query on an empty tree");
  if (query.size() != dims_) throw Error("kd-tree: query dimension mismatch");
  Neighbor best;
  bool found = false;
  search(0, query, best, found);
  return best;
}

Neighbor brute_force_nearest(std::span<const double> points, std::size_t dims,
                             std::span<const std::size_t> ids, std::span<const double> query) {
  Neighbor best;
  bool found = false;
  const std::size_t n = points.size() / dims;
  for (std::size_t i = 0; i < n; ++i) {
    const double d2 = squared_distance(query, points.subspan(i * dims, dims));
    const std::size_t id = ids.empty() ? i : ids[i];
    if (!found || d2 < best.squared_distance || (d2 == best.squared_distance && id < best.index)) {
      best = {id, d2};
      found = true;
    }
  }
  if (!found) throw Error("brute_force_nearest: empty point set");
  return best;
}

} // namespace hetsample
