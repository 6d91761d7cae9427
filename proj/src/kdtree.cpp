#include "cfgroup/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace cfgroup {
namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.sq_dist < b.sq_dist || (a.sq_dist == b.sq_dist && a.index < b.index);
}

}  // namespace

KdTree::KdTree(std::span<const Eigen::Vector3d> points, std::size_t leaf_size)
    : points_(points), leaf_size_(std::max<std::size_t>(leaf_size, 1)), order_(points.size()) {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  nodes_.reserve(2 * (points.size() / leaf_size_ + 1));
  root_ = build(0, order_.size());
}

std::size_t KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back(Node{begin, end});
  if (end - begin <= leaf_size_) return id;

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (std::size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int dim = 0;
  (hi - lo).maxCoeff(&dim);

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     const double va = points_[a][dim];
                     const double vb = points_[b][dim];
                     return va < vb || (va == vb && a < b);
                   });
  const double split = points_[order_[mid]][dim];
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  Node& node = nodes_[id];
  node.split_dim = dim;
  node.split_value = split;
  node.left = left;
  node.right = right;
  return id;
}

void KdTree::search(std::size_t node_id, const Eigen::Vector3d& query, std::size_t k,
                    std::size_t exclude, std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.split_dim < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      if (idx == exclude) continue;
      const Neighbor cand{idx, (points_[idx] - query).squaredNorm()};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  const double delta = query[node.split_dim] - node.split_value;
  const std::size_t near = delta < 0.0 ? node.left : node.right;
  const std::size_t far = delta < 0.0 ? node.right : node.left;
  search(near, query, k, exclude, heap);
  // Equal-distance candidates may sit on the far side, so prune only strictly.
  if (heap.size() < k || delta * delta <= heap.front().sq_dist) {
    search(far, query, k, exclude, heap);
  }
}

std::vector<Neighbor> KdTree::knn(const Eigen::Vector3d& query, std::size_t k,
                                  std::size_t exclude) const {
  std::vector<Neighbor> heap;
  if (k == 0 || points_.empty()) return heap;
  heap.reserve(k + 1);
  search(root_, query, k, exclude, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

Neighbor KdTree::nearest_other(std::size_t index) const {
  auto result = knn(points_[index], 1, index);
  if (result.empty()) return Neighbor{index, std::numeric_limits<double>::infinity()};
  return result.front();
}

}  // namespace cfgroup
