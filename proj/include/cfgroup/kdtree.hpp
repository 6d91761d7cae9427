#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace cfgroup {

struct Neighbor {
  std::size_t index;
  double sq_dist;
};

/// Static 3D k-d tree over a borrowed point array. The points must outlive the
/// tree and must not be modified while it is in use. Queries are const and
/// safe to run concurrently.
class KdTree {
 public:
  static constexpr std::size_t kNoExclude = std::numeric_limits<std::size_t>::max();

  explicit KdTree(std::span<const Eigen::Vector3d> points, std::size_t leaf_size = 12);

  /// The k nearest points to `query`, ascending by (distance, index). The point
  /// with index `exclude` is skipped.
  std::vector<Neighbor> knn(const Eigen::Vector3d& query, std::size_t k,
                            std::size_t exclude = kNoExclude) const;

  /// Nearest point other than points[index].
  Neighbor nearest_other(std::size_t index) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    // Leaves use [begin, end) into order_; inner nodes use split_dim/left/right.
    std::size_t begin = 0;
    std::size_t end = 0;
    int split_dim = -1;
    double split_value = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  void search(std::size_t node, const Eigen::Vector3d& query, std::size_t k,
              std::size_t exclude, std::vector<Neighbor>& heap) const;

  std::span<const Eigen::Vector3d> points_;
  std::size_t leaf_size_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::size_t root_ = 0;
};

}  // namespace cfgroup
