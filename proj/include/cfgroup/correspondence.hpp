#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace cfgroup {

struct PointCloud;

/// A putative match between one source point and one target point.
struct Correspondence {
  std::size_t src_index = 0;
  std::size_t tgt_index = 0;
  std::optional<double> similarity;  // descriptor similarity, higher is better
  std::optional<double> ratio;       // nearest / second-nearest descriptor distance
  std::optional<bool> gt_label;      // true for inliers

  bool operator==(const Correspondence&) const = default;
};

using CorrespondenceSet = std::vector<Correspondence>;

/// Throws kIndexOutOfRange naming the first offending correspondence.
void validate_indices(const CorrespondenceSet& corrs, std::size_t src_size,
                      std::size_t tgt_size);
void validate_indices(const CorrespondenceSet& corrs, const PointCloud& src,
                      const PointCloud& tgt);

}  // namespace cfgroup
