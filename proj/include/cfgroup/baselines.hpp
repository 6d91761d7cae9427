#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cfgroup/compatibility.hpp"
#include "cfgroup/correspondence.hpp"
#include "cfgroup/geometry.hpp"

namespace cfgroup {

using Mask = std::vector<bool>;

/// Kept/rejected decision for every input correspondence.
struct GroupingResult {
  Mask kept;
  std::string method;
  std::map<std::string, double> params;

  std::size_t kept_count() const;
};

/// Similarity score: keep when similarity >= threshold.
GroupingResult group_ss(const CorrespondenceSet& corrs, double threshold);

/// Nearest-neighbour similarity ratio: keep when ratio < threshold.
GroupingResult group_nnsr(const CorrespondenceSet& corrs, double threshold);

inline constexpr double kDefaultGcThreshold = 0.9;

/// Geometric consistency: the largest set {c : S(q, c) >= threshold} + {q}
/// over all queries q; ties go to the lowest query index.
GroupingResult group_gc(const CorrespondenceSet& corrs, const PointCloud& src,
                        const PointCloud& tgt, const CompatParams& params,
                        double score_threshold = kDefaultGcThreshold, unsigned threads = 1);

struct RansacParams {
  std::size_t iterations = 1000;
  double inlier_dist = 0.0;  // world units; usually 5 pr
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct RansacResult {
  GroupingResult grouping;
  RigidTransform transform;
  std::size_t best_count = 0;
  std::size_t best_iteration = 0;
  std::size_t degenerate_iterations = 0;
};

/// Three-point RANSAC over correspondences. Iteration i draws its sample from
/// its own RNG stream seeded by (seed, i), so a run with more iterations
/// extends rather than reshuffles a shorter one.
RansacResult group_ransac(const CorrespondenceSet& corrs, const PointCloud& src,
                          const PointCloud& tgt, const RansacParams& params);

}  // namespace cfgroup
