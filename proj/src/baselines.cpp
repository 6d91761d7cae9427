#include "cfgroup/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "cfgroup/error.hpp"
#include "cfgroup/parallel.hpp"

namespace cfgroup {

std::size_t GroupingResult::kept_count() const {
  return static_cast<std::size_t>(std::count(kept.begin(), kept.end(), true));
}

GroupingResult group_ss(const CorrespondenceSet& corrs, double threshold) {
  GroupingResult result{Mask(corrs.size(), false), "ss", {{"threshold", threshold}}};
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (!corrs[i].similarity) {
      throw Error(ErrorCode::kMissingSimilarity,
                  "correspondence " + std::to_string(i) + " has no similarity score");
    }
    result.kept[i] = *corrs[i].similarity >= threshold;
  }
  return result;
}

GroupingResult group_nnsr(const CorrespondenceSet& corrs, double threshold) {
  GroupingResult result{Mask(corrs.size(), false), "nnsr", {{"threshold", threshold}}};
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (!corrs[i].ratio) {
      throw Error(ErrorCode::kMissingRatio,
                  "correspondence " + std::to_string(i) + " has no NNSR ratio");
    }
    result.kept[i] = *corrs[i].ratio < threshold;
  }
  return result;
}

GroupingResult group_gc(const CorrespondenceSet& corrs, const PointCloud& src,
                        const PointCloud& tgt, const CompatParams& params, double score_threshold,
                        unsigned threads) {
  if (corrs.size() < 2) {
    throw Error(ErrorCode::kEmptySet, "GC needs at least 2 correspondences");
  }
  const CompatibilityKernel kernel(corrs, src, tgt, params);
  const std::size_t d = corrs.size();
  std::vector<std::size_t> cluster_size(d, 0);
  parallel_for(d, threads, [&](std::size_t q) {
    std::size_t count = 1;
    for (std::size_t j = 0; j < d; ++j) {
      if (j != q && kernel.score(q, j) >= score_threshold) ++count;
    }
    cluster_size[q] = count;
  });
  // max_element returns the first maximum, i.e. the lowest query index.
  const auto best = static_cast<std::size_t>(
      std::max_element(cluster_size.begin(), cluster_size.end()) - cluster_size.begin());

  GroupingResult result{Mask(d, false), "gc",
                        {{"score_threshold", score_threshold},
                         {"alpha_dist", params.alpha_dist},
                         {"alpha_ang", params.alpha_ang},
                         {"query", static_cast<double>(best)}}};
  result.kept[best] = true;
  for (std::size_t j = 0; j < d; ++j) {
    if (j != best && kernel.score(best, j) >= score_threshold) result.kept[j] = true;
  }
  return result;
}

namespace {

struct Hypothesis {
  bool valid = false;
  std::size_t count = 0;
  RigidTransform transform;
};

std::size_t count_inliers(const CorrespondenceSet& corrs, const PointCloud& src,
                          const PointCloud& tgt, const RigidTransform& t, double inlier_dist,
                          Mask* mask) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const bool in =
        (t.apply(src.points[corrs[i].src_index]) - tgt.points[corrs[i].tgt_index]).norm() <
        inlier_dist;
    if (mask) (*mask)[i] = in;
    count += in ? 1 : 0;
  }
  return count;
}

}  // namespace

RansacResult group_ransac(const CorrespondenceSet& corrs, const PointCloud& src,
                          const PointCloud& tgt, const RansacParams& params) {
  if (corrs.size() < 3) {
    throw Error(ErrorCode::kEmptySet, "RANSAC needs at least 3 correspondences");
  }
  if (params.iterations < 1) throw Error(ErrorCode::kInvalidArgument, "iterations must be >= 1");
  if (!(params.inlier_dist > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "RANSAC inlier distance must be > 0");
  }
  validate_indices(corrs, src, tgt);

  const std::size_t d = corrs.size();
  std::vector<Hypothesis> hypotheses(params.iterations);
  parallel_for(params.iterations, params.threads, [&](std::size_t it) {
    std::seed_seq seq{static_cast<std::uint32_t>(params.seed),
                      static_cast<std::uint32_t>(params.seed >> 32),
                      static_cast<std::uint32_t>(it), static_cast<std::uint32_t>(it >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick(0, d - 1);
    std::size_t sample[3];
    sample[0] = pick(rng);
    do sample[1] = pick(rng); while (sample[1] == sample[0]);
    do sample[2] = pick(rng); while (sample[2] == sample[0] || sample[2] == sample[1]);

    std::vector<Eigen::Vector3d> a, b;
    for (std::size_t s : sample) {
      a.push_back(src.points[corrs[s].src_index]);
      b.push_back(tgt.points[corrs[s].tgt_index]);
    }
    Hypothesis& h = hypotheses[it];
    try {
      h.transform = estimate_rigid_transform(a, b);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateConfiguration) throw;
      return;
    }
    h.valid = true;
    h.count = count_inliers(corrs, src, tgt, h.transform, params.inlier_dist, nullptr);
  });

  RansacResult result;
  std::optional<std::size_t> best;
  for (std::size_t it = 0; it < hypotheses.size(); ++it) {
    if (!hypotheses[it].valid) {
      ++result.degenerate_iterations;
      continue;
    }
    if (!best || hypotheses[it].count > hypotheses[*best].count) best = it;
  }
  if (!best) {
    throw Error(ErrorCode::kEstimationFailed,
                "all " + std::to_string(params.iterations) + " RANSAC samples were degenerate");
  }

  result.best_iteration = *best;
  result.best_count = hypotheses[*best].count;
  result.transform = hypotheses[*best].transform;
  result.grouping = GroupingResult{Mask(d, false), "ransac",
                                   {{"iterations", static_cast<double>(params.iterations)},
                                    {"inlier_dist", params.inlier_dist},
                                    {"seed", static_cast<double>(params.seed)}}};
  count_inliers(corrs, src, tgt, result.transform, params.inlier_dist, &result.grouping.kept);

  std::vector<Eigen::Vector3d> a, b;
  for (std::size_t i = 0; i < d; ++i) {
    if (!result.grouping.kept[i]) continue;
    a.push_back(src.points[corrs[i].src_index]);
    b.push_back(tgt.points[corrs[i].tgt_index]);
  }
  try {
    result.transform = estimate_rigid_transform(a, b);
  } catch (const Error& e) {
    // Too few or collinear kept points: keep the sample's transform.
    if (e.code() != ErrorCode::kDegenerateConfiguration) throw;
  }
  return result;
}

}  // namespace cfgroup
