#include "cfgroup/compatibility.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cfgroup/error.hpp"
#include "cfgroup/parallel.hpp"

namespace cfgroup {

void validate_indices(const CorrespondenceSet& corrs, std::size_t src_size,
                      std::size_t tgt_size) {
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (corrs[i].src_index >= src_size || corrs[i].tgt_index >= tgt_size) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "correspondence " + std::to_string(i) + " (" +
                      std::to_string(corrs[i].src_index) + ", " +
                      std::to_string(corrs[i].tgt_index) + ") out of range for clouds of size " +
                      std::to_string(src_size) + " and " + std::to_string(tgt_size));
    }
  }
}

void validate_indices(const CorrespondenceSet& corrs, const PointCloud& src,
                      const PointCloud& tgt) {
  validate_indices(corrs, src.size(), tgt.size());
}

const char* to_string(ConstraintMode mode) noexcept {
  switch (mode) {
    case ConstraintMode::kBoth: return "both";
    case ConstraintMode::kDistance: return "distance";
    case ConstraintMode::kAngle: return "angle";
  }
  return "both";
}

ConstraintMode parse_constraint_mode(const std::string& text) {
  if (text == "both") return ConstraintMode::kBoth;
  if (text == "distance") return ConstraintMode::kDistance;
  if (text == "angle") return ConstraintMode::kAngle;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown constraint mode '" + text + "' (expected both, distance or angle)");
}

CompatParams CompatParams::defaults_for(Resolution source_pr) {
  CompatParams p;
  p.alpha_dist = kDefaultAlphaDistInPr * source_pr.pr;
  p.alpha_ang = kDefaultAlphaAng;
  return p;
}

void CompatParams::validate() const {
  if (!(alpha_dist > 0.0) || !std::isfinite(alpha_dist)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha_dist must be positive and finite");
  }
  if (!(alpha_ang > 0.0) || !std::isfinite(alpha_ang)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha_ang must be positive and finite");
  }
}

namespace {

void require_normals(const PointCloud& src, const PointCloud& tgt) {
  if (!src.has_normals() || !tgt.has_normals()) {
    throw Error(ErrorCode::kMissingNormals,
                "angle constraint needs normals on both clouds; run estimate_normals first");
  }
}

double clamped_acos(double dot) { return std::acos(std::clamp(dot, -1.0, 1.0)); }

}  // namespace

double dist_constraint(const Correspondence& ci, const Correspondence& cj, const PointCloud& src,
                       const PointCloud& tgt) {
  const double ds = (src.points[ci.src_index] - src.points[cj.src_index]).norm();
  const double dt = (tgt.points[ci.tgt_index] - tgt.points[cj.tgt_index]).norm();
  return std::abs(ds - dt);
}

double ang_constraint(const Correspondence& ci, const Correspondence& cj, const PointCloud& src,
                      const PointCloud& tgt) {
  require_normals(src, tgt);
  const double as = clamped_acos(src.normals[ci.src_index].dot(src.normals[cj.src_index]));
  const double at = clamped_acos(tgt.normals[ci.tgt_index].dot(tgt.normals[cj.tgt_index]));
  return std::abs(as - at);
}

double score_from_constraints(double s_dist, double s_ang, const CompatParams& params) {
  const double ad = params.alpha_dist;
  const double aa = params.alpha_ang;
  switch (params.mode) {
    case ConstraintMode::kDistance: return std::exp(-(s_dist * s_dist) / (2.0 * ad * ad));
    case ConstraintMode::kAngle: return std::exp(-(s_ang * s_ang) / (2.0 * aa * aa));
    case ConstraintMode::kBoth: break;
  }
  return std::exp(-(s_dist * s_dist) / (2.0 * ad * ad) - (s_ang * s_ang) / (2.0 * aa * aa));
}

double compat_score(const Correspondence& ci, const Correspondence& cj, const PointCloud& src,
                    const PointCloud& tgt, const CompatParams& params) {
  const double s_dist = params.uses_distance() ? dist_constraint(ci, cj, src, tgt) : 0.0;
  const double s_ang = params.uses_angle() ? ang_constraint(ci, cj, src, tgt) : 0.0;
  return score_from_constraints(s_dist, s_ang, params);
}

CompatibilityKernel::CompatibilityKernel(const CorrespondenceSet& corrs, const PointCloud& src,
                                         const PointCloud& tgt, const CompatParams& params)
    : size_(corrs.size()), params_(params) {
  params_.validate();
  validate_indices(corrs, src, tgt);
  if (params_.uses_angle()) require_normals(src, tgt);

  src_pts_.resize(3, static_cast<Eigen::Index>(size_));
  tgt_pts_.resize(3, static_cast<Eigen::Index>(size_));
  if (params_.uses_angle()) {
    src_nrm_.resize(3, static_cast<Eigen::Index>(size_));
    tgt_nrm_.resize(3, static_cast<Eigen::Index>(size_));
  }
  for (std::size_t i = 0; i < size_; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    src_pts_.col(col) = src.points[corrs[i].src_index];
    tgt_pts_.col(col) = tgt.points[corrs[i].tgt_index];
    if (params_.uses_angle()) {
      src_nrm_.col(col) = src.normals[corrs[i].src_index];
      tgt_nrm_.col(col) = tgt.normals[corrs[i].tgt_index];
    }
  }
}

double CompatibilityKernel::score(std::size_t i, std::size_t j) const {
  const auto a = static_cast<Eigen::Index>(i);
  const auto b = static_cast<Eigen::Index>(j);
  double s_dist = 0.0;
  double s_ang = 0.0;
  if (params_.uses_distance()) {
    const double ds = (src_pts_.col(a) - src_pts_.col(b)).norm();
    const double dt = (tgt_pts_.col(a) - tgt_pts_.col(b)).norm();
    s_dist = std::abs(ds - dt);
  }
  if (params_.uses_angle()) {
    const double as = clamped_acos(src_nrm_.col(a).dot(src_nrm_.col(b)));
    const double at = clamped_acos(tgt_nrm_.col(a).dot(tgt_nrm_.col(b)));
    s_ang = std::abs(as - at);
  }
  return score_from_constraints(s_dist, s_ang, params_);
}

void CompatibilityKernel::score_row(std::size_t i, std::span<double> out) const {
  for (std::size_t j = 0; j < size_; ++j) out[j] = score(i, j);
}

FeatureMatrix extract_cf(const CorrespondenceSet& corrs, const PointCloud& src,
                         const PointCloud& tgt, const CompatParams& params, std::size_t n_dim,
                         unsigned threads) {
  if (corrs.size() < 2) {
    throw Error(ErrorCode::kEmptySet, "CF extraction needs at least 2 correspondences, got " +
                                          std::to_string(corrs.size()));
  }
  if (n_dim < 1) throw Error(ErrorCode::kInvalidArgument, "CF dimensionality must be >= 1");

  const CompatibilityKernel kernel(corrs, src, tgt, params);
  const std::size_t d = corrs.size();
  const std::size_t keep = std::min(n_dim, d - 1);
  FeatureMatrix features = FeatureMatrix::Zero(static_cast<Eigen::Index>(d),
                                               static_cast<Eigen::Index>(n_dim));

  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(resolve_threads(threads), d));
  // One scratch row per worker block; parallel_for hands out contiguous blocks.
  const std::size_t block = (d + workers - 1) / workers;
  parallel_for(workers, workers, [&](std::size_t w) {
    std::vector<double> row(d);
    const std::size_t begin = w * block;
    const std::size_t end = std::min(d, begin + block);
    for (std::size_t i = begin; i < end; ++i) {
      kernel.score_row(i, row);
      // Drop the self score; duplicates of c elsewhere in the set stay.
      row[i] = row[d - 1];
      const auto first = row.begin();
      const auto last = row.begin() + static_cast<std::ptrdiff_t>(d - 1);
      const auto mid = first + static_cast<std::ptrdiff_t>(keep);
      std::partial_sort(first, mid, last, std::greater<>());
      for (std::size_t c = 0; c < keep; ++c) {
        features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
      }
    }
  });
  return features;
}

}  // namespace cfgroup
