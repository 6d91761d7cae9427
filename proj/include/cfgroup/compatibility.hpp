#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <string>

#include <Eigen/Core>

#include "cfgroup/correspondence.hpp"
#include "cfgroup/geometry.hpp"

namespace cfgroup {

enum class ConstraintMode { kBoth, kDistance, kAngle };

const char* to_string(ConstraintMode mode) noexcept;
ConstraintMode parse_constraint_mode(const std::string& text);

inline constexpr double kDefaultAlphaDistInPr = 10.0;
inline constexpr double kDefaultAlphaAng = 15.0 * std::numbers::pi / 180.0;
inline constexpr std::size_t kDefaultCfDim = 50;

/// Gaussian bandwidths of the compatibility kernel.
struct CompatParams {
  double alpha_dist = 1.0;  // world units
  double alpha_ang = kDefaultAlphaAng;  // radians
  ConstraintMode mode = ConstraintMode::kBoth;

  /// alpha_dist = 10 pr of the source cloud, alpha_ang = 15 degrees.
  static CompatParams defaults_for(Resolution source_pr);

  bool uses_angle() const { return mode != ConstraintMode::kDistance; }
  bool uses_distance() const { return mode != ConstraintMode::kAngle; }
  void validate() const;
};

/// Rows are CF features (one per correspondence, input order); columns are the
/// N top-ranked scores, non-increasing.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// | |ps_i - ps_j| - |pt_i - pt_j| |
double dist_constraint(const Correspondence& ci, const Correspondence& cj, const PointCloud& src,
                       const PointCloud& tgt);

/// | acos(ns_i . ns_j) - acos(nt_i . nt_j) |, dot products clamped to [-1, 1].
double ang_constraint(const Correspondence& ci, const Correspondence& cj, const PointCloud& src,
                      const PointCloud& tgt);

/// exp(-s_dist^2 / (2 alpha_dist^2) - s_ang^2 / (2 alpha_ang^2)), with the
/// disabled term dropped in single-constraint modes.
double compat_score(const Correspondence& ci, const Correspondence& cj, const PointCloud& src,
                    const PointCloud& tgt, const CompatParams& params);

double score_from_constraints(double s_dist, double s_ang, const CompatParams& params);

/// Pairwise scoring against a fixed correspondence set. Gathers the endpoint
/// coordinates and normals once so the O(D^2) loops stay in contiguous memory.
class CompatibilityKernel {
 public:
  CompatibilityKernel(const CorrespondenceSet& corrs, const PointCloud& src,
                      const PointCloud& tgt, const CompatParams& params);

  std::size_t size() const { return size_; }
  double score(std::size_t i, std::size_t j) const;

  /// Scores of correspondence i against every j (self included) into `out`.
  void score_row(std::size_t i, std::span<double> out) const;

 private:
  std::size_t size_;
  CompatParams params_;
  Eigen::Matrix3Xd src_pts_, tgt_pts_, src_nrm_, tgt_nrm_;
};

/// Compatibility features: for each correspondence, its scores against the
/// other D-1 correspondences sorted descending, truncated to n_dim and padded
/// with 0.0 when D-1 < n_dim.
FeatureMatrix extract_cf(const CorrespondenceSet& corrs, const PointCloud& src,
                         const PointCloud& tgt, const CompatParams& params,
                         std::size_t n_dim = kDefaultCfDim, unsigned threads = 1);

}  // namespace cfgroup
