#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Core>

#include "cfgroup/correspondence.hpp"
#include "cfgroup/geometry.hpp"

namespace cfgroup {

enum class SynthShape { kSphere, kPlaneUnion, kRandomBlob, kGrid };

const char* to_string(SynthShape shape) noexcept;
SynthShape parse_synth_shape(const std::string& text);

/// Descriptor-score model for synthesized correspondences: similarity and
/// NNSR ratio are drawn from per-class Gaussians and clamped.
struct ScoreModel {
  double inlier_similarity_mean = 0.60;
  double outlier_similarity_mean = 0.45;
  double similarity_sigma = 0.15;
  double inlier_ratio_mean = 0.75;
  double outlier_ratio_mean = 0.88;
  double ratio_sigma = 0.10;
};

struct SynthConfig {
  std::size_t n_points = 10000;
  SynthShape shape = SynthShape::kRandomBlob;
  std::size_t n_corrs = 500;
  double inlier_ratio = 0.1;
  /// Target noise standard deviation; in world units unless noise_in_pr.
  double noise_sigma = 0.0;
  bool noise_in_pr = false;
  /// Fixed XYZ Euler angles in radians; a uniform random rotation when unset.
  std::optional<Eigen::Vector3d> rotation_euler;
  double translation_range = 1.0;
  std::size_t normal_k = kDefaultNormalNeighbors;
  double outlier_min_residual_pr = 5.0;
  ScoreModel scores;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Source/target clouds with ground truth. `pr` is the source resolution.
struct ScenePair {
  PointCloud src;
  PointCloud tgt;
  CorrespondenceSet corrs;
  RigidTransform gt;
  Resolution pr;
};

/// Uniform rotation from a normalized Gaussian quaternion.
Eigen::Matrix3d random_rotation(std::mt19937_64& rng);
RigidTransform random_rigid_transform(std::mt19937_64& rng, double translation_range);

/// Samples the source shape, moves it by a random ground-truth motion, adds
/// Gaussian noise to the target only and estimates normals on both clouds.
/// Inliers pair a source point with its own image; outliers pair random
/// indices whose ground-truth residual is at least 5 pr (rejection sampled).
/// gt_label on each correspondence is the residual test at 5 pr.
ScenePair synthesize(const SynthConfig& config);

}  // namespace cfgroup
