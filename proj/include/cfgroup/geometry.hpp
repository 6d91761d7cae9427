#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace cfgroup {

/// Positions plus optional unit normals. `normals` is either empty or the same
/// length as `points`.
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }
};

/// Rigid motion in column convention: x -> rotation * x + translation.
///
/// A row-vector formula of the form `p R + t` corresponds to this type with
/// `rotation = R^T`.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  /// Validates orthonormality and det(R) = +1 within `tol` (elementwise).
  static RigidTransform from_matrix(const Eigen::Matrix4d& m, double tol = 1e-9);

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;
  Eigen::Matrix4d matrix() const;
  bool is_rigid(double tol = 1e-9) const;
};

/// Composition: (a * b).apply(x) == a.apply(b.apply(x)).
RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

/// Point cloud resolution: mean nearest-neighbour distance, in world units.
struct Resolution {
  double pr = 0.0;
};

inline constexpr std::size_t kDefaultNormalNeighbors = 10;

/// PCA normals from each point plus its k nearest neighbours. Signs are
/// oriented away from the cloud centroid; a dot product of exactly zero keeps
/// the eigenvector as computed.
PointCloud estimate_normals(const PointCloud& cloud, std::size_t k = kDefaultNormalNeighbors,
                            unsigned threads = 1);

Resolution cloud_resolution(const PointCloud& cloud, unsigned threads = 1);

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t);

/// Least-squares rigid fit minimising sum |R src_i + t - tgt_i|^2 (SVD of the
/// cross-covariance with reflection correction).
RigidTransform estimate_rigid_transform(std::span<const Eigen::Vector3d> src,
                                        std::span<const Eigen::Vector3d> tgt);

double rms_residual(std::span<const Eigen::Vector3d> src, std::span<const Eigen::Vector3d> tgt,
                    const RigidTransform& t);

}  // namespace cfgroup
