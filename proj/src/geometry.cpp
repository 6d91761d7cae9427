#include "cfgroup/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cfgroup/error.hpp"
#include "cfgroup/kdtree.hpp"
#include "cfgroup/parallel.hpp"

namespace cfgroup {

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m, double tol) {
  RigidTransform t;
  t.rotation = m.topLeftCorner<3, 3>();
  t.translation = m.topRightCorner<3, 1>();
  const Eigen::RowVector4d last = m.row(3);
  if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > tol || !t.is_rigid(tol)) {
    throw Error(ErrorCode::kNonRigidMatrix,
                "matrix is not a proper rigid transform (orthonormality/det/last-row check, tol " +
                    std::to_string(tol) + ")");
  }
  return t;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

bool RigidTransform::is_rigid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform c;
  c.rotation = a.rotation * b.rotation;
  c.translation = a.rotation * b.translation + a.translation;
  return c;
}

PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, unsigned threads) {
  if (k < 3) {
    throw Error(ErrorCode::kInvalidArgument, "normal estimation needs k >= 3, got " +
                                                 std::to_string(k));
  }
  if (cloud.size() < k + 1) {
    throw Error(ErrorCode::kTooFewPoints, "normal estimation with k=" + std::to_string(k) +
                                              " needs at least " + std::to_string(k + 1) +
                                              " points, cloud has " + std::to_string(cloud.size()));
  }

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : cloud.points) centroid += p;
  centroid /= static_cast<double>(cloud.size());

  const KdTree tree(cloud.points);
  PointCloud out;
  out.points = cloud.points;
  out.normals.resize(cloud.size());

  parallel_for(cloud.size(), threads, [&](std::size_t i) {
    const auto neighbors = tree.knn(cloud.points[i], k, i);
    Eigen::Vector3d mean = cloud.points[i];
    for (const auto& n : neighbors) mean += cloud.points[n.index];
    mean /= static_cast<double>(neighbors.size() + 1);

    Eigen::Matrix3d cov = (cloud.points[i] - mean) * (cloud.points[i] - mean).transpose();
    for (const auto& n : neighbors) {
      const Eigen::Vector3d d = cloud.points[n.index] - mean;
      cov += d * d.transpose();
    }
    // Eigenvalues come back in increasing order.
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    Eigen::Vector3d normal = solver.eigenvectors().col(0).normalized();
    if (normal.dot(cloud.points[i] - centroid) < 0.0) normal = -normal;
    out.normals[i] = normal;
  });
  return out;
}

Resolution cloud_resolution(const PointCloud& cloud, unsigned threads) {
  if (cloud.size() < 2) {
    throw Error(ErrorCode::kTooFewPoints,
                "cloud resolution needs at least 2 points, cloud has " +
                    std::to_string(cloud.size()));
  }
  const KdTree tree(cloud.points);
  std::vector<double> nearest(cloud.size());
  parallel_for(cloud.size(), threads, [&](std::size_t i) {
    nearest[i] = std::sqrt(tree.nearest_other(i).sq_dist);
  });
  double sum = 0.0;
  for (double d : nearest) sum += d;
  return Resolution{sum / static_cast<double>(cloud.size())};
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t) {
  if (t.rotation == Eigen::Matrix3d::Identity() && t.translation == Eigen::Vector3d::Zero()) {
    return cloud;
  }
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(t.apply(p));
  out.normals.reserve(cloud.normals.size());
  for (const auto& n : cloud.normals) out.normals.push_back(t.rotation * n);
  return out;
}

RigidTransform estimate_rigid_transform(std::span<const Eigen::Vector3d> src,
                                        std::span<const Eigen::Vector3d> tgt) {
  if (src.size() != tgt.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "source and target point lists differ in length (" + std::to_string(src.size()) +
                    " vs " + std::to_string(tgt.size()) + ")");
  }
  if (src.size() < 3) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                "rigid fit needs at least 3 point pairs, got " + std::to_string(src.size()));
  }
  const double n = static_cast<double>(src.size());
  Eigen::Vector3d src_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d tgt_mean = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    src_mean += src[i];
    tgt_mean += tgt[i];
  }
  src_mean /= n;
  tgt_mean /= n;

  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Eigen::Vector3d a = src[i] - src_mean;
    const Eigen::Vector3d b = tgt[i] - tgt_mean;
    scatter += a * a.transpose();
    cross += a * b.transpose();
  }

  constexpr double kRankTol = 1e-12;
  const Eigen::Vector3d spread = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(
                                     scatter, Eigen::EigenvaluesOnly)
                                     .eigenvalues();
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(spread(2) > 0.0) || spread(1) <= kRankTol * spread(2) || !(sv(0) > 0.0) ||
      sv(1) <= kRankTol * sv(0)) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                "point pairs are collinear or coincident (covariance rank < 2)");
  }

  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((v * u.transpose()).determinant() < 0.0) d(2, 2) = -1.0;

  RigidTransform t;
  t.rotation = v * d * u.transpose();
  t.translation = tgt_mean - t.rotation * src_mean;
  return t;
}

double rms_residual(std::span<const Eigen::Vector3d> src, std::span<const Eigen::Vector3d> tgt,
                    const RigidTransform& t) {
  if (src.size() != tgt.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "residual needs equal-length point lists");
  }
  if (src.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) sum += (t.apply(src[i]) - tgt[i]).squaredNorm();
  return std::sqrt(sum / static_cast<double>(src.size()));
}

}  // namespace cfgroup
