#include "cfgroup/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Geometry>

#include "cfgroup/error.hpp"
#include "cfgroup/evaluation.hpp"

namespace cfgroup {

const char* to_string(SynthShape shape) noexcept {
  switch (shape) {
    case SynthShape::kSphere: return "sphere";
    case SynthShape::kPlaneUnion: return "plane_union";
    case SynthShape::kRandomBlob: return "random_blob";
    case SynthShape::kGrid: return "grid";
  }
  return "random_blob";
}

SynthShape parse_synth_shape(const std::string& text) {
  if (text == "sphere") return SynthShape::kSphere;
  if (text == "plane_union") return SynthShape::kPlaneUnion;
  if (text == "random_blob") return SynthShape::kRandomBlob;
  if (text == "grid") return SynthShape::kGrid;
  throw Error(ErrorCode::kInvalidArgument, "unknown shape '" + text + "'");
}

void SynthConfig::validate() const {
  if (!(inlier_ratio > 0.0 && inlier_ratio <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "inlier_ratio must be in (0, 1]");
  }
  if (n_corrs < 2) throw Error(ErrorCode::kInvalidArgument, "n_corrs must be >= 2");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise_sigma must be >= 0");
  if (!(translation_range >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "translation_range must be >= 0");
  }
  if (n_points < normal_k + 1) {
    throw Error(ErrorCode::kTooFewPoints, "n_points must exceed the normal neighbourhood size");
  }
  const auto n_in = static_cast<std::size_t>(std::llround(inlier_ratio * static_cast<double>(n_corrs)));
  if (n_in > n_points) {
    throw Error(ErrorCode::kInvalidArgument, "more inlier correspondences than source points");
  }
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Quaterniond q;
  double norm = 0.0;
  do {
    q = Eigen::Quaterniond(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    norm = q.norm();
  } while (norm < 1e-12);
  q.coeffs() /= norm;
  return q.toRotationMatrix();
}

RigidTransform random_rigid_transform(std::mt19937_64& rng, double translation_range) {
  RigidTransform t;
  t.rotation = random_rotation(rng);
  std::uniform_real_distribution<double> shift(-translation_range, translation_range);
  for (int k = 0; k < 3; ++k) t.translation[k] = translation_range > 0.0 ? shift(rng) : 0.0;
  return t;
}

namespace {

Eigen::Vector3d unit_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector3d v;
  do v = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
  while (v.norm() < 1e-12);
  return v.normalized();
}

std::vector<Eigen::Vector3d> sample_shape(const SynthConfig& config, std::mt19937_64& rng) {
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(config.n_points);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (config.shape) {
    case SynthShape::kSphere:
      for (std::size_t i = 0; i < config.n_points; ++i) pts.push_back(unit_direction(rng));
      break;
    case SynthShape::kRandomBlob: {
      // Radius modulated by a few random plane waves over the direction.
      struct Wave { Eigen::Vector3d freq; double amp; double phase; };
      std::vector<Wave> waves;
      for (int k = 0; k < 4; ++k) {
        waves.push_back({unit_direction(rng) * (1.5 + 2.0 * unit(rng)), 0.05 + 0.1 * unit(rng),
                         2.0 * std::numbers::pi * unit(rng)});
      }
      const Eigen::Vector3d stretch(1.3, 1.0, 0.8);
      for (std::size_t i = 0; i < config.n_points; ++i) {
        const Eigen::Vector3d dir = unit_direction(rng);
        double r = 1.0;
        for (const auto& w : waves) r += w.amp * std::sin(w.freq.dot(dir) + w.phase);
        pts.push_back((r * dir).cwiseProduct(stretch));
      }
      break;
    }
    case SynthShape::kPlaneUnion: {
      // Three mutually orthogonal rectangles of different extent sharing a corner.
      const Eigen::Vector3d extent(2.0, 1.5, 1.0);
      const double areas[3] = {extent.y() * extent.z(), extent.x() * extent.z(),
                               extent.x() * extent.y()};
      const double total = areas[0] + areas[1] + areas[2];
      for (std::size_t i = 0; i < config.n_points; ++i) {
        const double pick = unit(rng) * total;
        const int face = pick < areas[0] ? 0 : pick < areas[0] + areas[1] ? 1 : 2;
        Eigen::Vector3d p(unit(rng) * extent.x(), unit(rng) * extent.y(), unit(rng) * extent.z());
        p[face] = 0.0;
        pts.push_back(p);
      }
      break;
    }
    case SynthShape::kGrid: {
      const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(config.n_points))));
      const double step = 2.0 / static_cast<double>(side);
      for (std::size_t i = 0; i < config.n_points; ++i) {
        const double x = -1.0 + step * static_cast<double>(i % side);
        const double y = -1.0 + step * static_cast<double>(i / side);
        pts.emplace_back(x, y, 0.2 * std::sin(2.0 * x) * std::cos(1.5 * y));
      }
      break;
    }
  }
  return pts;
}

double clamped_gauss(std::mt19937_64& rng, double mean, double sigma, double lo, double hi) {
  std::normal_distribution<double> gauss(mean, sigma);
  return std::clamp(gauss(rng), lo, hi);
}

}  // namespace

ScenePair synthesize(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);

  ScenePair scene;
  scene.src.points = sample_shape(config, rng);
  scene.pr = cloud_resolution(scene.src);

  if (config.rotation_euler) {
    const Eigen::Vector3d& e = *config.rotation_euler;
    scene.gt.rotation = (Eigen::AngleAxisd(e.z(), Eigen::Vector3d::UnitZ()) *
                         Eigen::AngleAxisd(e.y(), Eigen::Vector3d::UnitY()) *
                         Eigen::AngleAxisd(e.x(), Eigen::Vector3d::UnitX()))
                            .toRotationMatrix();
    std::uniform_real_distribution<double> shift(-config.translation_range,
                                                 config.translation_range);
    for (int k = 0; k < 3; ++k) {
      scene.gt.translation[k] = config.translation_range > 0.0 ? shift(rng) : 0.0;
    }
  } else {
    scene.gt = random_rigid_transform(rng, config.translation_range);
  }

  const double sigma = config.noise_in_pr ? config.noise_sigma * scene.pr.pr : config.noise_sigma;
  std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
  scene.tgt.points.reserve(config.n_points);
  for (const auto& p : scene.src.points) {
    Eigen::Vector3d q = scene.gt.apply(p);
    if (sigma > 0.0) q += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
    scene.tgt.points.push_back(q);
  }
  scene.src = estimate_normals(scene.src, config.normal_k);
  scene.tgt = estimate_normals(scene.tgt, config.normal_k);

  const auto n_in =
      static_cast<std::size_t>(std::llround(config.inlier_ratio * static_cast<double>(config.n_corrs)));
  std::vector<std::size_t> indices(config.n_points);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  std::shuffle(indices.begin(), indices.end(), rng);

  scene.corrs.reserve(config.n_corrs);
  for (std::size_t i = 0; i < n_in; ++i) {
    Correspondence c;
    c.src_index = indices[i];
    c.tgt_index = indices[i];
    c.similarity = clamped_gauss(rng, config.scores.inlier_similarity_mean,
                                 config.scores.similarity_sigma, 0.0, 1.0);
    c.ratio = clamped_gauss(rng, config.scores.inlier_ratio_mean, config.scores.ratio_sigma, 0.05, 1.0);
    scene.corrs.push_back(c);
  }

  const double min_residual = config.outlier_min_residual_pr * scene.pr.pr;
  std::uniform_int_distribution<std::size_t> pick(0, config.n_points - 1);
  constexpr std::size_t kMaxAttempts = 1000;
  for (std::size_t i = n_in; i < config.n_corrs; ++i) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const std::size_t s = pick(rng);
      const std::size_t t = pick(rng);
      if (s == t) continue;
      const double residual = (scene.gt.apply(scene.src.points[s]) - scene.tgt.points[t]).norm();
      if (residual < min_residual) continue;
      Correspondence c;
      c.src_index = s;
      c.tgt_index = t;
      c.similarity = clamped_gauss(rng, config.scores.outlier_similarity_mean,
                                   config.scores.similarity_sigma, 0.0, 1.0);
      c.ratio = clamped_gauss(rng, config.scores.outlier_ratio_mean, config.scores.ratio_sigma,
                              0.05, 1.0);
      scene.corrs.push_back(c);
      placed = true;
    }
    if (!placed) {
      throw Error(ErrorCode::kSamplingFailed,
                  "could not place an outlier with residual >= " +
                      std::to_string(config.outlier_min_residual_pr) + " pr after " +
                      std::to_string(kMaxAttempts) + " attempts; cloud too small");
    }
  }
  std::shuffle(scene.corrs.begin(), scene.corrs.end(), rng);

  const Mask labels = label_inliers(scene.corrs, scene.src, scene.tgt, scene.gt, scene.pr);
  for (std::size_t i = 0; i < scene.corrs.size(); ++i) scene.corrs[i].gt_label = labels[i];
  return scene;
}

}  // namespace cfgroup
