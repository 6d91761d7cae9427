#include <gtest/gtest.h>

#include <limits>
#include <numeric>
#include <random>

#include "cfgroup/baselines.hpp"
#include "cfgroup/error.hpp"
#include "cfgroup/evaluation.hpp"
#include "../test_support.hpp"

using namespace cfgroup;
using cfgroup::testing::exact_scene;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no cfgroup::Error thrown";
  return ErrorCode::kInvalidArgument;
}

CorrespondenceSet scored(std::initializer_list<double> sims, std::initializer_list<double> ratios) {
  CorrespondenceSet out;
  auto s = sims.begin();
  auto r = ratios.begin();
  for (std::size_t i = 0; i < sims.size(); ++i) out.push_back({i, i, *s++, *r++, std::nullopt});
  return out;
}

}  // namespace

TEST(SimilarityScore, Thresholds) {
  const auto c = scored({0.2, 0.8, 0.5}, {0.9, 0.3, 0.6});
  EXPECT_EQ(group_ss(c, -std::numeric_limits<double>::infinity()).kept, (Mask{true, true, true}));
  EXPECT_EQ(group_ss(c, 0.8 + 1e-12).kept, (Mask{false, false, false}));
  EXPECT_EQ(group_ss(c, 0.5).kept, (Mask{false, true, true}));
  EXPECT_EQ(group_ss(c, 0.5).method, "ss");
}

TEST(SimilarityScore, Missing) {
  CorrespondenceSet c{{0, 0, 0.3}, {1, 1}};
  EXPECT_EQ(code_of([&] { group_ss(c, 0.1); }), ErrorCode::kMissingSimilarity);
}

TEST(Nnsr, Thresholds) {
  const auto c = scored({0.2, 0.8, 0.5}, {0.2, 0.8, 0.5});
  EXPECT_EQ(group_nnsr(c, std::numeric_limits<double>::infinity()).kept, (Mask{true, true, true}));
  EXPECT_EQ(group_nnsr(c, 0.2).kept, (Mask{false, false, false}));
  EXPECT_EQ(group_nnsr(c, 0.5).kept, (Mask{true, false, false}));
}

TEST(Nnsr, Missing) {
  CorrespondenceSet c{{0, 0, 0.3, 0.5}, {1, 1, 0.4}};
  EXPECT_EQ(code_of([&] { group_nnsr(c, 0.1); }), ErrorCode::kMissingRatio);
}

TEST(GeometricConsistency, FindsInlierCluster) {
  std::mt19937_64 rng(3);
  const auto s = exact_scene(rng, 500, 20, 10);
  const CompatParams p = CompatParams::defaults_for(cloud_resolution(s.src));
  const GroupingResult r = group_gc(s.corrs, s.src, s.tgt, p, 0.9);
  ASSERT_EQ(r.kept.size(), 30u);
  for (int i = 0; i < 20; ++i) EXPECT_TRUE(r.kept[static_cast<std::size_t>(i)]);
  EXPECT_EQ(group_gc(s.corrs, s.src, s.tgt, p, 0.9, 4).kept, r.kept);
}

TEST(GeometricConsistency, TieGoesToLowestQuery) {
  PointCloud src, tgt;
  src.points = {{0, 0, 0}, {1, 0, 0}};
  tgt.points = {{0, 0, 0}, {50, 0, 0}};
  CompatParams p;
  p.alpha_dist = 0.1;
  p.mode = ConstraintMode::kDistance;
  const GroupingResult r = group_gc({{0, 0}, {1, 1}}, src, tgt, p, 0.9);
  EXPECT_EQ(r.kept, (Mask{true, false}));
}

TEST(GeometricConsistency, ZeroThresholdKeepsAll) {
  std::mt19937_64 rng(4);
  const auto s = exact_scene(rng, 100, 5, 15);
  const GroupingResult r =
      group_gc(s.corrs, s.src, s.tgt, CompatParams::defaults_for(cloud_resolution(s.src)), 0.0);
  EXPECT_EQ(r.kept_count(), 20u);
}

TEST(GeometricConsistency, PermutationEquivariant) {
  std::mt19937_64 rng(6);
  const auto s = exact_scene(rng, 300, 15, 25);
  const CompatParams p = CompatParams::defaults_for(cloud_resolution(s.src));
  std::vector<std::size_t> perm(s.corrs.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  CorrespondenceSet shuffled;
  for (auto k : perm) shuffled.push_back(s.corrs[k]);
  const Mask a = group_gc(s.corrs, s.src, s.tgt, p).kept;
  const Mask b = group_gc(shuffled, s.src, s.tgt, p).kept;
  for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(b[i], a[perm[i]]);
}

TEST(Ransac, AllInliersRecoverTransform) {
  std::mt19937_64 rng(7);
  const auto s = exact_scene(rng, 400, 50, 0);
  const double pr = cloud_resolution(s.src).pr;
  RansacParams rp;
  rp.iterations = 100;
  rp.inlier_dist = 5 * pr;
  rp.seed = 1;
  const RansacResult r = group_ransac(s.corrs, s.src, s.tgt, rp);
  EXPECT_EQ(r.grouping.kept_count(), 50u);
  EXPECT_LT((r.transform.rotation - s.gt.rotation).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((r.transform.translation - s.gt.translation).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Ransac, PrecisionUnderHeavyOutliers) {
  std::mt19937_64 rng(8);
  PointCloud src = cfgroup::testing::random_cloud(rng, 2000, 1.0, false);
  const double pr = cloud_resolution(src).pr;
  const RigidTransform gt = random_rigid_transform(rng, 1.0);
  PointCloud tgt = apply_transform(src, gt);
  CorrespondenceSet corrs;
  std::uniform_int_distribution<std::size_t> pick(0, 1999);
  for (int i = 0; i < 10; ++i) {
    const auto k = pick(rng);
    corrs.push_back({k, k});
  }
  // Outlier targets scattered uniformly in a box 100 pr wide around the true image.
  std::uniform_real_distribution<double> box(-50 * pr, 50 * pr);
  for (int i = 0; i < 90; ++i) {
    const auto k = pick(rng);
    tgt.points.push_back(gt.apply(src.points[k]) + Eigen::Vector3d(box(rng), box(rng), box(rng)));
    corrs.push_back({k, tgt.size() - 1});
  }
  const Mask labels = label_inliers(corrs, src, tgt, gt, Resolution{pr});
  RansacParams rp;
  rp.iterations = 2000;
  rp.inlier_dist = 5 * pr;
  rp.seed = 42;
  const RansacResult r = group_ransac(corrs, src, tgt, rp);
  const EvalReport rep = score(r.grouping, labels);
  EXPECT_GE(rep.precision, 0.9);
  RansacParams rp4 = rp;
  rp4.threads = 4;
  EXPECT_EQ(group_ransac(corrs, src, tgt, rp4).grouping.kept, r.grouping.kept);
}

TEST(Ransac, MoreIterationsNeverWorse) {
  std::mt19937_64 rng(9);
  const auto s = exact_scene(rng, 500, 8, 60);
  RansacParams rp;
  rp.inlier_dist = 5 * cloud_resolution(s.src).pr;
  rp.seed = 5;
  std::size_t prev = 0;
  for (std::size_t it : {1u, 5u, 20u, 100u, 400u}) {
    rp.iterations = it;
    std::size_t best = 0;
    try {
      best = group_ransac(s.corrs, s.src, s.tgt, rp).best_count;
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kEstimationFailed);
    }
    EXPECT_GE(best, prev);
    prev = best;
  }
}

TEST(Ransac, AllDegenerateFails) {
  PointCloud c;
  for (int i = 0; i < 5; ++i) c.points.emplace_back(i, 2.0 * i, -i);
  const CorrespondenceSet corrs{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}};
  RansacParams rp;
  rp.iterations = 1;
  rp.inlier_dist = 0.1;
  EXPECT_EQ(code_of([&] { group_ransac(corrs, c, c, rp); }), ErrorCode::kEstimationFailed);
}

TEST(Groupers, MaskLengthMatchesInput) {
  std::mt19937_64 rng(10);
  const auto s = exact_scene(rng, 200, 10, 30);
  const CompatParams p = CompatParams::defaults_for(cloud_resolution(s.src));
  EXPECT_EQ(group_ss(s.corrs, 0.5).kept.size(), 40u);
  EXPECT_EQ(group_nnsr(s.corrs, 0.8).kept.size(), 40u);
  EXPECT_EQ(group_gc(s.corrs, s.src, s.tgt, p).kept.size(), 40u);
  RansacParams rp;
  rp.inlier_dist = 0.05;
  EXPECT_EQ(group_ransac(s.corrs, s.src, s.tgt, rp).grouping.kept.size(), 40u);
}
