#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "cfgroup/error.hpp"
#include "cfgroup/evaluation.hpp"
#include "cfgroup/synth.hpp"
#include "../test_support.hpp"

using namespace cfgroup;
using cfgroup::testing::TempDir;

namespace {

Mask make_mask(std::size_t n, std::size_t first_true, std::size_t count) {
  Mask m(n, false);
  for (std::size_t i = first_true; i < first_true + count; ++i) m[i] = true;
  return m;
}

}  // namespace

TEST(Score, HandComputedExample) {
  // 10 kept of which 7 true; 14 ground-truth inliers overall.
  Mask kept = make_mask(30, 0, 10);
  Mask labels = make_mask(30, 3, 14);
  const EvalReport r = score(kept, labels, "cf");
  EXPECT_EQ(r.n_group, 10u);
  EXPECT_EQ(r.n_inlier_in_group, 7u);
  EXPECT_EQ(r.n_gt_inlier, 14u);
  EXPECT_NEAR(r.precision, 0.7, 1e-12);
  EXPECT_NEAR(r.recall, 0.5, 1e-12);
  EXPECT_NEAR(r.f_paper, 0.291667, 1e-6);
  EXPECT_NEAR(r.f1, 0.583333, 1e-6);
}

TEST(Score, EmptyGroup) {
  const EvalReport r = score(Mask(5, false), make_mask(5, 0, 2));
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f_paper, 0.0);
  EXPECT_TRUE(r.empty_group);
  EXPECT_FALSE(r.no_gt_inliers);
}

TEST(Score, NoGroundTruthInliers) {
  const EvalReport r = score(make_mask(5, 0, 2), Mask(5, false));
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_TRUE(r.no_gt_inliers);
}

TEST(Score, PerfectGroupingCapsPaperF) {
  const Mask labels = make_mask(20, 4, 6);
  const EvalReport r = score(labels, labels);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.f_paper, 0.5);
  EXPECT_EQ(r.f1, 1.0);
}

TEST(Score, PermutationInvariant) {
  std::mt19937_64 rng(1);
  Mask kept(50), labels(50);
  for (std::size_t i = 0; i < 50; ++i) {
    kept[i] = rng() % 3 == 0;
    labels[i] = rng() % 4 == 0;
  }
  const EvalReport a = score(kept, labels);
  std::vector<std::size_t> perm(50);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Mask k2(50), l2(50);
  for (std::size_t i = 0; i < 50; ++i) {
    k2[i] = kept[perm[i]];
    l2[i] = labels[perm[i]];
  }
  const EvalReport b = score(k2, l2);
  EXPECT_EQ(a.precision, b.precision);
  EXPECT_EQ(a.recall, b.recall);
  EXPECT_LE(a.f_paper, 0.5);
}

TEST(Score, LengthMismatch) { EXPECT_THROW(score(Mask(3), Mask(4)), Error); }

TEST(Labels, StrictBoundary) {
  PointCloud src, tgt;
  src.points = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  tgt.points = {{0, 0, 0}, {1, 0, 5.0}, {2, 0, 4.999}};
  const Mask m = label_inliers({{0, 0}, {1, 1}, {2, 2}}, src, tgt, RigidTransform{}, Resolution{1.0});
  EXPECT_EQ(m, (Mask{true, false, true}));
  const Mask m2 = label_inliers({{1, 1}}, src, tgt, RigidTransform{}, Resolution{1.0}, 6.0);
  EXPECT_EQ(m2, (Mask{true}));
}

TEST(Labels, MatchConstruction) {
  std::mt19937_64 rng(4);
  const auto s = cfgroup::testing::exact_scene(rng, 500, 20, 80);
  const Mask m = label_inliers(s.corrs, s.src, s.tgt, s.gt, cloud_resolution(s.src));
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(m[i], i < 20);
}

TEST(Labels, InvariantUnderExtraMotion) {
  std::mt19937_64 rng(5);
  const auto s = cfgroup::testing::exact_scene(rng, 300, 10, 40);
  const RigidTransform extra = random_rigid_transform(rng, 3.0);
  const Resolution pr = cloud_resolution(s.src);
  const Mask a = label_inliers(s.corrs, s.src, s.tgt, s.gt, pr);
  const Mask b = label_inliers(s.corrs, s.src, apply_transform(s.tgt, extra), extra * s.gt, pr);
  EXPECT_EQ(a, b);
}

TEST(Aggregate, MeansAndPooled) {
  std::vector<EvalReport> reps{score(make_mask(10, 0, 10), make_mask(10, 3, 7)),
                               score(make_mask(10, 0, 2), make_mask(10, 0, 4))};
  const AggregateReport a = aggregate(reps, "cf");
  EXPECT_EQ(a.pairs, 2u);
  EXPECT_NEAR(a.mean_precision, (0.7 + 1.0) / 2, 1e-12);
  EXPECT_NEAR(a.mean_recall, (1.0 + 0.5) / 2, 1e-12);
  EXPECT_EQ(a.pooled.n_group, 12u);
  EXPECT_EQ(a.pooled.n_inlier_in_group, 9u);
  EXPECT_EQ(a.pooled.n_gt_inlier, 11u);
}

TEST(Report, TextAndCsv) {
  const EvalReport r = score(make_mask(30, 0, 10), make_mask(30, 3, 14), "gc");
  const std::string text = to_text(r);
  EXPECT_NE(text.find("precision=0.700000"), std::string::npos);
  EXPECT_NE(text.find("f_paper=0.291667"), std::string::npos);
  EXPECT_NE(text.find("f1=0.583333"), std::string::npos);
  TempDir dir;
  const std::vector<EvalReport> reps{r};
  write_report_csv(dir / "r.csv", reps);
  const std::string csv = cfgroup::testing::read_bytes(dir / "r.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kReportCsvHeader);
  EXPECT_NE(csv.find("gc,10,7,14,"), std::string::npos);
}
