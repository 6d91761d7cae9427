#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cfgroup/baselines.hpp"
#include "cfgroup/correspondence.hpp"
#include "cfgroup/geometry.hpp"

namespace cfgroup {

inline constexpr double kDefaultInlierMultiplier = 5.0;

/// A correspondence is an inlier when |R p_s + t - p_t| < multiplier * pr.
Mask label_inliers(const CorrespondenceSet& corrs, const PointCloud& src, const PointCloud& tgt,
                   const RigidTransform& gt, Resolution pr,
                   double multiplier = kDefaultInlierMultiplier);

/// Precision, recall and two F-scores for one grouping.
///
/// `f_paper` is P R / (P + R), whose maximum is 0.5; `f1` is the usual
/// 2 P R / (P + R). Zero denominators yield 0 and set the matching flag.
struct EvalReport {
  std::string method;
  std::size_t n_group = 0;
  std::size_t n_inlier_in_group = 0;
  std::size_t n_gt_inlier = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_paper = 0.0;
  double f1 = 0.0;
  bool empty_group = false;
  bool no_gt_inliers = false;
};

EvalReport score(const Mask& kept, const Mask& labels, std::string method = "");
inline EvalReport score(const GroupingResult& result, const Mask& labels) {
  return score(result.kept, labels, result.method);
}

/// Mean of per-pair P/R/F plus a report built from pooled counts.
struct AggregateReport {
  std::string method;
  std::size_t pairs = 0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_f_paper = 0.0;
  double mean_f1 = 0.0;
  EvalReport pooled;
};

AggregateReport aggregate(std::span<const EvalReport> reports, std::string method = "");

/// key=value lines.
std::string to_text(const EvalReport& report);

inline constexpr const char* kReportCsvHeader =
    "method,n_group,n_inlier_in_group,n_gt_inlier,precision,recall,f_paper,f1";
std::string to_csv_row(const EvalReport& report);
void write_report_csv(const std::filesystem::path& path, std::span<const EvalReport> reports);

}  // namespace cfgroup
