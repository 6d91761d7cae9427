#include "cfgroup/evaluation.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cfgroup/error.hpp"

namespace cfgroup {

Mask label_inliers(const CorrespondenceSet& corrs, const PointCloud& src, const PointCloud& tgt,
                   const RigidTransform& gt, Resolution pr, double multiplier) {
  if (!(pr.pr > 0.0)) throw Error(ErrorCode::kInvalidArgument, "resolution must be > 0");
  if (!(multiplier > 0.0)) throw Error(ErrorCode::kInvalidArgument, "multiplier must be > 0");
  validate_indices(corrs, src, tgt);
  const double d_inlier = multiplier * pr.pr;
  Mask labels(corrs.size(), false);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const double residual =
        (gt.apply(src.points[corrs[i].src_index]) - tgt.points[corrs[i].tgt_index]).norm();
    labels[i] = residual < d_inlier;
  }
  return labels;
}

namespace {

void fill_ratios(EvalReport& r) {
  r.empty_group = r.n_group == 0;
  r.no_gt_inliers = r.n_gt_inlier == 0;
  r.precision = r.empty_group ? 0.0
                              : static_cast<double>(r.n_inlier_in_group) /
                                    static_cast<double>(r.n_group);
  r.recall = r.no_gt_inliers ? 0.0
                             : static_cast<double>(r.n_inlier_in_group) /
                                   static_cast<double>(r.n_gt_inlier);
  const double sum = r.precision + r.recall;
  r.f_paper = sum > 0.0 ? r.precision * r.recall / sum : 0.0;
  r.f1 = sum > 0.0 ? 2.0 * r.precision * r.recall / sum : 0.0;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

EvalReport score(const Mask& kept, const Mask& labels, std::string method) {
  if (kept.size() != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "mask has " + std::to_string(kept.size()) + " entries but labels have " +
                    std::to_string(labels.size()));
  }
  EvalReport r;
  r.method = std::move(method);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    r.n_group += kept[i] ? 1 : 0;
    r.n_gt_inlier += labels[i] ? 1 : 0;
    r.n_inlier_in_group += (kept[i] && labels[i]) ? 1 : 0;
  }
  fill_ratios(r);
  return r;
}

AggregateReport aggregate(std::span<const EvalReport> reports, std::string method) {
  AggregateReport agg;
  agg.method = method;
  agg.pairs = reports.size();
  agg.pooled.method = std::move(method);
  for (const auto& r : reports) {
    agg.mean_precision += r.precision;
    agg.mean_recall += r.recall;
    agg.mean_f_paper += r.f_paper;
    agg.mean_f1 += r.f1;
    agg.pooled.n_group += r.n_group;
    agg.pooled.n_inlier_in_group += r.n_inlier_in_group;
    agg.pooled.n_gt_inlier += r.n_gt_inlier;
  }
  if (!reports.empty()) {
    const double n = static_cast<double>(reports.size());
    agg.mean_precision /= n;
    agg.mean_recall /= n;
    agg.mean_f_paper /= n;
    agg.mean_f1 /= n;
  }
  fill_ratios(agg.pooled);
  return agg;
}

std::string to_text(const EvalReport& r) {
  std::ostringstream out;
  out << "method=" << r.method << '\n'
      << "n_group=" << r.n_group << '\n'
      << "n_inlier_in_group=" << r.n_inlier_in_group << '\n'
      << "n_gt_inlier=" << r.n_gt_inlier << '\n'
      << "precision=" << fmt(r.precision) << '\n'
      << "recall=" << fmt(r.recall) << '\n'
      << "f_paper=" << fmt(r.f_paper) << '\n'
      << "f1=" << fmt(r.f1) << '\n'
      << "empty_group=" << (r.empty_group ? 1 : 0) << '\n'
      << "no_gt_inliers=" << (r.no_gt_inliers ? 1 : 0) << '\n';
  return out.str();
}

std::string to_csv_row(const EvalReport& r) {
  std::ostringstream out;
  out << r.method << ',' << r.n_group << ',' << r.n_inlier_in_group << ',' << r.n_gt_inlier << ','
      << fmt(r.precision) << ',' << fmt(r.recall) << ',' << fmt(r.f_paper) << ',' << fmt(r.f1);
  return out.str();
}

void write_report_csv(const std::filesystem::path& path, std::span<const EvalReport> reports) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << kReportCsvHeader << '\n';
  for (const auto& r : reports) out << to_csv_row(r) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

}  // namespace cfgroup
