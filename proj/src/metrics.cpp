#include "glassdepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "glassdepth/error.hpp"

namespace glassdepth {

DepthMetrics compute_metrics(const DepthMap& pred, const DepthMap& gt, const PixelMask* exclusion) {
  if (!pred.same_shape(gt)) throw DimensionMismatch("prediction and ground truth differ in size");
  if (exclusion && (exclusion->width() != gt.width() || exclusion->height() != gt.height())) {
    throw DimensionMismatch("exclusion mask and ground truth differ in size");
  }
  DepthMetrics m;
  double rel_sum = 0.0;
  std::size_t inliers = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt.valid(i) || !(gt[i] > 0.0)) continue;
    if (exclusion && (*exclusion)[i]) continue;
    ++m.evaluated_pixel_count;
    if (!pred.valid(i)) {
      ++m.invalid_prediction_count;
      continue;
    }
    const double p = pred[i];
    const double g = gt[i];
    rel_sum += std::fabs(p - g) / g;
    ++m.valid_pixel_count;
    if (p > 0.0 && std::max(p / g, g / p) < kDeltaThreshold) ++inliers;
  }
  if (m.valid_pixel_count == 0) {
    throw NoValidPixels("no pixel is valid in both prediction and ground truth");
  }
  m.abs_rel = rel_sum / static_cast<double>(m.valid_pixel_count);
  m.delta1 = static_cast<double>(inliers) / static_cast<double>(m.evaluated_pixel_count);
  return m;
}

std::string to_string(Split split) { return split == Split::kEasy ? "easy" : "hard"; }

SplitLabel label_for_abs_rel(double raw_abs_rel) {
  return {raw_abs_rel <= kEasyAbsRelThreshold ? Split::kEasy : Split::kHard, raw_abs_rel};
}

SplitLabel split_sample(const DepthMap& raw, const GroundTruthDepth& gt) {
  return label_for_abs_rel(compute_metrics(raw, gt.depth, &gt.evaluation_mask).abs_rel);
}

namespace {

struct RowAccumulator {
  double abs_rel = 0.0;
  double delta1 = 0.0;
  std::size_t count = 0;

  void add(const DepthMetrics& m) {
    abs_rel += m.abs_rel;
    delta1 += m.delta1;
    ++count;
  }

  std::optional<ReportRow> row() const {
    if (count == 0) return std::nullopt;
    const double n = static_cast<double>(count);
    return ReportRow{abs_rel / n, delta1 / n, count};
  }
};

}  // namespace

BenchmarkReport aggregate_report(
    const std::vector<std::pair<SplitLabel, DepthMetrics>>& per_sample) {
  RowAccumulator all, easy, hard;
  for (const auto& [label, metrics] : per_sample) {
    all.add(metrics);
    (label.label == Split::kEasy ? easy : hard).add(metrics);
  }
  return {all.row(), easy.row(), hard.row()};
}

std::string format_report_table(const BenchmarkReport& report, const std::string& method_name) {
  auto cells = [](const std::optional<ReportRow>& row) {
    char buf[64];
    if (!row) {
      std::snprintf(buf, sizeof buf, " %8s %8s %5s |", "-", "-", "0");
    } else {
      std::snprintf(buf, sizeof buf, " %8.3f %8.3f %5zu |", row->abs_rel, row->delta1, row->count);
    }
    return std::string(buf);
  };
  std::string out;
  out += "| method               |            All           |           Easy           |           Hard           |\n";
  out += "|                      |   AbsRel   delta1     n |   AbsRel   delta1     n |   AbsRel   delta1     n |\n";
  char name[32];
  std::snprintf(name, sizeof name, "| %-20.20s |", method_name.c_str());
  out += name + cells(report.all) + cells(report.easy) + cells(report.hard) + "\n";
  return out;
}

}  // namespace glassdepth
