#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "glassdepth/annotation.hpp"
#include "glassdepth/core_types.hpp"

namespace glassdepth {

/// Raw-vs-ground-truth AbsRel at or below this is an easy sample.
inline constexpr double kEasyAbsRelThreshold = 0.03;
inline constexpr double kDeltaThreshold = 1.25;

struct DepthMetrics {
  double abs_rel = 0.0;
  double delta1 = 0.0;
  std::size_t valid_pixel_count = 0;        // pixels contributing to abs_rel
  std::size_t evaluated_pixel_count = 0;    // pixels contributing to delta1
  std::size_t invalid_prediction_count = 0; // evaluated pixels the prediction left invalid
};

/// Evaluated pixels: gt valid and > 0, not excluded. abs_rel averages over
/// those the prediction also covers; delta1 counts invalid predictions as
/// failures. Throws DimensionMismatch or NoValidPixels.
DepthMetrics compute_metrics(const DepthMap& pred, const DepthMap& gt,
                             const PixelMask* exclusion = nullptr);

enum class Split { kEasy, kHard };

std::string to_string(Split split);

struct SplitLabel {
  Split label = Split::kEasy;
  double raw_abs_rel = 0.0;
};

SplitLabel label_for_abs_rel(double raw_abs_rel);

/// AbsRel of the raw sensor depth against the ground truth, honoring its
/// exclusion mask.
SplitLabel split_sample(const DepthMap& raw, const GroundTruthDepth& gt);

struct ReportRow {
  double abs_rel = 0.0;
  double delta1 = 0.0;
  std::size_t count = 0;
};

/// Unweighted per-sample means; a split with no samples has no row.
struct BenchmarkReport {
  std::optional<ReportRow> all;
  std::optional<ReportRow> easy;
  std::optional<ReportRow> hard;
};

BenchmarkReport aggregate_report(const std::vector<std::pair<SplitLabel, DepthMetrics>>& per_sample);

/// Plain-text All / Easy / Hard table.
std::string format_report_table(const BenchmarkReport& report, const std::string& method_name);

}  // namespace glassdepth
