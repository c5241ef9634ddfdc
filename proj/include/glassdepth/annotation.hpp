#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "glassdepth/core_types.hpp"

namespace glassdepth {

enum class ReviewStatus { kPending, kAccepted, kRejected };

std::string to_string(ReviewStatus status);
/// Throws BadFormat for an unknown token.
ReviewStatus review_status_from_string(const std::string& token);

/// Clicked coplanar points for one glass instance and what came out of them.
struct InstanceAnnotation {
  std::vector<PixelCoord> points;
  std::optional<int> matched_mask_id;
  std::optional<PlaneModel> plane;
  double residual_rms = 0.0;
};

struct GlassAnnotation {
  std::string sample_id;
  std::vector<InstanceAnnotation> instances;
  ReviewStatus review_status = ReviewStatus::kPending;

  /// Throws InvalidArgument if a click lies outside a width x height image.
  void validate(int width, int height) const;
};

struct GroundTruthDepth {
  DepthMap depth;
  PixelMask evaluation_mask;  // true = excluded from evaluation
};

/// P = z * K^-1 [u, v, 1]^T. Throws InvalidDepth unless z is finite and > 0.
Eigen::Vector3d backproject(double u, double v, double depth, const CameraIntrinsics& k);

struct PlaneFit {
  PlaneModel plane;
  double residual_rms = 0.0;
};

/// Scatter-matrix fit: the normal is the eigenvector of the smallest
/// eigenvalue of the centered scatter, d = -n^T mean, sign chosen so d <= 0.
/// Throws InvalidArgument for fewer than 3 points and DegenerateGeometry for
/// collinear or coincident input.
PlaneFit fit_plane(std::span<const Eigen::Vector3d> points);

struct MaskMatch {
  int instance_id = 0;
  double ratio = 0.0;                 // |hull & instance| / |hull|
  std::size_t hull_pixels = 0;
  std::vector<double> ratios;         // per instance id, entry 0 unused
};

/// Pixels (by center) inside or on the convex hull of `points`, clipped to
/// the image. Throws DegenerateHull for fewer than 3 or collinear points.
std::vector<PixelCoord> rasterize_hull(std::span<const PixelCoord> points, int width,
                                       int height);

/// Instance with the highest intersection-over-hull ratio, smallest id on
/// ties. Throws DegenerateHull or NoOverlap.
MaskMatch match_annotation_to_mask(std::span<const PixelCoord> points, const BinaryMask& mask);

/// Optical-axis depth where the ray through (u, v) meets the plane.
/// Throws ParallelRay or BehindCamera.
double ray_plane_depth(double u, double v, const PlaneModel& plane, const CameraIntrinsics& k);

struct InstanceOutcome {
  std::size_t annotation_index = 0;
  bool ok = false;
  std::string error;  // set when !ok
  int matched_mask_id = 0;
  double overlap_ratio = 0.0;
  std::optional<PlaneFit> fit;
  std::size_t filled_pixels = 0;
  std::size_t failed_pixels = 0;  // ray misses, excluded from evaluation
};

struct GroundTruthResult {
  GroundTruthDepth ground_truth;
  std::vector<InstanceOutcome> outcomes;       // one per annotated instance
  std::vector<int> excluded_instances;         // mask ids with no usable annotation
};

/// Lifts one instance's clicks with the raw depth, fits its plane and
/// matches it to the mask. Throws on the first failure.
InstanceOutcome solve_instance(const DepthMap& raw, const BinaryMask& mask,
                               const InstanceAnnotation& instance, const CameraIntrinsics& k);

/// Replaces each annotated instance's mask pixels by its ray-plane depth and
/// flags the pixels of unannotated instances as excluded. Failures are
/// reported per instance; the other instances are still processed.
GroundTruthResult generate_ground_truth(const DepthMap& raw, const BinaryMask& mask,
                                        const GlassAnnotation& annotation,
                                        const CameraIntrinsics& k);

}  // namespace glassdepth
