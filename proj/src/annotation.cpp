#include "glassdepth/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Eigenvalues>

#include "glassdepth/error.hpp"

namespace glassdepth {

namespace {

// Second-smallest scatter eigenvalue below this fraction of the largest means
// the points span at most a line.
constexpr double kCollinearTolerance = 1e-12;

std::int64_t cross(const PixelCoord& o, const PixelCoord& a, const PixelCoord& b) {
  return static_cast<std::int64_t>(a.u - o.u) * (b.v - o.v) -
         static_cast<std::int64_t>(a.v - o.v) * (b.u - o.u);
}

// Andrew's monotone chain, counter-clockwise, collinear vertices dropped.
std::vector<PixelCoord> convex_hull(std::span<const PixelCoord> input) {
  std::vector<PixelCoord> pts(input.begin(), input.end());
  std::sort(pts.begin(), pts.end(), [](const PixelCoord& a, const PixelCoord& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<PixelCoord> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

std::string to_string(ReviewStatus status) {
  switch (status) {
    case ReviewStatus::kAccepted:
      return "accepted";
    case ReviewStatus::kRejected:
      return "rejected";
    case ReviewStatus::kPending:
      break;
  }
  return "pending";
}

ReviewStatus review_status_from_string(const std::string& token) {
  if (token == "pending") return ReviewStatus::kPending;
  if (token == "accepted") return ReviewStatus::kAccepted;
  if (token == "rejected") return ReviewStatus::kRejected;
  throw BadFormat("unknown review_status '" + token + "'");
}

void GlassAnnotation::validate(int width, int height) const {
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (const auto& p : instances[i].points) {
      if (p.u < 0 || p.v < 0 || p.u >= width || p.v >= height) {
        throw InvalidArgument("instance " + std::to_string(i) + " has a click at (" +
                              std::to_string(p.u) + ", " + std::to_string(p.v) +
                              ") outside the image");
      }
    }
  }
}

Eigen::Vector3d backproject(double u, double v, double depth, const CameraIntrinsics& k) {
  if (!std::isfinite(depth) || depth <= 0.0) {
    throw InvalidDepth("cannot backproject a pixel without valid positive depth");
  }
  return depth * k.ray(u, v);
}

PlaneFit fit_plane(std::span<const Eigen::Vector3d> points) {
  if (points.size() < 3) throw InvalidArgument("plane fit needs at least three points");
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector3d q = p - mean;
    scatter += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(scatter);
  if (solver.info() != Eigen::Success) throw DegenerateGeometry("scatter eigen-decomposition failed");
  const Eigen::Vector3d& eig = solver.eigenvalues();  // ascending
  if (!(eig(2) > 0.0) || eig(1) < kCollinearTolerance * eig(2)) {
    throw DegenerateGeometry("points are collinear or coincident");
  }
  Eigen::Vector3d normal = solver.eigenvectors().col(0);
  double offset = -normal.dot(mean);
  if (offset > 0.0 || (offset == 0.0 && normal.z() < 0.0)) {
    normal = -normal;
    offset = -offset;
  }
  PlaneFit fit{PlaneModel(normal, offset), 0.0};
  double sq = 0.0;
  for (const auto& p : points) {
    const double r = fit.plane.signed_distance(p);
    sq += r * r;
  }
  fit.residual_rms = std::sqrt(sq / static_cast<double>(points.size()));
  return fit;
}

std::vector<PixelCoord> rasterize_hull(std::span<const PixelCoord> points, int width,
                                       int height) {
  const std::vector<PixelCoord> hull = convex_hull(points);
  if (hull.size() < 3) throw DegenerateHull("clicked points are collinear or too few");
  int u0 = hull[0].u, u1 = hull[0].u, v0 = hull[0].v, v1 = hull[0].v;
  for (const auto& p : hull) {
    u0 = std::min(u0, p.u);
    u1 = std::max(u1, p.u);
    v0 = std::min(v0, p.v);
    v1 = std::max(v1, p.v);
  }
  u0 = std::max(u0, 0);
  v0 = std::max(v0, 0);
  u1 = std::min(u1, width - 1);
  v1 = std::min(v1, height - 1);
  std::vector<PixelCoord> inside;
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      const PixelCoord p{u, v};
      bool in = true;
      for (std::size_t i = 0; i < hull.size() && in; ++i) {
        in = cross(hull[i], hull[(i + 1) % hull.size()], p) >= 0;
      }
      if (in) inside.push_back(p);
    }
  }
  return inside;
}

MaskMatch match_annotation_to_mask(std::span<const PixelCoord> points, const BinaryMask& mask) {
  const std::vector<PixelCoord> pixels = rasterize_hull(points, mask.width(), mask.height());
  MaskMatch match;
  match.hull_pixels = pixels.size();
  std::vector<std::size_t> counts(static_cast<std::size_t>(mask.instance_count()) + 1, 0);
  for (const auto& p : pixels) ++counts[mask.at(p.u, p.v)];
  match.ratios.assign(counts.size(), 0.0);
  for (std::size_t id = 1; id < counts.size(); ++id) {
    match.ratios[id] = pixels.empty() ? 0.0
                                      : static_cast<double>(counts[id]) /
                                            static_cast<double>(pixels.size());
    if (match.ratios[id] > match.ratio) {
      match.ratio = match.ratios[id];
      match.instance_id = static_cast<int>(id);
    }
  }
  if (match.instance_id == 0) throw NoOverlap("annotation hull does not overlap any glass instance");
  return match;
}

double ray_plane_depth(double u, double v, const PlaneModel& plane, const CameraIntrinsics& k) {
  const Eigen::Vector3d ray = k.ray(u, v);
  const double denom = plane.normal().dot(ray);
  if (std::fabs(denom) < 1e-12 * ray.norm()) {
    throw ParallelRay("pixel ray is parallel to the plane");
  }
  const double lambda = -plane.offset() / denom;
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw BehindCamera("plane intersection lies behind the camera");
  }
  return lambda * ray.z();
}

InstanceOutcome solve_instance(const DepthMap& raw, const BinaryMask& mask,
                               const InstanceAnnotation& instance, const CameraIntrinsics& k) {
  if (instance.points.size() < 3) throw InvalidArgument("insufficient points");
  for (const auto& p : instance.points) {
    if (!raw.contains(p.u, p.v)) throw InvalidArgument("click outside the image");
  }
  InstanceOutcome out;
  const MaskMatch match = match_annotation_to_mask(instance.points, mask);
  std::vector<Eigen::Vector3d> lifted;
  lifted.reserve(instance.points.size());
  for (std::size_t i = 0; i < instance.points.size(); ++i) {
    const auto& p = instance.points[i];
    if (!raw.valid(p.u, p.v)) {
      throw InvalidDepth("invalid depth at click " + std::to_string(i));
    }
    lifted.push_back(backproject(p.u, p.v, raw.at(p.u, p.v), k));
  }
  out.fit = fit_plane(lifted);
  out.matched_mask_id = match.instance_id;
  out.overlap_ratio = match.ratio;
  out.ok = true;
  return out;
}

GroundTruthResult generate_ground_truth(const DepthMap& raw, const BinaryMask& mask,
                                        const GlassAnnotation& annotation,
                                        const CameraIntrinsics& k) {
  if (raw.width() != mask.width() || raw.height() != mask.height()) {
    throw DimensionMismatch("raw depth and glass mask differ in size");
  }
  GroundTruthResult result{{raw, PixelMask(raw.width(), raw.height())}, {}, {}};
  DepthMap& depth = result.ground_truth.depth;
  PixelMask& excluded = result.ground_truth.evaluation_mask;
  std::vector<bool> claimed(static_cast<std::size_t>(mask.instance_count()) + 1, false);

  for (std::size_t i = 0; i < annotation.instances.size(); ++i) {
    InstanceOutcome outcome;
    try {
      outcome = solve_instance(raw, mask, annotation.instances[i], k);
    } catch (const Error& e) {
      outcome.ok = false;
      outcome.error = e.what();
    }
    outcome.annotation_index = i;
    if (outcome.ok && claimed[outcome.matched_mask_id]) {
      outcome.ok = false;
      outcome.error = "mask instance " + std::to_string(outcome.matched_mask_id) +
                      " is already matched by an earlier annotation";
    }
    if (outcome.ok) {
      claimed[outcome.matched_mask_id] = true;
      const PlaneModel& plane = outcome.fit->plane;
      for (int v = 0; v < mask.height(); ++v) {
        for (int u = 0; u < mask.width(); ++u) {
          if (mask.at(u, v) != outcome.matched_mask_id) continue;
          try {
            depth.set(u, v, ray_plane_depth(u, v, plane, k));
            ++outcome.filled_pixels;
          } catch (const DegenerateData&) {
            excluded.set(u, v, true);
            ++outcome.failed_pixels;
          }
        }
      }
    }
    result.outcomes.push_back(std::move(outcome));
  }

  for (int id = 1; id <= mask.instance_count(); ++id) {
    if (!claimed[id]) result.excluded_instances.push_back(id);
  }
  if (!result.excluded_instances.empty()) {
    for (std::size_t p = 0; p < mask.size(); ++p) {
      if (mask[p] != 0 && !claimed[mask[p]]) excluded.set(p, true);
    }
  }
  return result;
}

}  // namespace glassdepth
