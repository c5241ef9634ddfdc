#include "glassdepth/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glassdepth/error.hpp"

namespace glassdepth {

namespace {

std::size_t checked_area(int width, int height) {
  if (width < 1 || height < 1) {
    throw InvalidArgument("image dimensions must be positive, got " + std::to_string(width) +
                          "x" + std::to_string(height));
  }
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

double sanitize(double depth) {
  return (std::isfinite(depth) && depth >= 0.0) ? depth : DepthMap::invalid_value();
}

}  // namespace

DepthMap::DepthMap(int width, int height)
    : width_(width), height_(height), values_(checked_area(width, height), invalid_value()) {}

DepthMap::DepthMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (values_.size() != checked_area(width, height)) {
    throw DimensionMismatch("depth buffer holds " + std::to_string(values_.size()) +
                            " values for a " + std::to_string(width) + "x" +
                            std::to_string(height) + " map");
  }
  for (double& d : values_) d = sanitize(d);
}

DepthMap DepthMap::FromSensor(int width, int height, std::vector<double> values) {
  for (double& d : values) {
    if (d == 0.0) d = invalid_value();
  }
  return DepthMap(width, height, std::move(values));
}

void DepthMap::set(int u, int v, double depth) { values_[index(u, v)] = sanitize(depth); }

void DepthMap::set(std::size_t i, double depth) { values_[i] = sanitize(depth); }

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](double d) { return !std::isnan(d); }));
}

bool operator==(const DepthMap& a, const DepthMap& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool va = a.valid(i);
    if (va != b.valid(i)) return false;
    if (va && a.values_[i] != b.values_[i]) return false;
  }
  return true;
}

PixelMask::PixelMask(int width, int height, bool value)
    : width_(width), height_(height), flags_(checked_area(width, height), value ? 1 : 0) {}

std::size_t PixelMask::count() const {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint16_t> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
  if (labels_.size() != checked_area(width, height)) {
    throw DimensionMismatch("mask buffer size does not match its dimensions");
  }
  const std::uint16_t max_label =
      labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end());
  std::vector<bool> seen(static_cast<std::size_t>(max_label) + 1, false);
  for (auto id : labels_) seen[id] = true;
  for (std::uint16_t id = 1; id <= max_label; ++id) {
    if (!seen[id]) {
      throw InvalidArgument("mask instance ids are not contiguous: id " + std::to_string(id) +
                            " is missing below max id " + std::to_string(max_label));
    }
  }
  instance_count_ = max_label;
}

std::vector<std::size_t> BinaryMask::instance_areas() const {
  std::vector<std::size_t> areas(static_cast<std::size_t>(instance_count_) + 1, 0);
  for (auto id : labels_) ++areas[id];
  return areas;
}

CameraIntrinsics::CameraIntrinsics(double fx_, double fy_, double cx_, double cy_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_) {
  if (!(std::isfinite(fx) && fx > 0.0 && std::isfinite(fy) && fy > 0.0)) {
    throw InvalidArgument("focal lengths must be finite and positive");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy)) {
    throw InvalidArgument("principal point must be finite");
  }
}

AffineParams::AffineParams(double scale_, double shift_) : scale(scale_), shift(shift_) {
  if (!std::isfinite(scale) || !std::isfinite(shift)) {
    throw InvalidArgument("affine parameters must be finite");
  }
}

PlaneModel::PlaneModel(const Eigen::Vector3d& normal, double offset) {
  const double norm = normal.norm();
  if (!std::isfinite(norm) || !std::isfinite(offset) || norm == 0.0) {
    throw InvalidArgument("plane normal must be finite and non-zero");
  }
  // Already-unit normals are kept bit-exact so stored planes reload unchanged.
  if (std::fabs(norm - 1.0) <= 1e-12) {
    normal_ = normal;
    offset_ = offset;
  } else {
    normal_ = normal / norm;
    offset_ = offset / norm;
  }
}

std::vector<PixelCoord> valid_pixel_indices(const DepthMap& map) {
  std::vector<PixelCoord> out;
  out.reserve(map.valid_count());
  for (int v = 0; v < map.height(); ++v) {
    for (int u = 0; u < map.width(); ++u) {
      if (map.valid(u, v)) out.push_back({u, v});
    }
  }
  return out;
}

}  // namespace glassdepth
