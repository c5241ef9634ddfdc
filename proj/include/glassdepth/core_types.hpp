#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace glassdepth {

/// Pixel coordinate: u is the column, v the row.
struct PixelCoord {
  int u = 0;
  int v = 0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Dense per-pixel depth in meters. Invalid pixels are stored as NaN and
/// every other value is finite and non-negative.
class DepthMap {
 public:
  DepthMap() = default;

  /// All pixels invalid.
  DepthMap(int width, int height);

  /// Non-finite and negative values are marked invalid.
  DepthMap(int width, int height, std::vector<double> values);

  /// Sensor semantics: additionally treats an exact 0 as invalid.
  static DepthMap FromSensor(int width, int height, std::vector<double> values);

  static double invalid_value() { return std::numeric_limits<double>::quiet_NaN(); }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }
  bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }

  double at(int u, int v) const { return values_[index(u, v)]; }
  double operator[](std::size_t i) const { return values_[i]; }
  bool valid(std::size_t i) const { return !(values_[i] != values_[i]); }
  bool valid(int u, int v) const { return valid(index(u, v)); }

  /// Stores `depth`, or marks the pixel invalid when it is non-finite or negative.
  void set(int u, int v, double depth);
  void set(std::size_t i, double depth);
  void invalidate(int u, int v) { values_[index(u, v)] = invalid_value(); }
  void invalidate(std::size_t i) { values_[i] = invalid_value(); }

  std::span<const double> values() const { return values_; }
  std::size_t valid_count() const;

  bool same_shape(const DepthMap& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const DepthMap& a, const DepthMap& b);

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Per-pixel flag image (exclusion masks, footprints).
class PixelMask {
 public:
  PixelMask() = default;
  PixelMask(int width, int height, bool value = false);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return flags_.size(); }

  bool operator[](std::size_t i) const { return flags_[i] != 0; }
  bool at(int u, int v) const { return flags_[static_cast<std::size_t>(v) * width_ + u] != 0; }
  void set(std::size_t i, bool value) { flags_[i] = value ? 1 : 0; }
  void set(int u, int v, bool value) { set(static_cast<std::size_t>(v) * width_ + u, value); }
  std::size_t count() const;

  friend bool operator==(const PixelMask&, const PixelMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> flags_;
};

/// Glass instance labels: 0 is background, 1..n are instances.
class BinaryMask {
 public:
  BinaryMask() = default;

  /// Throws InvalidArgument unless the non-zero labels are exactly {1..n}.
  BinaryMask(int width, int height, std::vector<std::uint16_t> labels);

  int width() const { return width_; }
  int height() const { return height_; }
  int instance_count() const { return instance_count_; }
  std::size_t size() const { return labels_.size(); }

  std::uint16_t operator[](std::size_t i) const { return labels_[i]; }
  std::uint16_t at(int u, int v) const { return labels_[static_cast<std::size_t>(v) * width_ + u]; }
  std::span<const std::uint16_t> labels() const { return labels_; }

  /// Pixel count of every instance, indexed by id (entry 0 is background).
  std::vector<std::size_t> instance_areas() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int instance_count_ = 0;
  std::vector<std::uint16_t> labels_;
};

/// Pinhole intrinsics, no distortion.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  CameraIntrinsics() = default;
  /// Throws InvalidArgument unless fx, fy > 0 and cx, cy are finite.
  CameraIntrinsics(double fx, double fy, double cx, double cy);

  /// K^-1 [u, v, 1]^T. The z component is always 1.
  Eigen::Vector3d ray(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }

  /// Pixel coordinate of a camera-frame point (z must be non-zero).
  Eigen::Vector2d project(const Eigen::Vector3d& p) const {
    return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
  }

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// metric = scale * prior + shift
struct AffineParams {
  double scale = 1.0;
  double shift = 0.0;

  AffineParams() = default;
  /// Throws InvalidArgument on non-finite input.
  AffineParams(double scale, double shift);

  double apply(double prior) const { return scale * prior + shift; }

  friend bool operator==(const AffineParams&, const AffineParams&) = default;
};

/// Plane n^T P + d = 0 with unit normal.
class PlaneModel {
 public:
  PlaneModel() = default;

  /// Divides both normal and offset by |normal|. Throws InvalidArgument for
  /// a zero or non-finite normal.
  PlaneModel(const Eigen::Vector3d& normal, double offset);

  const Eigen::Vector3d& normal() const { return normal_; }
  double offset() const { return offset_; }

  double signed_distance(const Eigen::Vector3d& p) const { return normal_.dot(p) + offset_; }

  /// Same plane with (n, d) -> (-n, -d).
  PlaneModel flipped() const { return PlaneModel(-normal_, -offset_); }

 private:
  Eigen::Vector3d normal_{0.0, 0.0, 1.0};
  double offset_ = 0.0;
};

/// One (prior, sensor) correspondence at a pixel.
struct PixelSample {
  int u = 0;
  int v = 0;
  double prior_depth = 0.0;
  double sensor_depth = 0.0;
};

/// Coordinates of all valid pixels in row-major order.
std::vector<PixelCoord> valid_pixel_indices(const DepthMap& map);

}  // namespace glassdepth
