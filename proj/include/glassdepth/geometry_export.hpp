#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "glassdepth/core_types.hpp"

namespace glassdepth {

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<std::array<std::uint8_t, 3>> colors;  // empty or one per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Back-projects every valid pixel with u % stride == 0 and v % stride == 0.
/// Camera frame: x right, y down, z forward. Throws InvalidArgument for stride < 1.
PointCloud depth_to_cloud(const DepthMap& depth, const CameraIntrinsics& k, int stride = 1);

/// Camera optical frame to a z-up ground frame: x forward, y left, z height
/// above the floor for a level camera mounted `camera_height` meters up.
PointCloud camera_to_ground(const PointCloud& cloud, double camera_height);

enum class CellState : std::uint8_t { kUnknown = 0, kFree = 1, kOccupied = 2 };

struct GridConfig {
  double resolution = 0.05;  // meters per cell
  double z_min = 0.2;        // obstacle height band, meters
  double z_max = 1.8;
  // Cell (0, 0) starts here. When unset the grid is fit to the footprint.
  std::optional<Eigen::Vector2d> origin;
  // Grid size in cells; 0 fits the footprint.
  int size_x = 0;
  int size_y = 0;

  void validate() const;
};

struct OccupancyGrid {
  double resolution = 0.05;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  int size_x = 0;
  int size_y = 0;
  double z_min = 0.2;
  double z_max = 1.8;
  std::vector<CellState> cells;  // row-major, index iy * size_x + ix

  CellState at(int ix, int iy) const {
    return cells[static_cast<std::size_t>(iy) * size_x + ix];
  }
  std::size_t count(CellState state) const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;
};

/// Ground-frame points (x, y, height). Points inside [z_min, z_max] occupy
/// their cell; cells inside the bounding rectangle of in-band and below-band
/// points that are not occupied are free; everything else is unknown.
/// Throws EmptyCloud when the cloud has no points.
OccupancyGrid cloud_to_occupancy(const PointCloud& cloud, const GridConfig& cfg = {});

}  // namespace glassdepth
