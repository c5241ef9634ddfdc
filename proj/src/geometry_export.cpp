#include "glassdepth/geometry_export.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glassdepth/error.hpp"

namespace glassdepth {

PointCloud depth_to_cloud(const DepthMap& depth, const CameraIntrinsics& k, int stride) {
  if (stride < 1) throw InvalidArgument("stride must be >= 1");
  PointCloud cloud;
  for (int v = 0; v < depth.height(); v += stride) {
    for (int u = 0; u < depth.width(); u += stride) {
      if (!depth.valid(u, v)) continue;
      const Eigen::Vector3d p = depth.at(u, v) * k.ray(u, v);
      if (p.allFinite()) cloud.points.push_back(p);
    }
  }
  return cloud;
}

PointCloud camera_to_ground(const PointCloud& cloud, double camera_height) {
  PointCloud out;
  out.colors = cloud.colors;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    out.points.emplace_back(p.z(), -p.x(), camera_height - p.y());
  }
  return out;
}

void GridConfig::validate() const {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw InvalidArgument("grid resolution must be positive");
  }
  if (!(z_min < z_max)) throw InvalidArgument("height band needs z_min < z_max");
  if (size_x < 0 || size_y < 0) throw InvalidArgument("grid size must be non-negative");
}

std::size_t OccupancyGrid::count(CellState state) const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), state));
}

OccupancyGrid cloud_to_occupancy(const PointCloud& cloud, const GridConfig& cfg) {
  cfg.validate();
  if (cloud.empty()) throw EmptyCloud("cannot build an occupancy grid from an empty cloud");

  const auto in_footprint = [&](const Eigen::Vector3d& p) { return p.z() <= cfg.z_max; };
  const bool any_footprint = std::any_of(cloud.points.begin(), cloud.points.end(), in_footprint);

  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  for (const auto& p : cloud.points) {
    if (any_footprint && !in_footprint(p)) continue;
    min_x = std::min(min_x, p.x());
    min_y = std::min(min_y, p.y());
    max_x = std::max(max_x, p.x());
    max_y = std::max(max_y, p.y());
  }

  OccupancyGrid grid;
  grid.resolution = cfg.resolution;
  grid.z_min = cfg.z_min;
  grid.z_max = cfg.z_max;
  grid.origin = cfg.origin.value_or(Eigen::Vector2d(std::floor(min_x / cfg.resolution) * cfg.resolution,
                                                    std::floor(min_y / cfg.resolution) * cfg.resolution));
  const auto cell_of = [&](double coord, double origin) {
    return static_cast<long long>(std::floor((coord - origin) / cfg.resolution));
  };
  grid.size_x = cfg.size_x > 0 ? cfg.size_x
                               : static_cast<int>(std::max<long long>(1, cell_of(max_x, grid.origin.x()) + 1));
  grid.size_y = cfg.size_y > 0 ? cfg.size_y
                               : static_cast<int>(std::max<long long>(1, cell_of(max_y, grid.origin.y()) + 1));
  grid.cells.assign(static_cast<std::size_t>(grid.size_x) * grid.size_y, CellState::kUnknown);
  if (!any_footprint) return grid;

  long long fx0 = std::numeric_limits<long long>::max(), fy0 = fx0;
  long long fx1 = std::numeric_limits<long long>::min(), fy1 = fx1;
  for (const auto& p : cloud.points) {
    if (!in_footprint(p)) continue;
    const long long ix = cell_of(p.x(), grid.origin.x());
    const long long iy = cell_of(p.y(), grid.origin.y());
    fx0 = std::min(fx0, ix);
    fy0 = std::min(fy0, iy);
    fx1 = std::max(fx1, ix);
    fy1 = std::max(fy1, iy);
  }
  fx0 = std::max<long long>(fx0, 0);
  fy0 = std::max<long long>(fy0, 0);
  fx1 = std::min<long long>(fx1, grid.size_x - 1);
  fy1 = std::min<long long>(fy1, grid.size_y - 1);
  for (long long iy = fy0; iy <= fy1; ++iy) {
    for (long long ix = fx0; ix <= fx1; ++ix) {
      grid.cells[static_cast<std::size_t>(iy) * grid.size_x + ix] = CellState::kFree;
    }
  }
  for (const auto& p : cloud.points) {
    if (p.z() < cfg.z_min || p.z() > cfg.z_max) continue;
    const long long ix = cell_of(p.x(), grid.origin.x());
    const long long iy = cell_of(p.y(), grid.origin.y());
    if (ix < 0 || iy < 0 || ix >= grid.size_x || iy >= grid.size_y) continue;
    grid.cells[static_cast<std::size_t>(iy) * grid.size_x + ix] = CellState::kOccupied;
  }
  return grid;
}

}  // namespace glassdepth
