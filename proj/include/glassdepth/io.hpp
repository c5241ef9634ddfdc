#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "glassdepth/annotation.hpp"
#include "glassdepth/core_types.hpp"
#include "glassdepth/geometry_export.hpp"

namespace glassdepth::io {

namespace fs = std::filesystem;

inline constexpr double kMatterportDepthScale = 4000.0;  // units per meter
inline constexpr double kDefaultDepthScale = 1000.0;

// ---- files ----------------------------------------------------------------

/// Whole file as bytes. Throws IoError.
std::string read_file(const fs::path& path);

/// Writes to a sibling temporary and renames over `path`, so readers never
/// see a partial file. Creates missing parent directories.
void write_file_atomic(const fs::path& path, std::string_view bytes);

// ---- PNG ------------------------------------------------------------------

/// Decoded PNG samples, 8 or 16 bits widened to uint16.
struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;   // 1 gray, 2 gray+alpha, 3 rgb, 4 rgba
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint16_t> samples;  // row-major, interleaved
};

RawImage decode_png(std::string_view bytes);
std::string encode_png(const RawImage& image);

// ---- depth ----------------------------------------------------------------

/// 16-bit single-channel PNG; 0 is invalid, other values are raw / scale meters.
DepthMap load_depth_png16(const fs::path& path, double scale);
/// Rounds to the nearest unit; invalid pixels are written as 0. Throws
/// InvalidArgument when a depth does not fit in 16 bits.
void save_depth_png16(const DepthMap& depth, const fs::path& path, double scale);

/// Float prior: PFM ("Pf", row order bottom-up per the format) or a 2-D
/// little-endian float32/float64 .npy array. Non-finite values are invalid.
DepthMap load_prior(const fs::path& path);
std::string encode_pfm(const DepthMap& depth);
void save_pfm(const DepthMap& depth, const fs::path& path);
void save_npy(const DepthMap& depth, const fs::path& path);  // float64

/// Picks the format from the extension: .png (16-bit, `scale`), .pfm, .npy.
DepthMap load_depth_any(const fs::path& path, double scale);
void save_depth_any(const DepthMap& depth, const fs::path& path, double scale);

// ---- masks ----------------------------------------------------------------

enum class MaskEncoding {
  kAuto,      // one distinct non-zero value: binary, otherwise instance labels
  kBinary,    // non-zero pixels, split into 8-connected components
  kInstance,  // every distinct non-zero value (or color) is an instance
};

/// Instance ids are renumbered to 1..n in raster order of first appearance.
BinaryMask load_mask(const fs::path& path, MaskEncoding encoding = MaskEncoding::kAuto);
void save_mask(const BinaryMask& mask, const fs::path& path);

/// 8-bit PNG, 255 where set.
PixelMask load_pixel_mask(const fs::path& path);
void save_pixel_mask(const PixelMask& mask, const fs::path& path);

// ---- structured records ---------------------------------------------------

struct IntrinsicsRecord {
  CameraIntrinsics k;
  int width = 0;
  int height = 0;

  friend bool operator==(const IntrinsicsRecord&, const IntrinsicsRecord&) = default;
};

std::string serialize_intrinsics(const IntrinsicsRecord& record);
IntrinsicsRecord parse_intrinsics(std::string_view text);
IntrinsicsRecord load_intrinsics(const fs::path& path);
void save_intrinsics(const IntrinsicsRecord& record, const fs::path& path);

std::string serialize_annotation(const GlassAnnotation& annotation);
GlassAnnotation parse_annotation(std::string_view text);
GlassAnnotation load_annotation(const fs::path& path);
void save_annotation(const GlassAnnotation& annotation, const fs::path& path);

// ---- geometry -------------------------------------------------------------

/// Binary little-endian PLY with double x, y, z (+ uchar rgb when colored).
std::string encode_ply(const PointCloud& cloud);
void save_cloud_ply(const PointCloud& cloud, const fs::path& path);
PointCloud load_cloud_ply(const fs::path& path);

/// Map-server style output: 8-bit P5 graymap (top row = largest y) plus a
/// YAML sidecar with the same stem holding resolution, origin and band.
inline constexpr std::uint8_t kPgmOccupied = 0;
inline constexpr std::uint8_t kPgmFree = 254;
inline constexpr std::uint8_t kPgmUnknown = 205;

void save_occupancy_pgm(const OccupancyGrid& grid, const fs::path& pgm_path);
OccupancyGrid load_occupancy_pgm(const fs::path& pgm_path);
fs::path occupancy_sidecar_path(const fs::path& pgm_path);

}  // namespace glassdepth::io
