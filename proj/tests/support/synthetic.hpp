#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "glassdepth/annotation.hpp"
#include "glassdepth/core_types.hpp"
#include "glassdepth/io.hpp"

namespace synth {

using glassdepth::BinaryMask;
using glassdepth::CameraIntrinsics;
using glassdepth::DepthMap;
using glassdepth::PixelCoord;
using glassdepth::PixelMask;
using glassdepth::PlaneModel;

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi);
int uniform_int(Rng& rng, int lo, int hi);  // inclusive
double gaussian(Rng& rng, double sigma);

CameraIntrinsics default_intrinsics(int width = 640, int height = 480);

/// Camera-frame depth of a random box-furnished room, bounded to [0.5, 12] m.
DepthMap room_depth(Rng& rng, const CameraIntrinsics& k, int width, int height);

struct AffineScene {
  DepthMap metric;   // clean metric depth
  DepthMap prior;    // (metric - t) / s
  DepthMap raw;      // noisy metric, corrupted inside `corrupted`
  PixelMask corrupted;
  double scale = 1.0;
  double shift = 0.0;
  double corrupted_fraction = 0.0;
  double mean_clean_depth = 0.0;
};

/// s in [0.5, 3], t in [-0.5, 0.5], multiplicative Gaussian noise, and one
/// rectangle covering a fraction in [min_frac, max_frac] of the image whose
/// raw depth comes from an unrelated room.
AffineScene affine_scene(Rng& rng, int width = 640, int height = 480, double noise = 0.01,
                         double min_frac = 0.10, double max_frac = 0.25);

/// Mean |s*p + t - r| over clean, jointly valid pixels.
double clean_region_error(const AffineScene& scene, double s, double t);

/// Random unit normal with the plane passing at distance in [0.5, 5].
PlaneModel random_plane(Rng& rng);
std::vector<Eigen::Vector3d> points_on_plane(Rng& rng, const PlaneModel& plane, int count,
                                             double extent = 2.0, double sigma = 0.0);

/// A framed glass pane in front of a room. The frame bars lie in the glass
/// plane but above and below the obstacle band; raw depth sees the frame and
/// looks through the pane at the room behind.
struct GlassScene {
  CameraIntrinsics k;
  int width = 0;
  int height = 0;
  double camera_height = 1.0;
  PlaneModel glass{Eigen::Vector3d::UnitZ(), -1.0};
  DepthMap truth;  // pane and frame at the plane, room elsewhere
  DepthMap raw;    // background through the pane
  BinaryMask mask;
  PixelMask frame;
  std::vector<PixelCoord> clicks;  // frame pixels spanning the pane
};

GlassScene glass_scene(std::uint64_t seed, int width = 640, int height = 480);

/// Writes one dataset sample (16-bit depth at `scale`) and the manifest.
void write_glass_sample(const GlassScene& scene, const std::filesystem::path& root,
                        const std::string& id, double scale = 1000.0, bool write_clicks = true,
                        glassdepth::ReviewStatus status = glassdepth::ReviewStatus::kAccepted);

/// 16-bit quantization round trip, as a dataset reload would see the map.
DepthMap quantize(const DepthMap& depth, double scale);

std::filesystem::path temp_dir(const std::string& tag);

}  // namespace synth
