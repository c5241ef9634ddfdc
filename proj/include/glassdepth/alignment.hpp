#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "glassdepth/core_types.hpp"

namespace glassdepth {

/// Prior spread (stddev / rms of the sampled prior values) below which a
/// sample set is rejected as degenerate.
inline constexpr double kDefaultMinPriorSpread = 1e-6;

struct RansacConfig {
  int grid_n = 8;                 // patches per image side
  int iterations_per_patch = 20;  // candidate draws per patch
  int samples_per_iteration = 32; // pixels per candidate fit
  std::uint64_t rng_seed = 0;
  double min_prior_spread = kDefaultMinPriorSpread;
  int threads = 1;  // candidate scoring workers; results do not depend on it

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

enum class AlignmentMethod { kGlobal, kLocalRansac };

std::string to_string(AlignmentMethod method);

struct PatchIndex {
  int row = 0;
  int col = 0;

  friend bool operator==(const PatchIndex&, const PatchIndex&) = default;
};

struct AlignmentResult {
  AlignmentMethod method = AlignmentMethod::kLocalRansac;
  AffineParams params;
  double mean_abs_error = 0.0;  // meters, over jointly valid pixels
  PatchIndex winning_patch;
  int winning_iteration = 0;
  std::size_t candidates_evaluated = 0;
  std::size_t iterations_skipped = 0;
};

/// Closed-form minimizer of sum (s * prior + t - sensor)^2.
/// Throws DegenerateSamples for fewer than two samples or when the prior
/// spread is below `min_prior_spread`.
AffineParams solve_affine_lsq(std::span<const PixelSample> samples,
                              double min_prior_spread = kDefaultMinPriorSpread);

/// Mean of |s * prior + t - raw| over pixels valid in both maps.
/// Throws DimensionMismatch or NoValidPixels.
double candidate_error(const DepthMap& prior, const DepthMap& raw, const AffineParams& params);

/// Least squares over every jointly valid pixel.
AlignmentResult global_align(const DepthMap& prior, const DepthMap& raw,
                             double min_prior_spread = kDefaultMinPriorSpread);

struct RansacCandidate {
  AffineParams params;
  PatchIndex patch;
  int iteration = 0;
  double error = 0.0;  // mean absolute error over the whole image
};

/// Patch-wise RANSAC: every patch of an N x N grid proposes K candidates fit
/// to M random valid pixels of that patch, each candidate is scored over the
/// whole image, and the lowest-error candidate wins (earliest on ties).
/// `trace` receives every evaluated candidate in draw order.
AlignmentResult local_ransac_align(const DepthMap& prior, const DepthMap& raw,
                                   const RansacConfig& cfg = {},
                                   std::vector<RansacCandidate>* trace = nullptr);

struct AffineApplication {
  DepthMap depth;
  std::size_t negative_count = 0;  // pixels invalidated because s*d+t < 0
};

/// Per-pixel s * d + t. Invalid stays invalid, negative results become invalid.
AffineApplication apply_affine(const DepthMap& prior, const AffineParams& params);

/// Disparity to depth: 1/d for d > 0, everything else invalid.
DepthMap invert_prior(const DepthMap& prior);

/// Half-open pixel ranges of patch (row, col) in an N x N split; the last
/// row and column absorb the remainder.
struct PatchBounds {
  int u_begin, u_end, v_begin, v_end;
};
PatchBounds patch_bounds(int width, int height, int grid_n, PatchIndex patch);

}  // namespace glassdepth
