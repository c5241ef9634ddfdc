#pragma once

#include <array>
#include <cstdint>

#include "glassdepth/core_types.hpp"
#include "glassdepth/io.hpp"

namespace glassdepth {

using Rgb = std::array<std::uint8_t, 3>;

/// Turbo-like ramp for t in [0, 1]; values outside are clamped.
Rgb ramp_color(double t);

/// Maps [lo, hi] meters onto the ramp; invalid pixels are black.
io::RawImage colorize_depth(const DepthMap& depth, double lo, double hi);

/// Distinct color per instance id; background is dark gray.
Rgb instance_color(int id);

}  // namespace glassdepth
