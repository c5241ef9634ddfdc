#include "glassdepth/colormap.hpp"

#include <algorithm>
#include <cmath>

namespace glassdepth {

Rgb ramp_color(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  // Polynomial fit of the turbo colormap.
  const double r = 0.13572138 + t * (4.61539260 + t * (-42.66032258 + t * (132.13108234 +
                   t * (-152.94239396 + t * 59.28637943))));
  const double g = 0.09140261 + t * (2.19418839 + t * (4.84296658 + t * (-14.18503333 +
                   t * (4.27729857 + t * 2.82956604))));
  const double b = 0.10667330 + t * (12.64194608 + t * (-60.58204836 + t * (110.36276771 +
                   t * (-89.90310912 + t * 27.34824973))));
  auto to_byte = [](double c) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
  };
  return {to_byte(r), to_byte(g), to_byte(b)};
}

io::RawImage colorize_depth(const DepthMap& depth, double lo, double hi) {
  io::RawImage img{depth.width(), depth.height(), 3, 8,
                   std::vector<std::uint16_t>(depth.size() * 3, 0)};
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!depth.valid(i)) continue;
    const Rgb c = ramp_color((depth[i] - lo) / span);
    for (int ch = 0; ch < 3; ++ch) img.samples[3 * i + ch] = c[ch];
  }
  return img;
}

Rgb instance_color(int id) {
  if (id <= 0) return {40, 40, 40};
  // Golden-ratio hue steps keep neighbouring ids apart.
  const double hue = std::fmod(0.13 + 0.618033988749895 * id, 1.0);
  return ramp_color(0.1 + 0.8 * hue);
}

}  // namespace glassdepth
