#include "glassdepth/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "glassdepth/error.hpp"

namespace glassdepth {

namespace {

// Jointly valid (prior, raw) values in row-major pixel order.
struct ValidPairs {
  std::vector<double> prior;
  std::vector<double> raw;
  std::vector<std::uint32_t> pixel;  // flat pixel index of each pair
};

ValidPairs gather_pairs(const DepthMap& prior, const DepthMap& raw) {
  if (!prior.same_shape(raw)) {
    throw DimensionMismatch("prior and raw depth maps differ in size");
  }
  ValidPairs pairs;
  pairs.prior.reserve(raw.size());
  pairs.raw.reserve(raw.size());
  pairs.pixel.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw.valid(i) && prior.valid(i)) {
      pairs.prior.push_back(prior[i]);
      pairs.raw.push_back(raw[i]);
      pairs.pixel.push_back(static_cast<std::uint32_t>(i));
    }
  }
  return pairs;
}

// Fixed lane split so the sum is reproducible and independent of threading.
double mean_abs_residual(const ValidPairs& pairs, const AffineParams& p) {
  const std::size_t n = pairs.raw.size();
  const double* prior = pairs.prior.data();
  const double* raw = pairs.raw.data();
  const double s = p.scale;
  const double t = p.shift;
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc[0] += std::fabs(s * prior[i] + t - raw[i]);
    acc[1] += std::fabs(s * prior[i + 1] + t - raw[i + 1]);
    acc[2] += std::fabs(s * prior[i + 2] + t - raw[i + 2]);
    acc[3] += std::fabs(s * prior[i + 3] + t - raw[i + 3]);
  }
  for (; i < n; ++i) acc[0] += std::fabs(s * prior[i] + t - raw[i]);
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) / static_cast<double>(n);
}

template <typename PriorAt, typename RawAt>
AffineParams solve_centered(std::size_t n, PriorAt prior_at, RawAt raw_at, double min_spread) {
  if (n < 2) throw DegenerateSamples("affine fit needs at least two samples");
  double sum_p = 0.0, sum_r = 0.0, sum_pp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum_p += prior_at(i);
    sum_r += raw_at(i);
    sum_pp += prior_at(i) * prior_at(i);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double mean_p = sum_p * inv_n;
  const double mean_r = sum_r * inv_n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dp = prior_at(i) - mean_p;
    sxx += dp * dp;
    sxy += dp * (raw_at(i) - mean_r);
  }
  const double rms = std::sqrt(sum_pp * inv_n);
  const double spread = rms > 0.0 ? std::sqrt(sxx * inv_n) / rms : 0.0;
  if (!(sxx > 0.0) || !(spread >= min_spread)) {
    throw DegenerateSamples("prior values have no usable spread");
  }
  const double s = sxy / sxx;
  const double t = mean_r - s * mean_p;
  if (!std::isfinite(s) || !std::isfinite(t)) {
    throw DegenerateSamples("affine fit is not finite");
  }
  return {s, t};
}

// Unbiased draw from [0, n) using only the fully specified mt19937_64 output.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % n;
  }
}

// Floyd's algorithm: m distinct positions out of [0, n).
void sample_without_replacement(std::mt19937_64& rng, std::size_t n, std::size_t m,
                                std::vector<std::size_t>& out) {
  out.clear();
  for (std::size_t j = n - m; j < n; ++j) {
    const auto r = static_cast<std::size_t>(uniform_below(rng, j + 1));
    if (std::find(out.begin(), out.end(), r) == out.end()) {
      out.push_back(r);
    } else {
      out.push_back(j);
    }
  }
}

}  // namespace

void RansacConfig::validate() const {
  if (grid_n < 1) throw InvalidArgument("grid_n must be >= 1");
  if (iterations_per_patch < 1) throw InvalidArgument("iterations_per_patch must be >= 1");
  if (samples_per_iteration < 2) throw InvalidArgument("samples_per_iteration must be >= 2");
  if (!(min_prior_spread > 0.0)) throw InvalidArgument("min_prior_spread must be > 0");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

std::string to_string(AlignmentMethod method) {
  return method == AlignmentMethod::kGlobal ? "global" : "local_ransac";
}

PatchBounds patch_bounds(int width, int height, int grid_n, PatchIndex patch) {
  const int pw = width / grid_n;
  const int ph = height / grid_n;
  PatchBounds b{};
  b.u_begin = patch.col * pw;
  b.u_end = patch.col == grid_n - 1 ? width : (patch.col + 1) * pw;
  b.v_begin = patch.row * ph;
  b.v_end = patch.row == grid_n - 1 ? height : (patch.row + 1) * ph;
  return b;
}

AffineParams solve_affine_lsq(std::span<const PixelSample> samples, double min_prior_spread) {
  return solve_centered(
      samples.size(), [&](std::size_t i) { return samples[i].prior_depth; },
      [&](std::size_t i) { return samples[i].sensor_depth; }, min_prior_spread);
}

double candidate_error(const DepthMap& prior, const DepthMap& raw, const AffineParams& params) {
  const ValidPairs pairs = gather_pairs(prior, raw);
  if (pairs.raw.empty()) throw NoValidPixels("no pixel is valid in both prior and raw depth");
  return mean_abs_residual(pairs, params);
}

AlignmentResult global_align(const DepthMap& prior, const DepthMap& raw,
                             double min_prior_spread) {
  const ValidPairs pairs = gather_pairs(prior, raw);
  if (pairs.raw.empty()) throw NoValidPixels("no pixel is valid in both prior and raw depth");
  AlignmentResult result;
  result.method = AlignmentMethod::kGlobal;
  result.params = solve_centered(
      pairs.raw.size(), [&](std::size_t i) { return pairs.prior[i]; },
      [&](std::size_t i) { return pairs.raw[i]; }, min_prior_spread);
  result.mean_abs_error = mean_abs_residual(pairs, result.params);
  result.candidates_evaluated = 1;
  return result;
}

AlignmentResult local_ransac_align(const DepthMap& prior, const DepthMap& raw,
                                   const RansacConfig& cfg, std::vector<RansacCandidate>* trace) {
  cfg.validate();
  const ValidPairs pairs = gather_pairs(prior, raw);
  const int n = cfg.grid_n;
  const int width = raw.width();
  const int height = raw.height();
  if (width < n || height < n) {
    throw InvalidArgument("image must be at least grid_n pixels per side");
  }

  // Pair indices bucketed per patch, each bucket in row-major pixel order.
  const int pw = width / n;
  const int ph = height / n;
  std::vector<std::vector<std::uint32_t>> buckets(static_cast<std::size_t>(n) * n);
  for (std::size_t k = 0; k < pairs.pixel.size(); ++k) {
    const int u = static_cast<int>(pairs.pixel[k] % static_cast<std::uint32_t>(width));
    const int v = static_cast<int>(pairs.pixel[k] / static_cast<std::uint32_t>(width));
    const int col = std::min(u / pw, n - 1);
    const int row = std::min(v / ph, n - 1);
    buckets[static_cast<std::size_t>(row) * n + col].push_back(static_cast<std::uint32_t>(k));
  }

  // Draw and fit sequentially so the candidate list depends only on the seed.
  std::mt19937_64 rng(cfg.rng_seed);
  const auto m = static_cast<std::size_t>(cfg.samples_per_iteration);
  std::vector<RansacCandidate> candidates;
  candidates.reserve(buckets.size() * static_cast<std::size_t>(cfg.iterations_per_patch));
  std::vector<std::size_t> picks;
  std::vector<double> sp(m), sr(m);
  std::size_t skipped = 0;
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      const auto& bucket = buckets[static_cast<std::size_t>(row) * n + col];
      for (int it = 0; it < cfg.iterations_per_patch; ++it) {
        if (bucket.size() < m) {
          ++skipped;
          continue;
        }
        sample_without_replacement(rng, bucket.size(), m, picks);
        for (std::size_t j = 0; j < m; ++j) {
          sp[j] = pairs.prior[bucket[picks[j]]];
          sr[j] = pairs.raw[bucket[picks[j]]];
        }
        try {
          const AffineParams params = solve_centered(
              m, [&](std::size_t i) { return sp[i]; }, [&](std::size_t i) { return sr[i]; },
              cfg.min_prior_spread);
          candidates.push_back({params, {row, col}, it, 0.0});
        } catch (const DegenerateSamples&) {
          ++skipped;
        }
      }
    }
  }
  if (candidates.empty()) {
    throw NoViableCandidate("every RANSAC iteration was skipped (too few valid pixels or no "
                            "prior spread in every patch)");
  }

  const auto score_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      candidates[c].error = mean_abs_residual(pairs, candidates[c].params);
    }
  };
  const auto workers = static_cast<std::size_t>(
      std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), candidates.size()));
  if (workers <= 1) {
    score_range(0, candidates.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (candidates.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(candidates.size(), begin + chunk);
      if (begin < end) pool.emplace_back(score_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  // Strict < keeps the earliest candidate on ties.
  std::size_t best = 0;
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    if (candidates[c].error < candidates[best].error) best = c;
  }

  AlignmentResult result;
  result.method = AlignmentMethod::kLocalRansac;
  result.params = candidates[best].params;
  result.mean_abs_error = candidates[best].error;
  result.winning_patch = candidates[best].patch;
  result.winning_iteration = candidates[best].iteration;
  result.candidates_evaluated = candidates.size();
  result.iterations_skipped = skipped;
  if (trace) *trace = std::move(candidates);
  return result;
}

AffineApplication apply_affine(const DepthMap& prior, const AffineParams& params) {
  AffineApplication out{DepthMap(prior.width(), prior.height()), 0};
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (!prior.valid(i)) continue;
    const double d = params.apply(prior[i]);
    if (d < 0.0) {
      ++out.negative_count;
    } else {
      out.depth.set(i, d);
    }
  }
  return out;
}

DepthMap invert_prior(const DepthMap& prior) {
  DepthMap out(prior.width(), prior.height());
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (prior.valid(i) && prior[i] > 0.0) out.set(i, 1.0 / prior[i]);
  }
  return out;
}

}  // namespace glassdepth
