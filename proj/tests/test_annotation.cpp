#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include <Eigen/Geometry>

#include "glassdepth/annotation.hpp"
#include "glassdepth/error.hpp"
#include "support/synthetic.hpp"

using namespace glassdepth;
using Eigen::Vector3d;

namespace {

double sum_sq(const std::vector<Vector3d>& pts, const Vector3d& n, double d) {
  double s = 0.0;
  for (const auto& p : pts) s += (n.dot(p) + d) * (n.dot(p) + d);
  return s;
}

BinaryMask mask_from(int w, int h, const std::function<int(int, int)>& label) {
  std::vector<std::uint16_t> labels(static_cast<std::size_t>(w) * h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) labels[static_cast<std::size_t>(v) * w + u] = static_cast<std::uint16_t>(label(u, v));
  }
  return BinaryMask(w, h, std::move(labels));
}

}  // namespace

TEST_CASE("backproject examples") {
  const CameraIntrinsics k(500.0, 500.0, 320.0, 240.0);
  const Vector3d c = backproject(320.0, 240.0, 2.0, k);
  CHECK(c == Vector3d(0, 0, 2));
  const Vector3d p = backproject(100.0, 0.0, 1.0, CameraIntrinsics(100, 100, 0, 0));
  CHECK(p == Vector3d(1, 0, 1));
  CHECK_THROWS_AS(backproject(1, 1, 0.0, k), InvalidDepth);
  CHECK_THROWS_AS(backproject(1, 1, std::nan(""), k), InvalidDepth);
  CHECK_THROWS_AS(backproject(1, 1, -1.0, k), InvalidDepth);
}

TEST_CASE("backprojected points reproject to their pixel") {
  synth::Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    const CameraIntrinsics k(synth::uniform(rng, 100, 1500), synth::uniform(rng, 100, 1500),
                             synth::uniform(rng, 0, 640), synth::uniform(rng, 0, 480));
    const double u = synth::uniform(rng, 0, 640), v = synth::uniform(rng, 0, 480);
    const Eigen::Vector2d uv = k.project(backproject(u, v, synth::uniform(rng, 0.1, 20), k));
    CHECK(std::fabs(uv.x() - u) < 1e-9);
    CHECK(std::fabs(uv.y() - v) < 1e-9);
  }
}

TEST_CASE("fit_plane examples") {
  const std::vector<Vector3d> z2 = {{0, 0, 2}, {1, 0, 2}, {0, 1, 2}};
  const PlaneFit fit = fit_plane(z2);
  CHECK(fit.plane.normal().isApprox(Vector3d(0, 0, 1), 1e-12));
  CHECK(fit.plane.offset() == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(fit.residual_rms < 1e-12);

  const std::vector<Vector3d> line = {{0, 0, 1}, {0, 0, 2}, {0, 0, 3}};
  CHECK_THROWS_AS(fit_plane(line), DegenerateGeometry);
  const std::vector<Vector3d> same = {{1, 2, 3}, {1, 2, 3}, {1, 2, 3}, {1, 2, 3}};
  CHECK_THROWS_AS(fit_plane(same), DegenerateGeometry);
  const std::vector<Vector3d> two = {{1, 2, 3}, {2, 2, 3}};
  CHECK_THROWS_AS(fit_plane(two), InvalidArgument);
}

TEST_CASE("fit_plane of three points matches the cross product") {
  synth::Rng rng(22);
  for (int i = 0; i < 500; ++i) {
    std::vector<Vector3d> p;
    for (int j = 0; j < 3; ++j) p.emplace_back(synth::uniform(rng, -3, 3), synth::uniform(rng, -3, 3), synth::uniform(rng, 0.5, 6));
    Vector3d n = (p[1] - p[0]).cross(p[2] - p[0]);
    if (n.norm() < 0.5) continue;
    n.normalize();
    double d = -n.dot(p[0]);
    if (d > 0) n = -n, d = -d;
    const PlaneFit fit = fit_plane(p);
    CHECK((fit.plane.normal() - n).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::fabs(fit.plane.offset() - d) < 1e-9);
  }
}

TEST_CASE("fit_plane sign convention and residual") {
  // Plane through the origin: d = 0, normal points toward +z.
  const std::vector<Vector3d> through = {{1, 0, 1}, {-1, 0, -1}, {0, 1, 0}, {0, -1, 0}};
  const PlaneFit f0 = fit_plane(through);
  CHECK(std::fabs(f0.plane.offset()) < 1e-12);
  CHECK(f0.plane.normal().z() >= 0.0);

  // Points at z = 2 +/- 0.1 alternately: residual rms 0.1.
  const std::vector<Vector3d> noisy = {{0, 0, 2.1}, {1, 0, 1.9}, {0, 1, 1.9}, {1, 1, 2.1}};
  const PlaneFit f1 = fit_plane(noisy);
  CHECK(f1.plane.offset() <= 0.0);
  CHECK(f1.residual_rms == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("fit_plane is a local minimum of the squared algebraic distance") {
  synth::Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const PlaneModel truth = synth::random_plane(rng);
    const auto pts = synth::points_on_plane(rng, truth, 25, 2.0, 0.02);
    const PlaneFit fit = fit_plane(pts);
    const double best = sum_sq(pts, fit.plane.normal(), fit.plane.offset());
    for (int k = 0; k < 30; ++k) {
      Vector3d n = fit.plane.normal() + Vector3d(synth::gaussian(rng, 1e-3), synth::gaussian(rng, 1e-3),
                                                 synth::gaussian(rng, 1e-3));
      n.normalize();
      const double d = fit.plane.offset() + synth::gaussian(rng, 1e-3);
      CHECK(sum_sq(pts, n, d) >= best * (1 - 1e-12));
    }
  }
}

TEST_CASE("fit_plane is invariant to permutation and translation") {
  synth::Rng rng(24);
  for (int trial = 0; trial < 50; ++trial) {
    const PlaneModel truth = synth::random_plane(rng);
    auto pts = synth::points_on_plane(rng, truth, 12, 2.0, 0.01);
    const PlaneFit a = fit_plane(pts);
    std::shuffle(pts.begin(), pts.end(), rng);
    const PlaneFit b = fit_plane(pts);
    CHECK((a.plane.normal() - b.plane.normal()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::fabs(a.plane.offset() - b.plane.offset()) < 1e-9);

    const Vector3d delta(synth::uniform(rng, -0.3, 0.3), synth::uniform(rng, -0.3, 0.3),
                         synth::uniform(rng, -0.3, 0.3));
    for (auto& p : pts) p += delta;
    const PlaneFit c = fit_plane(pts);
    // Same orientation up to the sign convention, which may flip when the plane crosses the origin.
    const double sign = c.plane.normal().dot(a.plane.normal()) < 0 ? -1.0 : 1.0;
    CHECK((sign * c.plane.normal() - a.plane.normal()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::fabs(sign * c.plane.offset() - (a.plane.offset() - a.plane.normal().dot(delta))) < 1e-9);
  }
}

TEST_CASE("hull rasterization counts pixel centers inside or on the boundary") {
  const std::vector<PixelCoord> square = {{2, 2}, {5, 2}, {5, 5}, {2, 5}};
  CHECK(rasterize_hull(square, 10, 10).size() == 16);
  // Right triangle with legs of 4: lattice points with u + v <= 4.
  const std::vector<PixelCoord> tri = {{0, 0}, {4, 0}, {0, 4}};
  CHECK(rasterize_hull(tri, 10, 10).size() == 15);
  // Interior duplicate and collinear points do not change the hull.
  const std::vector<PixelCoord> extra = {{0, 0}, {4, 0}, {0, 4}, {2, 0}, {1, 1}, {1, 1}};
  CHECK(rasterize_hull(extra, 10, 10).size() == 15);
  // Clipped to the image.
  CHECK(rasterize_hull(square, 4, 4).size() == 4);
  const std::vector<PixelCoord> line = {{0, 0}, {2, 2}, {5, 5}};
  CHECK_THROWS_AS(rasterize_hull(line, 10, 10), DegenerateHull);
}

TEST_CASE("hull rasterization agrees with a barycentric point test") {
  synth::Rng rng(25);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PixelCoord> t(3);
    for (auto& p : t) p = {synth::uniform_int(rng, 0, 30), synth::uniform_int(rng, 0, 30)};
    const long area2 = static_cast<long>(t[1].u - t[0].u) * (t[2].v - t[0].v) -
                       static_cast<long>(t[1].v - t[0].v) * (t[2].u - t[0].u);
    if (area2 == 0) {
      CHECK_THROWS_AS(rasterize_hull(t, 32, 32), DegenerateHull);
      continue;
    }
    std::size_t expected = 0;
    for (int v = 0; v < 32; ++v) {
      for (int u = 0; u < 32; ++u) {
        long s[3];
        for (int i = 0; i < 3; ++i) {
          const auto& a = t[i];
          const auto& b = t[(i + 1) % 3];
          s[i] = static_cast<long>(b.u - a.u) * (v - a.v) - static_cast<long>(b.v - a.v) * (u - a.u);
        }
        const bool inside = (s[0] >= 0 && s[1] >= 0 && s[2] >= 0) || (s[0] <= 0 && s[1] <= 0 && s[2] <= 0);
        expected += inside;
      }
    }
    CHECK(rasterize_hull(t, 32, 32).size() == expected);
  }
}

TEST_CASE("match_annotation_to_mask examples") {
  const BinaryMask one = mask_from(20, 20, [](int u, int v) { return (u >= 5 && u < 15 && v >= 5 && v < 15) ? 1 : 0; });
  const std::vector<PixelCoord> inside = {{6, 6}, {12, 6}, {9, 12}};
  MaskMatch m = match_annotation_to_mask(inside, one);
  CHECK(m.instance_id == 1);
  CHECK(m.ratio == 1.0);

  const std::vector<PixelCoord> outside = {{0, 0}, {3, 0}, {0, 3}};
  CHECK_THROWS_AS(match_annotation_to_mask(outside, one), NoOverlap);

  // 10 x 10 hull, 70 pixels on instance 2, 30 on instance 1.
  const BinaryMask two = mask_from(20, 20, [](int u, int) { return u < 3 ? 1 : 2; });
  const std::vector<PixelCoord> square = {{0, 0}, {9, 0}, {9, 9}, {0, 9}};
  m = match_annotation_to_mask(square, two);
  CHECK(m.instance_id == 2);
  CHECK(m.ratio == doctest::Approx(0.7));
  CHECK(m.hull_pixels == 100);
  CHECK(m.ratios[1] == doctest::Approx(0.3));

  // Equal split goes to the smaller id.
  const BinaryMask half = mask_from(20, 20, [](int u, int) { return u < 5 ? 2 : 1; });
  m = match_annotation_to_mask(square, half);
  CHECK(m.instance_id == 1);
  CHECK(m.ratio == doctest::Approx(0.5));
}

TEST_CASE("intersection-over-hull ratios are bounded") {
  synth::Rng rng(26);
  for (int trial = 0; trial < 100; ++trial) {
    const int cut1 = synth::uniform_int(rng, 1, 30), cut2 = synth::uniform_int(rng, 1, 30);
    const BinaryMask m = mask_from(32, 32, [&](int u, int v) {
      if (u < cut1 && v < cut2) return 1;
      if (u >= cut1 && v >= cut2) return 2;
      return 0;
    });
    if (m.instance_count() < 2) continue;
    std::vector<PixelCoord> pts(5);
    for (auto& p : pts) p = {synth::uniform_int(rng, 0, 31), synth::uniform_int(rng, 0, 31)};
    try {
      const MaskMatch r = match_annotation_to_mask(pts, m);
      double total = 0.0;
      for (std::size_t id = 1; id < r.ratios.size(); ++id) {
        CHECK(r.ratios[id] >= 0.0);
        CHECK(r.ratios[id] <= 1.0);
        total += r.ratios[id];
      }
      CHECK(total <= 1.0 + 1e-12);
      CHECK(r.ratio == *std::max_element(r.ratios.begin() + 1, r.ratios.end()));
    } catch (const DegenerateData&) {
    }
  }
}

TEST_CASE("ray_plane_depth examples") {
  const PlaneModel z2(Vector3d(0, 0, 1), -2.0);
  const CameraIntrinsics k(500, 500, 320, 240);
  CHECK(ray_plane_depth(320, 240, z2, k) == 2.0);
  synth::Rng rng(27);
  for (int i = 0; i < 100; ++i) {
    const CameraIntrinsics ki(synth::uniform(rng, 100, 900), synth::uniform(rng, 100, 900),
                              synth::uniform(rng, 0, 640), synth::uniform(rng, 0, 480));
    CHECK(ray_plane_depth(synth::uniform(rng, 0, 640), synth::uniform(rng, 0, 480), z2, ki) ==
          doctest::Approx(2.0).epsilon(1e-15));
  }
  // Plane x = 1 contains the principal ray direction.
  CHECK_THROWS_AS(ray_plane_depth(320, 240, PlaneModel(Vector3d(1, 0, 0), -1.0), k), ParallelRay);
  CHECK_THROWS_AS(ray_plane_depth(320, 240, PlaneModel(Vector3d(0, 0, 1), 2.0), k), BehindCamera);
}

TEST_CASE("fitting then intersecting reproduces depths on the plane") {
  synth::Rng rng(28);
  const CameraIntrinsics k(525, 525, 319.5, 239.5);
  for (int trial = 0; trial < 100; ++trial) {
    Vector3d n(synth::uniform(rng, -0.5, 0.5), synth::uniform(rng, -0.5, 0.5), 1.0);
    const PlaneModel plane(n, -synth::uniform(rng, 1.0, 5.0));
    std::vector<Vector3d> pts;
    std::vector<std::pair<double, double>> pix;
    for (int i = 0; i < 10; ++i) {
      const double u = synth::uniform(rng, 0, 639), v = synth::uniform(rng, 0, 479);
      const double z = ray_plane_depth(u, v, plane, k);
      pts.push_back(backproject(u, v, z, k));
      pix.emplace_back(u, v);
    }
    const PlaneFit fit = fit_plane(pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double z = ray_plane_depth(pix[i].first, pix[i].second, fit.plane, k);
      CHECK(std::fabs(z - pts[i].z()) / pts[i].z() < 1e-9);
    }
  }
}

TEST_CASE("ground truth on a synthetic glass pane equals the analytic plane") {
  const synth::GlassScene scene = synth::glass_scene(3);
  GlassAnnotation ann;
  ann.sample_id = "s";
  ann.instances.push_back({scene.clicks, std::nullopt, std::nullopt, 0.0});
  const GroundTruthResult r = generate_ground_truth(scene.raw, scene.mask, ann, scene.k);
  REQUIRE(r.outcomes.size() == 1);
  CHECK(r.outcomes[0].ok);
  CHECK(r.outcomes[0].matched_mask_id == 1);
  CHECK(r.excluded_instances.empty());
  CHECK(r.ground_truth.evaluation_mask.count() == 0);
  std::size_t glass = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < scene.raw.size(); ++i) {
    if (scene.mask[i]) {
      ++glass;
      worst = std::max(worst, std::fabs(r.ground_truth.depth[i] - scene.truth[i]));
    } else {
      // Locality: untouched bit for bit.
      CHECK(std::memcmp(&r.ground_truth.depth.values()[i], &scene.raw.values()[i], sizeof(double)) == 0);
    }
  }
  CHECK(glass == r.outcomes[0].filled_pixels);
  CHECK(worst < 1e-9);
}

TEST_CASE("ground truth without glass is the raw map") {
  synth::Rng rng(29);
  DepthMap raw(16, 12);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (synth::uniform(rng, 0, 1) < 0.8) raw.set(i, synth::uniform(rng, 0.5, 4));
  }
  const BinaryMask none(16, 12, std::vector<std::uint16_t>(16 * 12, 0));
  const GroundTruthResult r = generate_ground_truth(raw, none, {}, synth::default_intrinsics(16, 12));
  CHECK(r.ground_truth.depth == raw);
  CHECK(r.ground_truth.evaluation_mask.count() == 0);
}

TEST_CASE("unannotated and failing instances are excluded without stopping others") {
  const synth::GlassScene scene = synth::glass_scene(4);
  // Second instance: a block in the bottom-left corner.
  std::vector<std::uint16_t> labels(scene.mask.labels().begin(), scene.mask.labels().end());
  for (int v = 440; v < 470; ++v) {
    for (int u = 10; u < 60; ++u) labels[static_cast<std::size_t>(v) * scene.width + u] = 2;
  }
  const BinaryMask mask(scene.width, scene.height, labels);

  GlassAnnotation ann;
  ann.instances.push_back({{{20, 450}, {30, 450}, {25, 450}}, {}, {}, 0.0});  // collinear
  ann.instances.push_back({scene.clicks, {}, {}, 0.0});
  const GroundTruthResult r = generate_ground_truth(scene.raw, mask, ann, scene.k);
  REQUIRE(r.outcomes.size() == 2);
  CHECK_FALSE(r.outcomes[0].ok);
  CHECK_FALSE(r.outcomes[0].error.empty());
  CHECK(r.outcomes[1].ok);
  CHECK(r.excluded_instances == std::vector<int>{2});
  for (std::size_t i = 0; i < mask.size(); ++i) {
    CHECK(r.ground_truth.evaluation_mask[i] == (mask[i] == 2));
    if (mask[i] == 1) CHECK(std::fabs(r.ground_truth.depth[i] - scene.truth[i]) < 1e-9);
    if (mask[i] == 2) CHECK(r.ground_truth.depth[i] == scene.raw[i]);
  }
}

TEST_CASE("a second annotation for an already matched instance is rejected") {
  const synth::GlassScene scene = synth::glass_scene(5);
  GlassAnnotation ann;
  ann.instances.push_back({scene.clicks, {}, {}, 0.0});
  ann.instances.push_back({scene.clicks, {}, {}, 0.0});
  const GroundTruthResult r = generate_ground_truth(scene.raw, scene.mask, ann, scene.k);
  CHECK(r.outcomes[0].ok);
  CHECK_FALSE(r.outcomes[1].ok);
  CHECK(r.excluded_instances.empty());
}

TEST_CASE("solve_instance precondition errors") {
  const synth::GlassScene scene = synth::glass_scene(6);
  InstanceAnnotation two{{scene.clicks[0], scene.clicks[1]}, {}, {}, 0.0};
  CHECK_THROWS_WITH_AS(solve_instance(scene.raw, scene.mask, two, scene.k), "insufficient points", InvalidArgument);
  InstanceAnnotation oob = {scene.clicks, {}, {}, 0.0};
  oob.points.push_back({scene.width, 0});
  CHECK_THROWS_AS(solve_instance(scene.raw, scene.mask, oob, scene.k), InvalidArgument);
  DepthMap holes = scene.raw;
  holes.invalidate(scene.clicks[2].u, scene.clicks[2].v);
  InstanceAnnotation ok = {scene.clicks, {}, {}, 0.0};
  CHECK_THROWS_WITH_AS(solve_instance(holes, scene.mask, ok, scene.k), "invalid depth at click 2", InvalidDepth);
  CHECK_THROWS_AS(generate_ground_truth(scene.raw, BinaryMask(2, 2, {0, 0, 0, 0}), {}, scene.k), DimensionMismatch);
}

TEST_CASE("annotation validation and review status tokens") {
  GlassAnnotation ann;
  ann.instances.push_back({{{0, 0}, {9, 0}, {0, 9}}, {}, {}, 0.0});
  CHECK_NOTHROW(ann.validate(10, 10));
  CHECK_THROWS_AS(ann.validate(9, 10), InvalidArgument);
  for (auto s : {ReviewStatus::kPending, ReviewStatus::kAccepted, ReviewStatus::kRejected}) {
    CHECK(review_status_from_string(to_string(s)) == s);
  }
  CHECK_THROWS_AS(review_status_from_string("approved"), BadFormat);
}
