#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "glassdepth/error.hpp"
#include "glassdepth/io.hpp"
#include "support/synthetic.hpp"

using namespace glassdepth;
namespace fs = std::filesystem;

namespace {

io::RawImage gray16(int w, int h, std::vector<std::uint16_t> samples) {
  return io::RawImage{w, h, 1, 16, std::move(samples)};
}

}  // namespace

TEST_CASE("png16 depth scale and invalid zero") {
  const fs::path dir = synth::temp_dir("io_png");
  io::write_file_atomic(dir / "d.png", io::encode_png(gray16(2, 1, {4000, 0})));
  const DepthMap m = io::load_depth_png16(dir / "d.png", io::kMatterportDepthScale);
  CHECK(m[0] == 1.0);
  CHECK_FALSE(m.valid(1));
  const DepthMap mm = io::load_depth_png16(dir / "d.png", 1000.0);
  CHECK(mm[0] == 4.0);
}

TEST_CASE("png16 depth round trip within half a unit") {
  synth::Rng rng(51);
  const fs::path dir = synth::temp_dir("io_png_rt");
  DepthMap d(17, 9);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (synth::uniform(rng, 0, 1) < 0.8) d.set(i, synth::uniform(rng, 0.01, 16));
  }
  io::save_depth_png16(d, dir / "d.png", 4000.0);
  const DepthMap back = io::load_depth_png16(dir / "d.png", 4000.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    REQUIRE(back.valid(i) == d.valid(i));
    if (d.valid(i)) CHECK(std::fabs(back[i] - d[i]) <= 0.5 / 4000.0 + 1e-12);
  }
  CHECK_THROWS_AS(io::save_depth_png16(DepthMap(1, 1, {17.0}), dir / "big.png", 4000.0), InvalidArgument);
}

TEST_CASE("pfm and npy priors round trip") {
  synth::Rng rng(52);
  const fs::path dir = synth::temp_dir("io_prior");
  DepthMap d(7, 5);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i % 6) d.set(i, static_cast<float>(synth::uniform(rng, 0.01, 2)));
  }
  io::save_pfm(d, dir / "p.pfm");
  io::save_npy(d, dir / "p.npy");
  const DepthMap pfm = io::load_prior(dir / "p.pfm");
  const DepthMap npy = io::load_depth_any(dir / "p.npy", 1.0);
  REQUIRE(pfm.width() == 7);
  REQUIRE(pfm.height() == 5);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(std::isfinite(pfm.values()[i]) == (i % 6 != 0));
    CHECK(std::isfinite(npy.values()[i]) == (i % 6 != 0));
    if (i % 6) {
      CHECK(pfm.values()[i] == d.values()[i]);
      CHECK(npy.values()[i] == d.values()[i]);
    }
  }
}

TEST_CASE("pfm rows are stored bottom-up") {
  const DepthMap d(1, 2, {1.0, 2.0});
  const std::string bytes = io::encode_pfm(d);
  float first = 0.0f;
  std::memcpy(&first, bytes.data() + bytes.size() - 2 * sizeof(float), sizeof(float));
  CHECK(first == 2.0f);
}

TEST_CASE("all-invalid prior loads as all invalid") {
  const fs::path dir = synth::temp_dir("io_nan");
  io::save_pfm(DepthMap(3, 3), dir / "n.pfm");
  CHECK(valid_pixel_indices(io::load_prior(dir / "n.pfm")).empty());
}

TEST_CASE("malformed depth files are rejected") {
  const fs::path dir = synth::temp_dir("io_bad");
  io::write_file_atomic(dir / "short.pfm", "Pf\n4 4\n-1.0\n" + std::string(8, '\0'));
  CHECK_THROWS_AS(io::load_prior(dir / "short.pfm"), BadFormat);
  io::write_file_atomic(dir / "junk.pfm", "hello");
  CHECK_THROWS_AS(io::load_prior(dir / "junk.pfm"), BadFormat);
  CHECK_THROWS_AS(io::load_prior(dir / "missing.pfm"), IoError);
  CHECK_THROWS_AS(io::load_depth_any(dir / "x.tiff", 1.0), BadFormat);
  CHECK_THROWS_AS(io::decode_png("not a png"), BadFormat);
}

TEST_CASE("intrinsics records") {
  const io::IntrinsicsRecord r{CameraIntrinsics(525, 520, 319.5, 239.5), 640, 480};
  CHECK(io::parse_intrinsics(io::serialize_intrinsics(r)) == r);
  CHECK_THROWS_AS(io::parse_intrinsics(R"({"fy":1,"cx":0,"cy":0,"width":2,"height":2})"), BadFormat);
  CHECK_THROWS_AS(io::parse_intrinsics(R"({"fx":-1,"fy":1,"cx":0,"cy":0,"width":2,"height":2})"), BadFormat);
  CHECK_THROWS_AS(io::parse_intrinsics("{"), BadFormat);
}

TEST_CASE("annotation records round trip") {
  GlassAnnotation a;
  a.sample_id = "room_01";
  a.review_status = ReviewStatus::kPending;
  a.instances.push_back({{{1, 2}, {30, 4}, {5, 60}}, 2, PlaneModel({0, 0.6, 0.8}, -2.5), 0.0125});
  a.instances.push_back({{{0, 0}, {1, 0}, {0, 1}, {1, 1}}, std::nullopt, std::nullopt, 0.0});
  const GlassAnnotation b = io::parse_annotation(io::serialize_annotation(a));
  CHECK(b.sample_id == a.sample_id);
  CHECK(b.review_status == a.review_status);
  REQUIRE(b.instances.size() == 2);
  CHECK(b.instances[0].points == a.instances[0].points);
  CHECK(b.instances[0].matched_mask_id == 2);
  CHECK(b.instances[0].plane->normal() == a.instances[0].plane->normal());
  CHECK(b.instances[0].plane->offset() == -2.5);
  CHECK(b.instances[0].residual_rms == 0.0125);
  CHECK_FALSE(b.instances[1].plane.has_value());
  CHECK(io::serialize_annotation(b) == io::serialize_annotation(a));

  CHECK_THROWS_AS(io::parse_annotation(R"({"sample_id":"x","review_status":"done","instances":[]})"), BadFormat);
  CHECK_THROWS_AS(io::parse_annotation(R"({"sample_id":"x","review_status":"pending","instances":[{"points":[[1.5,2]]}]})"),
                  BadFormat);
}

TEST_CASE("ply round trip") {
  const fs::path dir = synth::temp_dir("io_ply");
  PointCloud one;
  one.points.push_back({0.1, -0.2, 3.0});
  io::save_cloud_ply(one, dir / "one.ply");
  const PointCloud back = io::load_cloud_ply(dir / "one.ply");
  REQUIRE(back.size() == 1);
  CHECK(back.points[0] == one.points[0]);

  io::save_cloud_ply(PointCloud{}, dir / "empty.ply");
  CHECK(io::load_cloud_ply(dir / "empty.ply").empty());

  PointCloud colored = one;
  colored.colors.push_back({1, 2, 3});
  io::save_cloud_ply(colored, dir / "c.ply");
  const PointCloud cb = io::load_cloud_ply(dir / "c.ply");
  REQUIRE(cb.colors.size() == 1);
  CHECK(cb.colors[0] == std::array<std::uint8_t, 3>{1, 2, 3});
  CHECK(io::encode_ply(one).find("element vertex 1\n") != std::string::npos);
}

TEST_CASE("occupancy graymap and sidecar") {
  const fs::path dir = synth::temp_dir("io_pgm");
  OccupancyGrid g;
  g.resolution = 0.1;
  g.origin = {-1.5, 2.25};
  g.size_x = 3;
  g.size_y = 2;
  g.cells.assign(6, CellState::kUnknown);
  io::save_occupancy_pgm(g, dir / "unknown.pgm");
  const std::string bytes = io::read_file(dir / "unknown.pgm");
  CHECK(bytes.substr(bytes.size() - 6) == std::string(6, static_cast<char>(205)));
  CHECK(io::occupancy_sidecar_path(dir / "unknown.pgm") == dir / "unknown.yaml");
  CHECK(fs::exists(dir / "unknown.yaml"));

  g.cells[0] = CellState::kOccupied;  // ix 0, iy 0: bottom-left, last row of the image
  g.cells[5] = CellState::kFree;
  io::save_occupancy_pgm(g, dir / "g.pgm");
  const std::string gb = io::read_file(dir / "g.pgm");
  const std::string pixels = gb.substr(gb.size() - 6);
  CHECK(static_cast<std::uint8_t>(pixels[2]) == 254);
  CHECK(static_cast<std::uint8_t>(pixels[3]) == 0);
  CHECK(io::load_occupancy_pgm(dir / "g.pgm") == g);
}

TEST_CASE("mask encodings") {
  const fs::path dir = synth::temp_dir("io_mask");
  // Two separate blobs with the same value: binary, split into components.
  io::write_file_atomic(dir / "bin.png", io::encode_png({4, 1, 1, 8, {255, 0, 0, 255}}));
  const BinaryMask bin = io::load_mask(dir / "bin.png");
  CHECK(bin.instance_count() == 2);
  CHECK(bin[0] == 1);
  CHECK(bin[3] == 2);
  // Distinct values touching each other: instance labels in first-seen order.
  io::write_file_atomic(dir / "ins.png", io::encode_png({3, 1, 1, 8, {7, 3, 0}}));
  const BinaryMask ins = io::load_mask(dir / "ins.png");
  CHECK(ins == BinaryMask(3, 1, {1, 2, 0}));
  CHECK(io::load_mask(dir / "ins.png", io::MaskEncoding::kBinary).instance_count() == 1);
  // RGB colors.
  io::write_file_atomic(dir / "rgb.png", io::encode_png({2, 1, 3, 8, {255, 0, 0, 0, 255, 0}}));
  CHECK(io::load_mask(dir / "rgb.png").instance_count() == 2);

  const BinaryMask m(3, 2, {0, 1, 1, 2, 0, 3});
  io::save_mask(m, dir / "m.png");
  CHECK(io::load_mask(dir / "m.png", io::MaskEncoding::kInstance) == m);

  PixelMask p(3, 2);
  p.set(4, true);
  io::save_pixel_mask(p, dir / "p.png");
  CHECK(io::load_pixel_mask(dir / "p.png") == p);
}

TEST_CASE("atomic writes create directories and leave no temporaries") {
  const fs::path dir = synth::temp_dir("io_atomic");
  io::write_file_atomic(dir / "a" / "b" / "f.txt", "one");
  io::write_file_atomic(dir / "a" / "b" / "f.txt", "two");
  CHECK(io::read_file(dir / "a" / "b" / "f.txt") == "two");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "a" / "b")) ++entries;
  CHECK(entries == 1);
}
