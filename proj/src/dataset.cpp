#include "glassdepth/dataset.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "glassdepth/error.hpp"

namespace glassdepth {

Dataset::Dataset(fs::path root, std::optional<double> depth_scale, DatasetLayout layout)
    : root_(std::move(root)), layout_(std::move(layout)) {
  const fs::path manifest = root_ / layout_.manifest;
  std::istringstream lines(io::read_file(manifest));
  std::string line;
  while (std::getline(lines, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    ids_.push_back(line.substr(b, e - b + 1));
  }

  const fs::path config = root_ / layout_.config;
  if (fs::exists(config)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(io::read_file(config));
    } catch (const nlohmann::json::exception& e) {
      throw BadFormat(config.string() + ": " + e.what());
    }
    if (j.contains("depth_scale")) {
      depth_scale_ = j["depth_scale"].get<double>();
    } else if (j.value("source", "") == "matterport3d") {
      depth_scale_ = io::kMatterportDepthScale;
    }
  }
  if (depth_scale) depth_scale_ = *depth_scale;
  if (!(depth_scale_ > 0.0)) throw InvalidArgument("depth scale must be positive");
}

bool Dataset::contains(const std::string& id) const {
  return std::find(ids_.begin(), ids_.end(), id) != ids_.end();
}

DatasetSample Dataset::sample(const std::string& id) const {
  DatasetSample s;
  s.sample_id = id;
  s.dir = root_ / id;
  s.rgb = s.dir / layout_.rgb;
  s.raw_depth = s.dir / layout_.raw_depth;
  s.mask = s.dir / layout_.mask;
  s.gt_depth = s.dir / layout_.gt_depth;
  s.gt_exclusion = s.dir / layout_.gt_exclusion;
  s.intrinsics = s.dir / layout_.intrinsics;
  s.annotation = s.dir / layout_.annotation;
  return s;
}

DepthMap Dataset::load_raw(const DatasetSample& s) const {
  return io::load_depth_png16(s.raw_depth, depth_scale_);
}

BinaryMask Dataset::load_mask(const DatasetSample& s) const { return io::load_mask(s.mask); }

io::IntrinsicsRecord Dataset::load_intrinsics(const DatasetSample& s) const {
  return io::load_intrinsics(s.intrinsics);
}

GroundTruthDepth Dataset::load_ground_truth(const DatasetSample& s) const {
  GroundTruthDepth gt;
  gt.depth = io::load_depth_png16(s.gt_depth, depth_scale_);
  gt.evaluation_mask = fs::exists(s.gt_exclusion) ? io::load_pixel_mask(s.gt_exclusion)
                                                   : PixelMask(gt.depth.width(), gt.depth.height());
  if (gt.evaluation_mask.width() != gt.depth.width() ||
      gt.evaluation_mask.height() != gt.depth.height()) {
    throw DimensionMismatch(s.sample_id + ": exclusion mask and ground truth differ in size");
  }
  return gt;
}

std::optional<GlassAnnotation> Dataset::load_annotation(const DatasetSample& s) const {
  if (!fs::exists(s.annotation)) return std::nullopt;
  return io::load_annotation(s.annotation);
}

void Dataset::save_ground_truth(const DatasetSample& s, const GroundTruthDepth& gt) const {
  io::save_depth_png16(gt.depth, s.gt_depth, depth_scale_);
  io::save_pixel_mask(gt.evaluation_mask, s.gt_exclusion);
}

void Dataset::write_manifest(const fs::path& root, const std::vector<std::string>& ids,
                             const DatasetLayout& layout) {
  std::string text;
  for (const auto& id : ids) text += id + "\n";
  io::write_file_atomic(root / layout.manifest, text);
}

std::optional<fs::path> dataset_root_from_env() {
  if (const char* env = std::getenv("GLASSDEPTH_DATASET_ROOT"); env && *env) return fs::path(env);
  return std::nullopt;
}

}  // namespace glassdepth
