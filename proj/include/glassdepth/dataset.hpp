#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "glassdepth/annotation.hpp"
#include "glassdepth/core_types.hpp"
#include "glassdepth/io.hpp"

namespace glassdepth {

namespace fs = std::filesystem;

/// File names inside each sample directory.
struct DatasetLayout {
  std::string rgb = "rgb.png";
  std::string raw_depth = "depth_raw.png";
  std::string mask = "mask.png";
  std::string gt_depth = "depth_gt.png";
  std::string gt_exclusion = "gt_exclusion.png";
  std::string intrinsics = "intrinsics.json";
  std::string annotation = "annotation.json";
  std::string manifest = "manifest.txt";
  std::string config = "dataset.json";
};

struct DatasetSample {
  std::string sample_id;
  fs::path dir;
  fs::path rgb;
  fs::path raw_depth;
  fs::path mask;
  fs::path gt_depth;
  fs::path gt_exclusion;
  fs::path intrinsics;
  fs::path annotation;
};

/// root/manifest.txt lists sample ids (one per line, '#' starts a comment);
/// root/<id>/ holds that sample's files. An optional root/dataset.json may
/// carry {"depth_scale": ...} or {"source": "matterport3d"}.
class Dataset {
 public:
  /// Throws IoError when the manifest is missing. `depth_scale` overrides
  /// whatever dataset.json says.
  explicit Dataset(fs::path root, std::optional<double> depth_scale = std::nullopt,
                   DatasetLayout layout = {});

  const fs::path& root() const { return root_; }
  double depth_scale() const { return depth_scale_; }
  const DatasetLayout& layout() const { return layout_; }
  const std::vector<std::string>& sample_ids() const { return ids_; }
  bool contains(const std::string& id) const;

  DatasetSample sample(const std::string& id) const;

  DepthMap load_raw(const DatasetSample& s) const;
  BinaryMask load_mask(const DatasetSample& s) const;
  io::IntrinsicsRecord load_intrinsics(const DatasetSample& s) const;
  GroundTruthDepth load_ground_truth(const DatasetSample& s) const;
  std::optional<GlassAnnotation> load_annotation(const DatasetSample& s) const;

  void save_ground_truth(const DatasetSample& s, const GroundTruthDepth& gt) const;

  static void write_manifest(const fs::path& root, const std::vector<std::string>& ids,
                             const DatasetLayout& layout = {});

 private:
  fs::path root_;
  DatasetLayout layout_;
  double depth_scale_ = io::kDefaultDepthScale;
  std::vector<std::string> ids_;
};

/// Default dataset root from GLASSDEPTH_DATASET_ROOT, if set.
std::optional<fs::path> dataset_root_from_env();

}  // namespace glassdepth
