#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "glassdepth/alignment.hpp"
#include "glassdepth/geometry_export.hpp"

namespace glassdepth {

namespace fs = std::filesystem;

enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,
  kExitDegenerateData = 2,
  kExitPartialFailure = 3,
};

/// Maps an exception escaping a subcommand to its exit status.
int exit_code_for(const std::exception& e);

struct AlignOptions {
  // Single-pair mode.
  std::optional<fs::path> raw;
  std::optional<fs::path> prior;
  std::optional<fs::path> intrinsics;
  std::optional<fs::path> output;    // .pfm, .npy or .png
  std::optional<fs::path> metadata;  // defaults to <output>.json
  // Dataset mode: priors/<id>.{pfm,npy} -> output_dir/<id>.<ext> + <id>.json
  std::optional<fs::path> dataset;
  std::optional<fs::path> prior_dir;
  std::optional<fs::path> output_dir;
  std::string output_ext = ".pfm";

  std::optional<double> depth_scale;
  bool global = false;
  bool invert = false;
  RansacConfig ransac;
  int jobs = 1;
};

struct AnnotateOptions {
  fs::path dataset;
  std::optional<double> depth_scale;
  bool include_pending = false;
  int jobs = 1;
};

struct EvalOptions {
  fs::path dataset;
  fs::path prediction_dir;
  fs::path report;  // JSON
  std::optional<fs::path> table;
  std::string method_name = "prediction";
  std::optional<double> depth_scale;
  std::optional<double> prediction_scale;  // for .png predictions
  int jobs = 1;
};

struct ExportOptions {
  fs::path depth;
  fs::path intrinsics;
  std::optional<double> depth_scale;
  std::optional<fs::path> cloud;
  std::optional<fs::path> grid;
  int stride = 1;
  double camera_height = 1.0;
  GridConfig grid_config;
};

struct ServeOptions {
  fs::path dataset;
  std::optional<double> depth_scale;
  std::string host = "127.0.0.1";
  int port = 8080;
  int preview_stride = 4;
};

// Each returns an ExitCode. Diagnostics go to `err`, notices to `out`.
int run_align(const AlignOptions& opts, std::ostream& out, std::ostream& err);
int run_annotate(const AnnotateOptions& opts, std::ostream& out, std::ostream& err);
int run_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);
int run_export(const ExportOptions& opts, std::ostream& out, std::ostream& err);
/// Blocks until SIGINT/SIGTERM.
int run_serve(const ServeOptions& opts, std::ostream& out, std::ostream& err);

/// Raw sensor depth from .png (scaled) or .pfm/.npy (meters); zero is invalid.
DepthMap load_raw_depth(const fs::path& path, double scale);

}  // namespace glassdepth
