#include "glassdepth/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cmath>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "glassdepth/annotation.hpp"
#include "glassdepth/dataset.hpp"
#include "glassdepth/error.hpp"
#include "glassdepth/io.hpp"
#include "glassdepth/metrics.hpp"
#include "glassdepth/service.hpp"

namespace glassdepth {

namespace {

using nlohmann::json;

template <class F>
void parallel_for(std::size_t n, int jobs, F&& body) {
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1,
                                                      std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) body(i);
  };
  if (workers == 1) {
    loop();
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(loop);
}

double scale_or_default(const std::optional<double>& scale) {
  return scale.value_or(io::kDefaultDepthScale);
}

std::optional<fs::path> find_with_extension(const fs::path& dir, const std::string& stem,
                                            std::initializer_list<const char*> exts) {
  for (const char* ext : exts) {
    fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

struct AlignOutput {
  std::string metadata;
  DepthMap depth;
};

AlignOutput align_pair(const DepthMap& raw, DepthMap prior, const AlignOptions& opts,
                       const std::optional<std::string>& sample_id) {
  if (!raw.same_shape(prior)) {
    throw DimensionMismatch("raw depth is " + std::to_string(raw.width()) + "x" +
                            std::to_string(raw.height()) + " but prior is " +
                            std::to_string(prior.width()) + "x" + std::to_string(prior.height()));
  }
  if (opts.invert) prior = invert_prior(prior);
  const AlignmentResult result = opts.global
                                     ? global_align(prior, raw, opts.ransac.min_prior_spread)
                                     : local_ransac_align(prior, raw, opts.ransac);
  AffineApplication applied = apply_affine(prior, result.params);

  json meta;
  if (sample_id) meta["sample_id"] = *sample_id;
  meta["method"] = to_string(result.method);
  meta["scale"] = result.params.scale;
  meta["shift"] = result.params.shift;
  meta["mean_abs_error"] = result.mean_abs_error;
  meta["negative_pixels"] = applied.negative_count;
  meta["invert_prior"] = opts.invert;
  meta["min_prior_spread"] = opts.ransac.min_prior_spread;
  if (result.method == AlignmentMethod::kLocalRansac) {
    meta["winning_patch"] = {result.winning_patch.row, result.winning_patch.col};
    meta["winning_iteration"] = result.winning_iteration;
    meta["candidates_evaluated"] = result.candidates_evaluated;
    meta["iterations_skipped"] = result.iterations_skipped;
    meta["seed"] = opts.ransac.rng_seed;
    meta["grid_n"] = opts.ransac.grid_n;
    meta["iterations_per_patch"] = opts.ransac.iterations_per_patch;
    meta["samples_per_iteration"] = opts.ransac.samples_per_iteration;
  }
  return {meta.dump(2) + "\n", std::move(applied.depth)};
}

void check_intrinsics(const fs::path& path, const DepthMap& raw) {
  const io::IntrinsicsRecord rec = io::load_intrinsics(path);
  if (rec.width != raw.width() || rec.height != raw.height()) {
    throw DimensionMismatch(path.string() + ": intrinsics describe " + std::to_string(rec.width) +
                            "x" + std::to_string(rec.height) + " but raw depth is " +
                            std::to_string(raw.width()) + "x" + std::to_string(raw.height()));
  }
}

int align_single(const AlignOptions& opts, std::ostream& out) {
  if (!opts.raw || !opts.prior || !opts.output) {
    throw InvalidArgument("align needs --raw, --prior and --output (or --dataset mode)");
  }
  const double scale = scale_or_default(opts.depth_scale);
  const DepthMap raw = load_raw_depth(*opts.raw, scale);
  DepthMap prior = io::load_prior(*opts.prior);
  if (opts.intrinsics) check_intrinsics(*opts.intrinsics, raw);
  AlignOptions local = opts;
  local.ransac.threads = std::max(opts.jobs, 1);
  const AlignOutput result = align_pair(raw, std::move(prior), local, std::nullopt);

  const fs::path meta_path = opts.metadata.value_or(fs::path(opts.output->string() + ".json"));
  io::save_depth_any(result.depth, *opts.output, scale);
  io::write_file_atomic(meta_path, result.metadata);
  out << "aligned depth written to " << opts.output->string() << "\n";
  return kExitOk;
}

int align_dataset(const AlignOptions& opts, std::ostream& out, std::ostream& err) {
  if (!opts.prior_dir || !opts.output_dir) {
    throw InvalidArgument("dataset align needs --priors and --out-dir");
  }
  const Dataset dataset(*opts.dataset, opts.depth_scale);
  const auto& ids = dataset.sample_ids();
  std::vector<std::string> errors(ids.size());
  std::vector<int> codes(ids.size(), kExitOk);

  parallel_for(ids.size(), opts.jobs, [&](std::size_t i) {
    try {
      const DatasetSample s = dataset.sample(ids[i]);
      const auto prior_path = find_with_extension(*opts.prior_dir, ids[i], {".pfm", ".npy"});
      if (!prior_path) throw IoError("no prior found for sample " + ids[i]);
      const DepthMap raw = dataset.load_raw(s);
      AlignOutput result = align_pair(raw, io::load_prior(*prior_path), opts, ids[i]);
      const fs::path base = *opts.output_dir / ids[i];
      io::save_depth_any(result.depth, fs::path(base.string() + opts.output_ext), dataset.depth_scale());
      io::write_file_atomic(fs::path(base.string() + ".json"), result.metadata);
    } catch (const std::exception& e) {
      errors[i] = e.what();
      codes[i] = exit_code_for(e);
    }
  });

  std::size_t failed = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (codes[i] == kExitOk) continue;
    ++failed;
    err << "sample " << ids[i] << ": " << errors[i] << "\n";
  }
  out << "aligned " << ids.size() - failed << " of " << ids.size() << " samples\n";
  return failed ? kExitPartialFailure : kExitOk;
}

json row_json(const std::optional<ReportRow>& row) {
  if (!row) return nullptr;
  return {{"abs_rel", row->abs_rel}, {"delta1", row->delta1}, {"count", row->count}};
}

std::atomic<bool> g_stop_requested{false};

extern "C" void on_stop_signal(int) { g_stop_requested = true; }

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DegenerateData*>(&e)) return kExitDegenerateData;
  return kExitInputError;
}

DepthMap load_raw_depth(const fs::path& path, double scale) {
  DepthMap depth = io::load_depth_any(path, scale);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (depth.valid(i) && depth[i] == 0.0) depth.invalidate(i);
  }
  return depth;
}

int run_align(const AlignOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    opts.ransac.validate();
    if (opts.dataset) return align_dataset(opts, out, err);
    return align_single(opts, out);
  } catch (const std::exception& e) {
    err << "align: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int run_annotate(const AnnotateOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const Dataset dataset(opts.dataset, opts.depth_scale);
    const auto& ids = dataset.sample_ids();
    std::vector<std::string> notices(ids.size());
    std::vector<std::string> errors(ids.size());

    parallel_for(ids.size(), opts.jobs, [&](std::size_t i) {
      std::ostringstream note;
      try {
        const DatasetSample s = dataset.sample(ids[i]);
        GlassAnnotation annotation;
        annotation.sample_id = ids[i];
        if (auto stored = dataset.load_annotation(s)) {
          annotation = std::move(*stored);
          const bool usable = annotation.review_status == ReviewStatus::kAccepted ||
                              (opts.include_pending && annotation.review_status == ReviewStatus::kPending);
          if (!usable) {
            note << "sample " << ids[i] << ": skipped, review status "
                 << to_string(annotation.review_status) << "\n";
            notices[i] = note.str();
            return;
          }
        } else {
          note << "sample " << ids[i] << ": no annotation, all glass excluded\n";
        }
        const DepthMap raw = dataset.load_raw(s);
        const BinaryMask mask = dataset.load_mask(s);
        const io::IntrinsicsRecord intr = dataset.load_intrinsics(s);
        const GroundTruthResult gt = generate_ground_truth(raw, mask, annotation, intr.k);
        for (const auto& o : gt.outcomes) {
          if (!o.ok) {
            note << "sample " << ids[i] << ": instance " << o.annotation_index << " dropped: "
                 << o.error << "\n";
          }
        }
        dataset.save_ground_truth(s, gt.ground_truth);
        notices[i] = note.str();
      } catch (const std::exception& e) {
        notices[i] = note.str();
        errors[i] = e.what();
      }
    });

    std::size_t failed = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out << notices[i];
      if (errors[i].empty()) continue;
      ++failed;
      err << "sample " << ids[i] << ": " << errors[i] << "\n";
    }
    return failed ? kExitPartialFailure : kExitOk;
  } catch (const std::exception& e) {
    err << "annotate: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int run_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const Dataset dataset(opts.dataset, opts.depth_scale);
    const double pred_scale = opts.prediction_scale.value_or(dataset.depth_scale());
    const auto& ids = dataset.sample_ids();
    struct SampleResult {
      SplitLabel label;
      DepthMetrics metrics;
      std::string error;
    };
    std::vector<SampleResult> results(ids.size());

    parallel_for(ids.size(), opts.jobs, [&](std::size_t i) {
      try {
        const DatasetSample s = dataset.sample(ids[i]);
        const auto pred_path = find_with_extension(opts.prediction_dir, ids[i], {".pfm", ".npy", ".png"});
        if (!pred_path) throw IoError("no prediction found for sample " + ids[i]);
        const DepthMap pred = io::load_depth_any(*pred_path, pred_scale);
        const GroundTruthDepth gt = dataset.load_ground_truth(s);
        const DepthMap raw = dataset.load_raw(s);
        if (!pred.same_shape(gt.depth)) throw DimensionMismatch("prediction and ground truth differ in size");
        results[i].label = split_sample(raw, gt);
        results[i].metrics = compute_metrics(pred, gt.depth, &gt.evaluation_mask);
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    });

    json samples = json::array();
    std::vector<std::pair<SplitLabel, DepthMetrics>> ok;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const SampleResult& r = results[i];
      if (!r.error.empty()) {
        ++failed;
        err << "sample " << ids[i] << ": " << r.error << "\n";
        samples.push_back({{"sample_id", ids[i]}, {"status", "failed"}, {"error", r.error}});
        continue;
      }
      ok.emplace_back(r.label, r.metrics);
      samples.push_back({{"sample_id", ids[i]},
                         {"status", "ok"},
                         {"split", to_string(r.label.label)},
                         {"raw_abs_rel", r.label.raw_abs_rel},
                         {"abs_rel", r.metrics.abs_rel},
                         {"delta1", r.metrics.delta1},
                         {"valid_pixels", r.metrics.valid_pixel_count},
                         {"evaluated_pixels", r.metrics.evaluated_pixel_count},
                         {"invalid_predictions", r.metrics.invalid_prediction_count}});
    }
    const BenchmarkReport report = aggregate_report(ok);
    const json doc = {{"method", opts.method_name},
                      {"samples", samples},
                      {"failed", failed},
                      {"aggregate",
                       {{"all", row_json(report.all)},
                        {"easy", row_json(report.easy)},
                        {"hard", row_json(report.hard)}}}};
    const std::string table = format_report_table(report, opts.method_name);
    io::write_file_atomic(opts.report, doc.dump(2) + "\n");
    if (opts.table) io::write_file_atomic(*opts.table, table);
    out << table;
    return failed ? kExitPartialFailure : kExitOk;
  } catch (const std::exception& e) {
    err << "eval: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int run_export(const ExportOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (!opts.cloud && !opts.grid) throw InvalidArgument("export needs --cloud and/or --grid");
    opts.grid_config.validate();
    const DepthMap depth = load_raw_depth(opts.depth, scale_or_default(opts.depth_scale));
    const io::IntrinsicsRecord intr = io::load_intrinsics(opts.intrinsics);
    if (intr.width != depth.width() || intr.height != depth.height()) {
      throw DimensionMismatch("intrinsics and depth map differ in size");
    }
    const PointCloud cloud = depth_to_cloud(depth, intr.k, opts.stride);
    std::optional<OccupancyGrid> grid;
    if (opts.grid) grid = cloud_to_occupancy(camera_to_ground(cloud, opts.camera_height), opts.grid_config);

    if (opts.cloud) {
      io::save_cloud_ply(cloud, *opts.cloud);
      out << "cloud: " << cloud.size() << " points -> " << opts.cloud->string() << "\n";
    }
    if (grid) {
      io::save_occupancy_pgm(*grid, *opts.grid);
      out << "grid: " << grid->size_x << "x" << grid->size_y << " cells, "
          << grid->count(CellState::kOccupied) << " occupied -> " << opts.grid->string() << "\n";
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "export: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int run_serve(const ServeOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    ServiceConfig cfg;
    cfg.dataset_root = opts.dataset;
    cfg.depth_scale = opts.depth_scale;
    cfg.host = opts.host;
    cfg.port = opts.port;
    cfg.preview_stride = opts.preview_stride;
    if (cfg.preview_stride < 1) throw InvalidArgument("--preview-stride must be >= 1");
    AnnotationService service(cfg);
    if (!service.bind()) {
      err << "serve: cannot listen on " << opts.host << ":" << opts.port << "\n";
      return kExitInputError;
    }
    out << "listening on http://" << opts.host << ":" << service.port() << "\n" << std::flush;

    g_stop_requested = false;
    std::signal(SIGINT, on_stop_signal);
    std::signal(SIGTERM, on_stop_signal);
    std::jthread server([&] { service.run(); });
    while (!g_stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    service.stop();
    return kExitOk;
  } catch (const std::exception& e) {
    err << "serve: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace glassdepth
