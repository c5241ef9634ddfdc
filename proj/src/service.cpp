#include "glassdepth/service.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <httplib.h>
#include <json.hpp>

#include "glassdepth/colormap.hpp"
#include "glassdepth/error.hpp"
#include "glassdepth/geometry_export.hpp"
#include "glassdepth/io.hpp"

namespace glassdepth {

namespace {

using nlohmann::json;

// Error colormap range, fixed so previews compare across samples.
constexpr double kErrorRangeMeters = 0.5;

ServiceReply json_reply(int status, const json& body) {
  return {status, "application/json", body.dump() + "\n"};
}

ServiceReply unprocessable(const std::string& reason, const json& extra = json::object()) {
  json body = {{"error", "unprocessable"}, {"reason", reason}};
  body.update(extra);
  return json_reply(422, body);
}

ServiceReply not_found(const std::string& what) {
  return json_reply(404, {{"error", "not found"}, {"reason", what}});
}

json plane_json(const PlaneModel& plane) {
  const auto& n = plane.normal();
  return {{"normal", {n.x(), n.y(), n.z()}}, {"offset", plane.offset()}};
}

DepthMap instance_depth(const DepthMap& raw, const BinaryMask& mask, int mask_id,
                        const PlaneModel& plane, const CameraIntrinsics& k) {
  DepthMap out(raw.width(), raw.height());
  for (int v = 0; v < mask.height(); ++v) {
    for (int u = 0; u < mask.width(); ++u) {
      if (mask.at(u, v) != mask_id) continue;
      try {
        out.set(u, v, ray_plane_depth(u, v, plane, k));
      } catch (const DegenerateData&) {
      }
    }
  }
  return out;
}

}  // namespace

AnnotationService::AnnotationService(ServiceConfig cfg)
    : cfg_(std::move(cfg)), dataset_(cfg_.dataset_root, cfg_.depth_scale) {
  for (const auto& id : dataset_.sample_ids()) {
    auto state = std::make_unique<SampleState>();
    const DatasetSample s = dataset_.sample(id);
    if (auto stored = dataset_.load_annotation(s)) {
      state->annotation = std::move(*stored);
    } else {
      state->annotation.sample_id = id;
    }
    samples_.emplace(id, std::move(state));
  }
}

AnnotationService::~AnnotationService() { stop(); }

AnnotationService::SampleState* AnnotationService::find(const std::string& id) {
  const auto it = samples_.find(id);
  return it == samples_.end() ? nullptr : it->second.get();
}

std::shared_ptr<const AnnotationService::SampleInputs> AnnotationService::inputs_locked(
    const std::string& id, SampleState& state) {
  if (!state.inputs) {
    const DatasetSample s = dataset_.sample(id);
    auto inputs = std::make_shared<SampleInputs>();
    inputs->raw = dataset_.load_raw(s);
    inputs->mask = dataset_.load_mask(s);
    inputs->intrinsics = dataset_.load_intrinsics(s);
    if (inputs->raw.width() != inputs->mask.width() ||
        inputs->raw.height() != inputs->mask.height()) {
      throw DimensionMismatch(id + ": raw depth and glass mask differ in size");
    }
    state.inputs = std::move(inputs);
  }
  return state.inputs;
}

ServiceReply AnnotationService::health() const { return json_reply(200, {{"status", "ready"}}); }

ServiceReply AnnotationService::list_samples() {
  json list = json::array();
  for (const auto& [id, state] : samples_) {
    std::lock_guard lock(state->mutex);
    json entry = {{"sample_id", id},
                  {"review_status", to_string(state->annotation.review_status)},
                  {"annotated_instances", state->annotation.instances.size()}};
    try {
      entry["glass_instances"] = inputs_locked(id, *state)->mask.instance_count();
    } catch (const Error& e) {
      entry["glass_instances"] = nullptr;
      entry["error"] = e.what();
    }
    list.push_back(std::move(entry));
  }
  return json_reply(200, {{"samples", list}});
}

ServiceReply AnnotationService::get_annotation(const std::string& id) {
  SampleState* state = find(id);
  if (!state) return not_found("unknown sample " + id);
  std::lock_guard lock(state->mutex);
  return {200, "application/json", io::serialize_annotation(state->annotation)};
}

ServiceReply AnnotationService::rgb_image(const std::string& id) {
  if (!find(id)) return not_found("unknown sample " + id);
  const fs::path path = dataset_.sample(id).rgb;
  if (!fs::exists(path)) return not_found("sample " + id + " has no RGB image");
  return {200, "image/png", io::read_file(path)};
}

ServiceReply AnnotationService::depth_image(const std::string& id) {
  SampleState* state = find(id);
  if (!state) return not_found("unknown sample " + id);
  std::shared_ptr<const SampleInputs> in;
  {
    std::lock_guard lock(state->mutex);
    in = inputs_locked(id, *state);
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = 0; i < in->raw.size(); ++i) {
    if (!in->raw.valid(i)) continue;
    lo = std::min(lo, in->raw[i]);
    hi = std::max(hi, in->raw[i]);
  }
  return {200, "image/png", io::encode_png(colorize_depth(in->raw, std::isfinite(lo) ? lo : 0.0, hi))};
}

ServiceReply AnnotationService::mask_overlay(const std::string& id) {
  SampleState* state = find(id);
  if (!state) return not_found("unknown sample " + id);
  std::shared_ptr<const SampleInputs> in;
  {
    std::lock_guard lock(state->mutex);
    in = inputs_locked(id, *state);
  }
  const int w = in->mask.width();
  const int h = in->mask.height();
  io::RawImage base{w, h, 3, 8, std::vector<std::uint16_t>(static_cast<std::size_t>(w) * h * 3, 96)};
  const fs::path rgb_path = dataset_.sample(id).rgb;
  if (fs::exists(rgb_path)) {
    const io::RawImage rgb = io::decode_png(io::read_file(rgb_path));
    if (rgb.width == w && rgb.height == h) {
      const int shift = rgb.bit_depth == 16 ? 8 : 0;
      for (std::size_t p = 0; p < in->mask.size(); ++p) {
        for (int c = 0; c < 3; ++c) {
          const int src = rgb.channels >= 3 ? c : 0;
          base.samples[3 * p + c] =
              static_cast<std::uint16_t>(rgb.samples[p * rgb.channels + src] >> shift);
        }
      }
    }
  }
  for (std::size_t p = 0; p < in->mask.size(); ++p) {
    if (in->mask[p] == 0) continue;
    const Rgb color = instance_color(in->mask[p]);
    for (int c = 0; c < 3; ++c) {
      base.samples[3 * p + c] = static_cast<std::uint16_t>((base.samples[3 * p + c] + color[c]) / 2);
    }
  }
  return {200, "image/png", io::encode_png(base)};
}

ServiceReply AnnotationService::submit_points(const std::string& id, int instance,
                                              const std::string& body) {
  SampleState* state = find(id);
  if (!state) return not_found("unknown sample " + id);

  std::vector<PixelCoord> points;
  try {
    const json j = json::parse(body);
    for (const auto& p : j.at("points")) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer()) {
        return json_reply(400, {{"error", "bad request"}, {"reason", "points must be [u, v] integers"}});
      }
      points.push_back({p[0].get<int>(), p[1].get<int>()});
    }
  } catch (const json::exception&) {
    return json_reply(400, {{"error", "bad request"}, {"reason", "body must be {\"points\": [[u, v], ...]}"}});
  }

  std::lock_guard lock(state->mutex);
  const auto in = inputs_locked(id, *state);
  if (instance < 0 || static_cast<std::size_t>(instance) > state->annotation.instances.size()) {
    return unprocessable("instance index out of range",
                         {{"next_instance", state->annotation.instances.size()}});
  }
  if (points.size() < 3) return unprocessable("insufficient points", {{"required", 3}});
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!in->raw.contains(points[i].u, points[i].v)) {
      return unprocessable("point out of bounds", {{"point_index", i}});
    }
  }
  json invalid = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!in->raw.valid(points[i].u, points[i].v)) invalid.push_back(i);
  }
  if (!invalid.empty()) {
    return unprocessable("invalid depth at click",
                         {{"point_index", invalid.front()}, {"point_indices", invalid}});
  }

  InstanceAnnotation candidate;
  candidate.points = points;
  InstanceOutcome outcome;
  try {
    outcome = solve_instance(in->raw, in->mask, candidate, in->intrinsics.k);
  } catch (const DegenerateHull&) {
    return unprocessable("collinear points");
  } catch (const NoOverlap&) {
    return unprocessable("no overlapping glass instance");
  } catch (const DegenerateGeometry&) {
    return unprocessable("degenerate geometry");
  } catch (const DegenerateData& e) {
    return unprocessable(e.what());
  }
  candidate.matched_mask_id = outcome.matched_mask_id;
  candidate.plane = outcome.fit->plane;
  candidate.residual_rms = outcome.fit->residual_rms;

  GlassAnnotation updated = state->annotation;
  if (static_cast<std::size_t>(instance) == updated.instances.size()) {
    updated.instances.push_back(candidate);
  } else {
    updated.instances[instance] = candidate;
  }
  updated.review_status = ReviewStatus::kPending;
  io::save_annotation(updated, dataset_.sample(id).annotation);
  state->annotation = std::move(updated);

  const DepthMap preview = instance_depth(in->raw, in->mask, outcome.matched_mask_id,
                                          *candidate.plane, in->intrinsics.k);
  std::size_t filled = 0, compared = 0;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, diff = 0.0;
  for (std::size_t p = 0; p < preview.size(); ++p) {
    if (!preview.valid(p)) continue;
    ++filled;
    lo = std::min(lo, preview[p]);
    hi = std::max(hi, preview[p]);
    if (in->raw.valid(p)) {
      diff += std::fabs(preview[p] - in->raw[p]);
      ++compared;
    }
  }
  const std::string base = "/samples/" + id + "/instances/" + std::to_string(instance);
  json reply = {
      {"sample_id", id},
      {"instance", instance},
      {"plane", plane_json(*candidate.plane)},
      {"residual_rms", candidate.residual_rms},
      {"matched_mask_id", outcome.matched_mask_id},
      {"overlap_ratio", outcome.overlap_ratio},
      {"review_status", to_string(state->annotation.review_status)},
      {"preview",
       {{"filled_pixels", filled},
        {"depth_min", filled ? json(lo) : json(nullptr)},
        {"depth_max", filled ? json(hi) : json(nullptr)},
        {"mean_abs_diff_vs_raw", compared ? json(diff / static_cast<double>(compared)) : json(nullptr)},
        {"error_range_m", {0.0, kErrorRangeMeters}},
        {"depth_url", base + "/preview/depth.pfm"},
        {"error_url", base + "/preview/error.png"}}}};
  return json_reply(200, reply);
}

ServiceReply AnnotationService::preview_depth(const std::string& id, int instance) {
  SampleState* state = find(id);
  if (!state) return not_found("unknown sample " + id);
  std::lock_guard lock(state->mutex);
  if (instance < 0 || static_cast<std::size_t>(instance) >= state->annotation.instances.size() ||
      !state->annotation.instances[instance].plane) {
    return not_found("instance " + std::to_string(instance) + " has no fitted plane");
  }
  const auto& inst = state->annotation.instances[instance];
  const auto in = inputs_locked(id, *state);
  const DepthMap depth = instance_depth(in->raw, in->mask, inst.matched_mask_id.value_or(0),
                                        *inst.plane, in->intrinsics.k);
  return {200, "image/x-portable-floatmap", io::encode_pfm(depth)};
}

ServiceReply AnnotationService::preview_error(const std::string& id, int instance) {
  SampleState* state = find(id);
  if (!state) return not_found("unknown sample " + id);
  std::lock_guard lock(state->mutex);
  if (instance < 0 || static_cast<std::size_t>(instance) >= state->annotation.instances.size() ||
      !state->annotation.instances[instance].plane) {
    return not_found("instance " + std::to_string(instance) + " has no fitted plane");
  }
  const auto& inst = state->annotation.instances[instance];
  const auto in = inputs_locked(id, *state);
  const DepthMap depth = instance_depth(in->raw, in->mask, inst.matched_mask_id.value_or(0),
                                        *inst.plane, in->intrinsics.k);
  DepthMap error(depth.width(), depth.height());
  for (std::size_t p = 0; p < depth.size(); ++p) {
    if (depth.valid(p) && in->raw.valid(p)) error.set(p, std::fabs(depth[p] - in->raw[p]));
  }
  return {200, "image/png", io::encode_png(colorize_depth(error, 0.0, kErrorRangeMeters))};
}

ServiceReply AnnotationService::preview_cloud(const std::string& id) {
  SampleState* state = find(id);
  if (!state) return not_found("unknown sample " + id);
  std::lock_guard lock(state->mutex);
  const auto in = inputs_locked(id, *state);
  const GroundTruthResult gt =
      generate_ground_truth(in->raw, in->mask, state->annotation, in->intrinsics.k);
  const DepthMap& depth = gt.ground_truth.depth;
  PointCloud cloud;
  for (int v = 0; v < depth.height(); v += cfg_.preview_stride) {
    for (int u = 0; u < depth.width(); u += cfg_.preview_stride) {
      if (!depth.valid(u, v)) continue;
      cloud.points.push_back(depth.at(u, v) * in->intrinsics.k.ray(u, v));
      const int id_at = in->mask.at(u, v);
      cloud.colors.push_back(id_at ? instance_color(id_at) : Rgb{170, 170, 170});
    }
  }
  return {200, "application/octet-stream", io::encode_ply(cloud)};
}

ServiceReply AnnotationService::set_review(const std::string& id, ReviewStatus status) {
  SampleState* state = find(id);
  if (!state) return not_found("unknown sample " + id);
  std::lock_guard lock(state->mutex);
  GlassAnnotation updated = state->annotation;
  updated.review_status = status;
  io::save_annotation(updated, dataset_.sample(id).annotation);
  state->annotation = std::move(updated);
  return json_reply(200, {{"sample_id", id}, {"review_status", to_string(status)}});
}

void AnnotationService::install_routes() {
  auto& svr = *server_;
  const auto send = [](httplib::Response& res, const ServiceReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  };
  const auto guarded = [send](auto handler) {
    return [send, handler](const httplib::Request& req, httplib::Response& res) {
      try {
        send(res, handler(req));
      } catch (const Error& e) {
        send(res, json_reply(500, {{"error", "internal"}, {"reason", e.what()}}));
      }
    };
  };
  svr.Get("/health", guarded([this](const httplib::Request&) { return health(); }));
  svr.Get("/samples", guarded([this](const httplib::Request&) { return list_samples(); }));
  svr.Get(R"(/samples/([^/]+)/annotation)",
          guarded([this](const httplib::Request& r) { return get_annotation(r.matches[1]); }));
  svr.Get(R"(/samples/([^/]+)/rgb\.png)",
          guarded([this](const httplib::Request& r) { return rgb_image(r.matches[1]); }));
  svr.Get(R"(/samples/([^/]+)/depth\.png)",
          guarded([this](const httplib::Request& r) { return depth_image(r.matches[1]); }));
  svr.Get(R"(/samples/([^/]+)/mask\.png)",
          guarded([this](const httplib::Request& r) { return mask_overlay(r.matches[1]); }));
  svr.Get(R"(/samples/([^/]+)/cloud\.ply)",
          guarded([this](const httplib::Request& r) { return preview_cloud(r.matches[1]); }));
  svr.Post(R"(/samples/([^/]+)/instances/(\d+))",
           guarded([this](const httplib::Request& r) {
             return submit_points(r.matches[1], std::stoi(r.matches[2]), r.body);
           }));
  svr.Get(R"(/samples/([^/]+)/instances/(\d+)/preview/depth\.pfm)",
          guarded([this](const httplib::Request& r) {
            return preview_depth(r.matches[1], std::stoi(r.matches[2]));
          }));
  svr.Get(R"(/samples/([^/]+)/instances/(\d+)/preview/error\.png)",
          guarded([this](const httplib::Request& r) {
            return preview_error(r.matches[1], std::stoi(r.matches[2]));
          }));
  svr.Post(R"(/samples/([^/]+)/accept)", guarded([this](const httplib::Request& r) {
             return set_review(r.matches[1], ReviewStatus::kAccepted);
           }));
  svr.Post(R"(/samples/([^/]+)/reject)", guarded([this](const httplib::Request& r) {
             return set_review(r.matches[1], ReviewStatus::kRejected);
           }));
}

bool AnnotationService::bind() {
  server_ = std::make_unique<httplib::Server>();
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
  });
  install_routes();
  if (cfg_.port == 0) {
    bound_port_ = server_->bind_to_any_port(cfg_.host);
  } else {
    bound_port_ = server_->bind_to_port(cfg_.host, cfg_.port) ? cfg_.port : -1;
  }
  return bound_port_ > 0;
}

void AnnotationService::run() {
  if (!server_ || bound_port_ <= 0) throw Error("service is not bound to a port");
  server_->listen_after_bind();
}

void AnnotationService::stop() {
  if (server_) server_->stop();
}

}  // namespace glassdepth
