#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "glassdepth/annotation.hpp"
#include "glassdepth/dataset.hpp"

namespace httplib {
class Server;
}

namespace glassdepth {

struct ServiceConfig {
  fs::path dataset_root;
  std::optional<double> depth_scale;
  std::string host = "127.0.0.1";
  int port = 8080;         // 0 picks a free port
  int preview_stride = 4;  // decimation of preview clouds
};

struct ServiceReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Backend for the human annotation loop. Every mutation is written to the
/// sample's annotation record before it is acknowledged, and the in-memory
/// state is rebuilt from those records on start-up.
class AnnotationService {
 public:
  explicit AnnotationService(ServiceConfig cfg);
  ~AnnotationService();

  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  // Request handlers, usable without the HTTP transport.
  ServiceReply health() const;
  ServiceReply list_samples();
  ServiceReply get_annotation(const std::string& id);
  ServiceReply rgb_image(const std::string& id);
  ServiceReply depth_image(const std::string& id);
  ServiceReply mask_overlay(const std::string& id);
  ServiceReply submit_points(const std::string& id, int instance, const std::string& body);
  ServiceReply preview_depth(const std::string& id, int instance);
  ServiceReply preview_error(const std::string& id, int instance);
  ServiceReply preview_cloud(const std::string& id);
  ServiceReply set_review(const std::string& id, ReviewStatus status);

  /// Binds the HTTP listener; false when the address is unavailable.
  bool bind();
  int port() const { return bound_port_; }
  /// Serves until stop(). Requires a successful bind().
  void run();
  void stop();

 private:
  struct SampleInputs {
    DepthMap raw;
    BinaryMask mask;
    io::IntrinsicsRecord intrinsics;
  };
  struct SampleState {
    std::mutex mutex;
    GlassAnnotation annotation;
    std::shared_ptr<const SampleInputs> inputs;
  };

  SampleState* find(const std::string& id);
  std::shared_ptr<const SampleInputs> inputs_locked(const std::string& id, SampleState& state);
  void install_routes();

  ServiceConfig cfg_;
  Dataset dataset_;
  std::map<std::string, std::unique_ptr<SampleState>> samples_;
  std::unique_ptr<httplib::Server> server_;
  int bound_port_ = -1;
};

}  // namespace glassdepth
