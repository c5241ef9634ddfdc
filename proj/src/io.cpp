#include "glassdepth/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "glassdepth/error.hpp"

namespace glassdepth::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written in host order and assume a little-endian host");

using nlohmann::json;

// ---- files ----------------------------------------------------------------

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return std::move(ss).str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(rng() % 1000000007ULL);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

namespace {

template <typename T>
void append_pod(std::string& out, const T& value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(const char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

// ---- depth ----------------------------------------------------------------

DepthMap load_depth_png16(const fs::path& path, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("depth scale must be positive");
  const RawImage img = decode_png(read_file(path));
  if (img.channels != 1 || img.bit_depth != 16) {
    throw BadFormat(path.string() + " is not a 16-bit single-channel PNG");
  }
  std::vector<double> values(img.samples.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = img.samples[i] == 0 ? DepthMap::invalid_value() : img.samples[i] / scale;
  }
  return DepthMap(img.width, img.height, std::move(values));
}

void save_depth_png16(const DepthMap& depth, const fs::path& path, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("depth scale must be positive");
  RawImage img{depth.width(), depth.height(), 1, 16, std::vector<std::uint16_t>(depth.size(), 0)};
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!depth.valid(i)) continue;
    const double units = std::round(depth[i] * scale);
    if (units > 65535.0) {
      throw InvalidArgument("depth " + std::to_string(depth[i]) +
                            " m does not fit a 16-bit PNG at scale " + std::to_string(scale));
    }
    img.samples[i] = static_cast<std::uint16_t>(units);
  }
  write_file_atomic(path, encode_png(img));
}

namespace {

DepthMap parse_pfm(const std::string& bytes, const fs::path& path) {
  std::istringstream header(bytes);
  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  if (!(header >> magic >> width >> height >> scale) || (magic != "Pf" && magic != "PF")) {
    throw BadFormat(path.string() + ": malformed PFM header");
  }
  const auto pos = static_cast<std::size_t>(header.tellg()) + 1;  // single whitespace byte
  if (magic == "PF") throw BadFormat(path.string() + ": 3-channel PFM is not a depth map");
  if (width < 1 || height < 1 || scale == 0.0) throw BadFormat(path.string() + ": bad PFM header");
  if (scale > 0.0) throw BadFormat(path.string() + ": big-endian PFM is not supported");
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() != pos + count * sizeof(float)) {
    throw BadFormat(path.string() + ": PFM payload does not match header dimensions");
  }
  std::vector<double> values(count);
  for (int r = 0; r < height; ++r) {
    const int v = height - 1 - r;  // PFM rows run bottom-up
    for (int u = 0; u < width; ++u) {
      const std::size_t src = pos + (static_cast<std::size_t>(r) * width + u) * sizeof(float);
      values[static_cast<std::size_t>(v) * width + u] = read_pod<float>(bytes.data() + src);
    }
  }
  return DepthMap(width, height, std::move(values));
}

DepthMap parse_npy(const std::string& bytes, const fs::path& path) {
  if (bytes.size() < 10 || bytes.compare(0, 6, "\x93NUMPY") != 0) {
    throw BadFormat(path.string() + ": not a .npy file");
  }
  const int major = static_cast<unsigned char>(bytes[6]);
  std::size_t header_len = 0, offset = 0;
  if (major == 1) {
    header_len = read_pod<std::uint16_t>(bytes.data() + 8);
    offset = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) throw BadFormat(path.string() + ": truncated .npy header");
    header_len = read_pod<std::uint32_t>(bytes.data() + 8);
    offset = 12;
  } else {
    throw BadFormat(path.string() + ": unsupported .npy version");
  }
  if (bytes.size() < offset + header_len) throw BadFormat(path.string() + ": truncated .npy header");
  const std::string header = bytes.substr(offset, header_len);
  std::smatch m;
  if (!std::regex_search(header, m, std::regex(R"('descr'\s*:\s*'([<>|=]?)(f[48])')"))) {
    throw BadFormat(path.string() + ": .npy dtype must be float32 or float64");
  }
  if (m[1] == ">") throw BadFormat(path.string() + ": big-endian .npy is not supported");
  const bool is_f8 = m[2] == "f8";
  const bool fortran = std::regex_search(header, std::regex(R"('fortran_order'\s*:\s*True)"));
  if (!std::regex_search(header, m, std::regex(R"('shape'\s*:\s*\(\s*(\d+)\s*,\s*(\d+)\s*,?\s*\))"))) {
    throw BadFormat(path.string() + ": .npy array must be two-dimensional");
  }
  const int height = std::stoi(m[1]);
  const int width = std::stoi(m[2]);
  if (width < 1 || height < 1) throw BadFormat(path.string() + ": empty .npy array");
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t item = is_f8 ? 8 : 4;
  const std::size_t data = offset + header_len;
  if (bytes.size() != data + count * item) {
    throw BadFormat(path.string() + ": .npy payload does not match its shape");
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const char* p = bytes.data() + data + i * item;
    const double value = is_f8 ? read_pod<double>(p) : read_pod<float>(p);
    std::size_t dst = i;
    if (fortran) {
      const std::size_t col = i / static_cast<std::size_t>(height);
      const std::size_t row = i % static_cast<std::size_t>(height);
      dst = row * static_cast<std::size_t>(width) + col;
    }
    values[dst] = value;
  }
  return DepthMap(width, height, std::move(values));
}

}  // namespace

DepthMap load_prior(const fs::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 6 && bytes.compare(0, 6, "\x93NUMPY") == 0) return parse_npy(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == 'f' || bytes[1] == 'F')) {
    return parse_pfm(bytes, path);
  }
  throw BadFormat(path.string() + ": prior must be a PFM or .npy file");
}

std::string encode_pfm(const DepthMap& depth) {
  std::string out = "Pf\n" + std::to_string(depth.width()) + " " +
                    std::to_string(depth.height()) + "\n-1.0\n";
  out.reserve(out.size() + depth.size() * sizeof(float));
  for (int r = 0; r < depth.height(); ++r) {
    const int v = depth.height() - 1 - r;
    for (int u = 0; u < depth.width(); ++u) {
      const float value = depth.valid(u, v) ? static_cast<float>(depth.at(u, v))
                                            : std::numeric_limits<float>::quiet_NaN();
      append_pod(out, value);
    }
  }
  return out;
}

void save_pfm(const DepthMap& depth, const fs::path& path) { write_file_atomic(path, encode_pfm(depth)); }

void save_npy(const DepthMap& depth, const fs::path& path) {
  std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (" +
                       std::to_string(depth.height()) + ", " + std::to_string(depth.width()) +
                       "), }";
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  std::string out("\x93NUMPY\x01\x00", 8);
  append_pod(out, static_cast<std::uint16_t>(header.size()));
  out += header;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    append_pod(out, depth.valid(i) ? depth[i] : std::numeric_limits<double>::quiet_NaN());
  }
  write_file_atomic(path, out);
}

DepthMap load_depth_any(const fs::path& path, double scale) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return load_depth_png16(path, scale);
  if (ext == ".pfm" || ext == ".npy") return load_prior(path);
  throw BadFormat(path.string() + ": unknown depth file extension (expected .png, .pfm or .npy)");
}

void save_depth_any(const DepthMap& depth, const fs::path& path, double scale) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return save_depth_png16(depth, path, scale);
  if (ext == ".pfm") return save_pfm(depth, path);
  if (ext == ".npy") return save_npy(depth, path);
  throw InvalidArgument(path.string() + ": unknown depth file extension (expected .png, .pfm or .npy)");
}

// ---- masks ----------------------------------------------------------------

namespace {

std::uint64_t pixel_key(const RawImage& img, std::size_t i) {
  const std::uint16_t* s = img.samples.data() + i * static_cast<std::size_t>(img.channels);
  if (img.channels <= 2) return s[0];
  return (static_cast<std::uint64_t>(s[0]) << 32) | (static_cast<std::uint64_t>(s[1]) << 16) | s[2];
}

std::vector<std::uint16_t> label_components(const std::vector<bool>& fg, int width, int height) {
  std::vector<std::uint16_t> labels(fg.size(), 0);
  std::vector<std::size_t> stack;
  std::uint32_t next = 0;
  for (std::size_t seed = 0; seed < fg.size(); ++seed) {
    if (!fg[seed] || labels[seed] != 0) continue;
    if (++next > 65535) throw BadFormat("mask has more than 65535 components");
    labels[seed] = static_cast<std::uint16_t>(next);
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const int u = static_cast<int>(p % width);
      const int v = static_cast<int>(p / width);
      for (int dv = -1; dv <= 1; ++dv) {
        for (int du = -1; du <= 1; ++du) {
          const int nu = u + du, nv = v + dv;
          if (nu < 0 || nv < 0 || nu >= width || nv >= height) continue;
          const std::size_t q = static_cast<std::size_t>(nv) * width + nu;
          if (fg[q] && labels[q] == 0) {
            labels[q] = static_cast<std::uint16_t>(next);
            stack.push_back(q);
          }
        }
      }
    }
  }
  return labels;
}

}  // namespace

BinaryMask load_mask(const fs::path& path, MaskEncoding encoding) {
  const RawImage img = decode_png(read_file(path));
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  std::vector<std::uint64_t> keys(n);
  std::map<std::uint64_t, std::uint16_t> ids;
  std::vector<std::uint64_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    keys[i] = pixel_key(img, i);
    if (keys[i] != 0 && ids.emplace(keys[i], 0).second) order.push_back(keys[i]);
  }
  if (encoding == MaskEncoding::kAuto) {
    encoding = order.size() <= 1 ? MaskEncoding::kBinary : MaskEncoding::kInstance;
  }
  if (encoding == MaskEncoding::kBinary) {
    std::vector<bool> fg(n);
    for (std::size_t i = 0; i < n; ++i) fg[i] = keys[i] != 0;
    return BinaryMask(img.width, img.height, label_components(fg, img.width, img.height));
  }
  if (order.size() > 65535) throw BadFormat(path.string() + ": too many mask instances");
  for (std::size_t k = 0; k < order.size(); ++k) ids[order[k]] = static_cast<std::uint16_t>(k + 1);
  std::vector<std::uint16_t> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (keys[i] != 0) labels[i] = ids[keys[i]];
  }
  return BinaryMask(img.width, img.height, std::move(labels));
}

void save_mask(const BinaryMask& mask, const fs::path& path) {
  RawImage img{mask.width(), mask.height(), 1, mask.instance_count() > 255 ? 16 : 8,
               std::vector<std::uint16_t>(mask.labels().begin(), mask.labels().end())};
  write_file_atomic(path, encode_png(img));
}

PixelMask load_pixel_mask(const fs::path& path) {
  const RawImage img = decode_png(read_file(path));
  PixelMask mask(img.width, img.height);
  for (std::size_t i = 0; i < mask.size(); ++i) mask.set(i, pixel_key(img, i) != 0);
  return mask;
}

void save_pixel_mask(const PixelMask& mask, const fs::path& path) {
  RawImage img{mask.width(), mask.height(), 1, 8, std::vector<std::uint16_t>(mask.size(), 0)};
  for (std::size_t i = 0; i < mask.size(); ++i) img.samples[i] = mask[i] ? 255 : 0;
  write_file_atomic(path, encode_png(img));
}

// ---- structured records ---------------------------------------------------

namespace {

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw BadFormat(std::string(what) + " is not valid JSON: " + e.what());
  }
}

template <typename T>
T required(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) {
    throw BadFormat(std::string(what) + " is missing '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw BadFormat(std::string(what) + " has a malformed '" + key + "'");
  }
}

}  // namespace

std::string serialize_intrinsics(const IntrinsicsRecord& r) {
  json j;
  j["fx"] = r.k.fx;
  j["fy"] = r.k.fy;
  j["cx"] = r.k.cx;
  j["cy"] = r.k.cy;
  j["width"] = r.width;
  j["height"] = r.height;
  return j.dump(2) + "\n";
}

IntrinsicsRecord parse_intrinsics(std::string_view text) {
  const json j = parse_json(text, "intrinsics record");
  IntrinsicsRecord r;
  try {
    r.k = CameraIntrinsics(required<double>(j, "fx", "intrinsics record"),
                           required<double>(j, "fy", "intrinsics record"),
                           required<double>(j, "cx", "intrinsics record"),
                           required<double>(j, "cy", "intrinsics record"));
  } catch (const InvalidArgument& e) {
    throw BadFormat(std::string("intrinsics record: ") + e.what());
  }
  r.width = required<int>(j, "width", "intrinsics record");
  r.height = required<int>(j, "height", "intrinsics record");
  if (r.width < 1 || r.height < 1) throw BadFormat("intrinsics record has non-positive image size");
  return r;
}

IntrinsicsRecord load_intrinsics(const fs::path& path) { return parse_intrinsics(read_file(path)); }

void save_intrinsics(const IntrinsicsRecord& record, const fs::path& path) {
  write_file_atomic(path, serialize_intrinsics(record));
}

std::string serialize_annotation(const GlassAnnotation& a) {
  json j;
  j["sample_id"] = a.sample_id;
  j["review_status"] = to_string(a.review_status);
  j["instances"] = json::array();
  for (const auto& inst : a.instances) {
    json ji;
    ji["points"] = json::array();
    for (const auto& p : inst.points) ji["points"].push_back({p.u, p.v});
    ji["matched_mask_id"] = inst.matched_mask_id ? json(*inst.matched_mask_id) : json(nullptr);
    if (inst.plane) {
      const auto& n = inst.plane->normal();
      ji["plane"] = {{"normal", {n.x(), n.y(), n.z()}},
                     {"offset", inst.plane->offset()},
                     {"residual_rms", inst.residual_rms}};
    } else {
      ji["plane"] = nullptr;
    }
    j["instances"].push_back(std::move(ji));
  }
  return j.dump(2) + "\n";
}

GlassAnnotation parse_annotation(std::string_view text) {
  constexpr const char* what = "annotation record";
  const json j = parse_json(text, what);
  GlassAnnotation a;
  a.sample_id = required<std::string>(j, "sample_id", what);
  a.review_status = review_status_from_string(required<std::string>(j, "review_status", what));
  const json instances = required<json>(j, "instances", what);
  if (!instances.is_array()) throw BadFormat("annotation 'instances' must be an array");
  for (const auto& ji : instances) {
    InstanceAnnotation inst;
    for (const auto& p : required<json>(ji, "points", what)) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer()) {
        throw BadFormat("annotation point must be [u, v] integers");
      }
      inst.points.push_back({p[0].get<int>(), p[1].get<int>()});
    }
    if (ji.contains("matched_mask_id") && !ji["matched_mask_id"].is_null()) {
      inst.matched_mask_id = required<int>(ji, "matched_mask_id", what);
    }
    if (ji.contains("plane") && !ji["plane"].is_null()) {
      const json& jp = ji["plane"];
      const auto n = required<std::vector<double>>(jp, "normal", what);
      if (n.size() != 3) throw BadFormat("plane normal must have three components");
      try {
        inst.plane = PlaneModel({n[0], n[1], n[2]}, required<double>(jp, "offset", what));
      } catch (const InvalidArgument& e) {
        throw BadFormat(std::string("annotation plane: ") + e.what());
      }
      inst.residual_rms = required<double>(jp, "residual_rms", what);
    }
    a.instances.push_back(std::move(inst));
  }
  return a;
}

GlassAnnotation load_annotation(const fs::path& path) { return parse_annotation(read_file(path)); }

void save_annotation(const GlassAnnotation& annotation, const fs::path& path) {
  write_file_atomic(path, serialize_annotation(annotation));
}

// ---- geometry -------------------------------------------------------------

std::string encode_ply(const PointCloud& cloud) {
  const bool colored = !cloud.colors.empty();
  if (colored && cloud.colors.size() != cloud.points.size()) {
    throw InvalidArgument("point cloud has a color count different from its point count");
  }
  std::string out = "ply\nformat binary_little_endian 1.0\ncomment glassdepth point cloud\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  if (colored) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    append_pod(out, cloud.points[i].x());
    append_pod(out, cloud.points[i].y());
    append_pod(out, cloud.points[i].z());
    if (colored) out.append(reinterpret_cast<const char*>(cloud.colors[i].data()), 3);
  }
  return out;
}

void save_cloud_ply(const PointCloud& cloud, const fs::path& path) {
  write_file_atomic(path, encode_ply(cloud));
}

PointCloud load_cloud_ply(const fs::path& path) {
  const std::string bytes = read_file(path);
  const std::size_t end = bytes.find("end_header\n");
  if (bytes.compare(0, 4, "ply\n") != 0 || end == std::string::npos) {
    throw BadFormat(path.string() + ": not a PLY file");
  }
  std::istringstream header(bytes.substr(0, end));
  std::string line;
  std::size_t vertices = 0;
  bool binary_le = false;
  struct Property {
    std::string type, name;
  };
  std::vector<Property> props;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (word == "element") {
      std::string name;
      ls >> name >> vertices;
      if (name != "vertex") throw BadFormat(path.string() + ": only vertex elements are supported");
    } else if (word == "property") {
      Property p;
      ls >> p.type >> p.name;
      props.push_back(p);
    }
  }
  if (!binary_le) throw BadFormat(path.string() + ": only binary_little_endian PLY is supported");
  auto size_of = [&](const std::string& type) -> std::size_t {
    if (type == "double" || type == "float64") return 8;
    if (type == "float" || type == "float32") return 4;
    if (type == "uchar" || type == "uint8") return 1;
    throw BadFormat(path.string() + ": unsupported PLY property type " + type);
  };
  std::size_t stride = 0;
  for (const auto& p : props) stride += size_of(p.type);
  const std::size_t data = end + std::string("end_header\n").size();
  if (bytes.size() != data + vertices * stride) {
    throw BadFormat(path.string() + ": PLY payload does not match its header");
  }
  PointCloud cloud;
  const bool colored = std::any_of(props.begin(), props.end(),
                                   [](const Property& p) { return p.name == "red"; });
  cloud.points.resize(vertices);
  if (colored) cloud.colors.resize(vertices);
  for (std::size_t i = 0; i < vertices; ++i) {
    std::size_t off = data + i * stride;
    for (const auto& p : props) {
      const char* src = bytes.data() + off;
      double value = 0.0;
      if (p.type == "double" || p.type == "float64") value = read_pod<double>(src);
      else if (p.type == "float" || p.type == "float32") value = read_pod<float>(src);
      else value = static_cast<unsigned char>(*src);
      if (p.name == "x") cloud.points[i].x() = value;
      else if (p.name == "y") cloud.points[i].y() = value;
      else if (p.name == "z") cloud.points[i].z() = value;
      else if (p.name == "red") cloud.colors[i][0] = static_cast<std::uint8_t>(value);
      else if (p.name == "green") cloud.colors[i][1] = static_cast<std::uint8_t>(value);
      else if (p.name == "blue") cloud.colors[i][2] = static_cast<std::uint8_t>(value);
      off += size_of(p.type);
    }
  }
  return cloud;
}

fs::path occupancy_sidecar_path(const fs::path& pgm_path) {
  fs::path p = pgm_path;
  p.replace_extension(".yaml");
  return p;
}

void save_occupancy_pgm(const OccupancyGrid& grid, const fs::path& pgm_path) {
  std::string out = "P5\n" + std::to_string(grid.size_x) + " " + std::to_string(grid.size_y) +
                    "\n255\n";
  for (int r = 0; r < grid.size_y; ++r) {
    const int iy = grid.size_y - 1 - r;
    for (int ix = 0; ix < grid.size_x; ++ix) {
      switch (grid.at(ix, iy)) {
        case CellState::kOccupied:
          out.push_back(static_cast<char>(kPgmOccupied));
          break;
        case CellState::kFree:
          out.push_back(static_cast<char>(kPgmFree));
          break;
        case CellState::kUnknown:
          out.push_back(static_cast<char>(kPgmUnknown));
          break;
      }
    }
  }
  YAML::Emitter yaml;
  yaml.SetDoublePrecision(17);
  yaml << YAML::BeginMap;
  yaml << YAML::Key << "image" << YAML::Value << pgm_path.filename().string();
  yaml << YAML::Key << "resolution" << YAML::Value << grid.resolution;
  yaml << YAML::Key << "origin" << YAML::Value << YAML::Flow << YAML::BeginSeq
       << grid.origin.x() << grid.origin.y() << 0.0 << YAML::EndSeq;
  yaml << YAML::Key << "negate" << YAML::Value << 0;
  yaml << YAML::Key << "occupied_thresh" << YAML::Value << 0.65;
  yaml << YAML::Key << "free_thresh" << YAML::Value << 0.196;
  yaml << YAML::Key << "height_band" << YAML::Value << YAML::Flow << YAML::BeginSeq
       << grid.z_min << grid.z_max << YAML::EndSeq;
  yaml << YAML::EndMap;
  write_file_atomic(pgm_path, out);
  write_file_atomic(occupancy_sidecar_path(pgm_path), std::string(yaml.c_str()) + "\n");
}

OccupancyGrid load_occupancy_pgm(const fs::path& pgm_path) {
  const std::string bytes = read_file(pgm_path);
  std::istringstream header(bytes);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  if (!(header >> magic >> w >> h >> maxval) || magic != "P5" || maxval != 255 || w < 1 || h < 1) {
    throw BadFormat(pgm_path.string() + ": expected an 8-bit P5 graymap");
  }
  const auto data = static_cast<std::size_t>(header.tellg()) + 1;
  if (bytes.size() != data + static_cast<std::size_t>(w) * h) {
    throw BadFormat(pgm_path.string() + ": graymap payload does not match its header");
  }
  OccupancyGrid grid;
  try {
    const YAML::Node meta = YAML::LoadFile(occupancy_sidecar_path(pgm_path).string());
    grid.resolution = meta["resolution"].as<double>();
    grid.origin = {meta["origin"][0].as<double>(), meta["origin"][1].as<double>()};
    grid.z_min = meta["height_band"][0].as<double>();
    grid.z_max = meta["height_band"][1].as<double>();
  } catch (const YAML::Exception& e) {
    throw BadFormat(pgm_path.string() + ": bad occupancy sidecar: " + e.what());
  }
  grid.size_x = w;
  grid.size_y = h;
  grid.cells.resize(static_cast<std::size_t>(w) * h);
  for (int r = 0; r < h; ++r) {
    const int iy = h - 1 - r;
    for (int ix = 0; ix < w; ++ix) {
      const auto value = static_cast<std::uint8_t>(bytes[data + static_cast<std::size_t>(r) * w + ix]);
      CellState state = CellState::kUnknown;
      if (value == kPgmOccupied) state = CellState::kOccupied;
      else if (value == kPgmFree) state = CellState::kFree;
      grid.cells[static_cast<std::size_t>(iy) * w + ix] = state;
    }
  }
  return grid;
}

}  // namespace glassdepth::io
