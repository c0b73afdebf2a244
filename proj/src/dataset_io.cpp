#include "larm/dataset_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

namespace larm {

using nlohmann::json;

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode, ErrorCode err) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(err, "cannot open " + path.string());
  return f;
}

uint8_t quantize(float v) {
  return static_cast<uint8_t>(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f);
}

}  // namespace

void write_png_rgb8(const Image<float>& rgb, const fs::path& path) {
  if (rgb.channels != 3) throw Error(ErrorCode::ShapeMismatch, "expected 3-channel image");
  FilePtr f = open_file(path, "wb", ErrorCode::DiskWrite);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::DiskWrite, "png write failed: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, rgb.width, rgb.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<uint8_t> row(static_cast<size_t>(rgb.width) * 3);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x)
      for (int c = 0; c < 3; ++c) row[x * 3 + c] = quantize(rgb.at(x, y, c));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image<float> read_png_rgb8(const fs::path& path) {
  FilePtr f = open_file(path, "rb", ErrorCode::CorruptHeader);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::CorruptHeader, "png read failed: " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  int w = png_get_image_width(png, info), h = png_get_image_height(png, info);
  Image<float> img(w, h, 3);
  std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = row[x * 3 + c] / 255.0f;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png_mask1(const Image<uint8_t>& mask, const fs::path& path) {
  FilePtr f = open_file(path, "wb", ErrorCode::DiskWrite);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::DiskWrite, "png write failed: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, mask.width, mask.height, 1, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_set_packing(png);  // we hand libpng one byte per pixel
  std::vector<uint8_t> row(static_cast<size_t>(mask.width));
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) row[x] = mask.at(x, y) ? 1 : 0;
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image<uint8_t> read_png_mask1(const fs::path& path) {
  FilePtr f = open_file(path, "rb", ErrorCode::CorruptHeader);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::CorruptHeader, "png read failed: " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_packing(png);
  png_read_update_info(png, info);
  int w = png_get_image_width(png, info), h = png_get_image_height(png, info);
  Image<uint8_t> mask(w, h, 1);
  std::vector<uint8_t> row(static_cast<size_t>(w));
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x) mask.at(x, y) = row[x] ? 1 : 0;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return mask;
}

// ---------------------------------------------------------------------------
// Depth
// ---------------------------------------------------------------------------

static constexpr char kDepthMagic[8] = {'L', 'A', 'R', 'M', 'D', 'P', 'T', 'H'};

static void put_u32_le(std::vector<uint8_t>& buf, uint32_t v) {
  buf.push_back(v & 0xff);
  buf.push_back((v >> 8) & 0xff);
  buf.push_back((v >> 16) & 0xff);
  buf.push_back((v >> 24) & 0xff);
}

static uint32_t get_u32_le(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

void write_depth(const Image<float>& depth, const fs::path& path) {
  std::vector<uint8_t> buf;
  buf.insert(buf.end(), kDepthMagic, kDepthMagic + 8);
  put_u32_le(buf, static_cast<uint32_t>(depth.width));
  put_u32_le(buf, static_cast<uint32_t>(depth.height));
  for (float v : depth.data) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32_le(buf, bits);
  }
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::DiskWrite, "cannot write " + path.string());
}

Image<float> read_depth(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::CorruptHeader, "cannot open " + path.string());
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 16 || std::memcmp(buf.data(), kDepthMagic, 8) != 0)
    throw Error(ErrorCode::CorruptHeader, "bad depth header: " + path.string());
  uint32_t w = get_u32_le(buf.data() + 8), h = get_u32_le(buf.data() + 12);
  if (buf.size() != 16 + static_cast<size_t>(w) * h * 4)
    throw Error(ErrorCode::SizeMismatch, "depth payload truncated: " + path.string());
  Image<float> depth(static_cast<int>(w), static_cast<int>(h), 1);
  for (size_t i = 0; i < depth.data.size(); ++i) {
    uint32_t bits = get_u32_le(buf.data() + 16 + i * 4);
    std::memcpy(&depth.data[i], &bits, 4);
  }
  return depth;
}

// ---------------------------------------------------------------------------
// Frames and sidecars
// ---------------------------------------------------------------------------

static json pose_to_json(const CameraIntrinsics& intr, const CameraPose& pose) {
  std::vector<double> rot(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot[r * 3 + c] = pose.rotation(r, c);
  return json{{"fx", intr.fx},       {"fy", intr.fy},
              {"cx", intr.cx},       {"cy", intr.cy},
              {"width", intr.width}, {"height", intr.height},
              {"rotation", rot},
              {"translation", {pose.translation.x(), pose.translation.y(), pose.translation.z()}}};
}

static void pose_from_json(const json& j, CameraIntrinsics& intr, CameraPose& pose) {
  intr.fx = j.at("fx");
  intr.fy = j.at("fy");
  intr.cx = j.at("cx");
  intr.cy = j.at("cy");
  intr.width = j.at("width");
  intr.height = j.at("height");
  auto rot = j.at("rotation").get<std::vector<double>>();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) pose.rotation(r, c) = rot[r * 3 + c];
  auto t = j.at("translation").get<std::vector<double>>();
  pose.translation = Vec3(t[0], t[1], t[2]);
}

void write_sample(const SampleFrame& frame, const fs::path& stem) {
  fs::create_directories(stem.parent_path());
  write_png_rgb8(frame.rgb, stem.string() + ".png");
  write_depth(frame.depth, stem.string() + ".dpth");
  write_png_mask1(frame.fg_mask, stem.string() + "_fg.png");
  write_png_mask1(frame.part_mask, stem.string() + "_part.png");
  json j = pose_to_json(frame.intr, frame.pose);
  j["theta"] = frame.theta;
  j["joint_id"] = frame.joint_id;
  std::ofstream out(stem.string() + ".json");
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::DiskWrite, "cannot write sidecar for " + stem.string());
}

SampleFrame read_sample(const fs::path& stem) {
  SampleFrame frame;
  frame.rgb = read_png_rgb8(stem.string() + ".png");
  frame.depth = read_depth(stem.string() + ".dpth");
  frame.fg_mask = read_png_mask1(stem.string() + "_fg.png");
  frame.part_mask = read_png_mask1(stem.string() + "_part.png");
  std::ifstream in(stem.string() + ".json");
  if (!in) throw Error(ErrorCode::CorruptHeader, "missing sidecar for " + stem.string());
  json j = json::parse(in);
  pose_from_json(j, frame.intr, frame.pose);
  frame.theta = j.at("theta");
  frame.joint_id = j.at("joint_id");
  if (frame.depth.width != frame.rgb.width || frame.depth.height != frame.rgb.height)
    throw Error(ErrorCode::SizeMismatch, "frame plane sizes disagree: " + stem.string());
  return frame;
}

// ---------------------------------------------------------------------------
// Index
// ---------------------------------------------------------------------------

ArticulatedScene SceneMeta::rebuild() const {
  ArticulatedScene scene = sample_scene(seed, family);
  if (variant_seed) scene = augment_scene(scene, variant_seed);
  return scene;
}

static json joint_to_json(const JointSpec& j) {
  return json{{"kind", to_string(j.kind)},
              {"axis", {j.axis.x(), j.axis.y(), j.axis.z()}},
              {"pivot", {j.pivot.x(), j.pivot.y(), j.pivot.z()}},
              {"scale", j.scale}};
}

static JointSpec joint_from_json(const json& j) {
  auto a = j.at("axis").get<std::vector<double>>();
  auto p = j.at("pivot").get<std::vector<double>>();
  JointKind kind = joint_kind_from_string(j.at("kind"));
  if (kind == JointKind::Revolute)
    return JointSpec::revolute(Vec3(a[0], a[1], a[2]), Vec3(p[0], p[1], p[2]), j.at("scale"));
  return JointSpec::prismatic(Vec3(a[0], a[1], a[2]), j.at("scale"));
}

void write_index(const DatasetIndex& index, const fs::path& root) {
  json scenes = json::array();
  for (const auto& s : index.scenes) {
    json joints = json::array();
    for (const auto& j : s.joints) joints.push_back(joint_to_json(j));
    scenes.push_back({{"scene_id", s.scene_id},
                      {"seed", s.seed},
                      {"family", to_string(s.family)},
                      {"variant_seed", s.variant_seed},
                      {"joints", joints}});
  }
  json records = json::array();
  for (const auto& r : index.records)
    records.push_back({{"scene_id", r.scene_id},
                       {"joint_id", r.joint_id},
                       {"stem", r.stem},
                       {"theta", r.theta},
                       {"is_input", r.is_input},
                       {"split", r.split}});
  json j{{"resolution", index.resolution}, {"scenes", scenes}, {"records", records}};
  fs::create_directories(root);
  std::ofstream out(root / "index.json");
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::DiskWrite, "cannot write index");
}

DatasetIndex read_index(const fs::path& root) {
  std::ifstream in(root / "index.json");
  if (!in) throw Error(ErrorCode::CorruptHeader, "missing index.json in " + root.string());
  json j = json::parse(in);
  DatasetIndex index;
  index.resolution = j.at("resolution");
  for (const auto& s : j.at("scenes")) {
    SceneMeta meta;
    meta.scene_id = s.at("scene_id");
    meta.seed = s.at("seed");
    meta.family = scene_family_from_string(s.at("family"));
    meta.variant_seed = s.at("variant_seed");
    for (const auto& joint : s.at("joints")) meta.joints.push_back(joint_from_json(joint));
    index.scenes.push_back(meta);
  }
  for (const auto& r : j.at("records")) {
    FrameRecord rec;
    rec.scene_id = r.at("scene_id");
    rec.joint_id = r.at("joint_id");
    rec.stem = r.at("stem");
    rec.theta = r.at("theta");
    rec.is_input = r.at("is_input");
    rec.split = r.at("split");
    index.records.push_back(rec);
  }
  return index;
}

DatasetIndex split_dataset(const DatasetIndex& index, const std::vector<double>& fractions,
                           const std::vector<std::string>& names, uint64_t seed) {
  if (fractions.size() != names.size() || fractions.empty())
    throw Error(ErrorCode::InvalidArgument, "fractions/names size mismatch");
  double sum = std::accumulate(fractions.begin(), fractions.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "fractions must sum to 1");

  std::vector<int> scene_ids;
  for (const auto& s : index.scenes) scene_ids.push_back(s.scene_id);
  Rng rng(seed ^ 0x853c49e6748fea9bull);
  for (size_t i = scene_ids.size(); i > 1; --i)
    std::swap(scene_ids[i - 1], scene_ids[rng.below(i)]);

  const size_t n = scene_ids.size();
  std::vector<std::string> assignment(n);
  size_t cursor = 0;
  for (size_t k = 0; k < fractions.size(); ++k) {
    size_t take = k + 1 == fractions.size()
                      ? n - cursor
                      : static_cast<size_t>(std::llround(fractions[k] * n));
    if (take == 0) throw Error(ErrorCode::EmptySplit, "split '" + names[k] + "' has no scenes");
    for (size_t i = 0; i < take && cursor < n; ++i) assignment[cursor++] = names[k];
  }

  std::unordered_map<int, std::string> by_scene;
  for (size_t i = 0; i < n; ++i) by_scene[scene_ids[i]] = assignment[i];
  DatasetIndex out = index;
  for (auto& r : out.records) r.split = by_scene.at(r.scene_id);
  return out;
}

// ---------------------------------------------------------------------------
// Dataset generation
// ---------------------------------------------------------------------------

DatasetIndex make_dataset(const DatasetSpec& spec, const fs::path& root) {
  if (spec.resolution % 8 != 0)
    throw Error(ErrorCode::InvalidArgument, "resolution must be a multiple of the patch size");
  DatasetIndex index;
  index.resolution = spec.resolution;
  CameraIntrinsics intr = default_intrinsics(spec.resolution);
  Rng rng(spec.seed * 0x2545f4914f6cdd1dull + 99);

  int scene_id = 0;
  for (int base = 0; base < spec.n_scenes; ++base) {
    SceneFamily family = spec.families[base % spec.families.size()];
    uint64_t scene_seed = spec.seed * 1000003ull + base;
    for (int variant = 0; variant < spec.variants_per_scene; ++variant) {
      SceneMeta meta;
      meta.scene_id = scene_id++;
      meta.seed = scene_seed;
      meta.family = family;
      meta.variant_seed = variant == 0 ? 0 : scene_seed * 31ull + variant;
      ArticulatedScene scene = meta.rebuild();
      for (const auto& part : scene.parts) meta.joints.push_back(part.joint);
      index.scenes.push_back(meta);

      for (int joint = 0; joint < scene.num_joints(); ++joint) {
        Rng frame_rng = rng.fork(meta.scene_id * 131ull + joint);
        int frame_id = 0;
        auto emit = [&](double theta, bool is_input) {
          CameraPose pose = sample_camera(frame_rng);
          SampleFrame frame = rasterize(scene, intr, pose, theta, joint);
          char name[64];
          std::snprintf(name, sizeof(name), "frame_%04d", frame_id++);
          FrameRecord rec;
          rec.scene_id = meta.scene_id;
          rec.joint_id = joint;
          rec.stem = "scenes/" + std::to_string(meta.scene_id) + "/" + std::to_string(joint) +
                     "/" + name;
          rec.theta = theta;
          rec.is_input = is_input;
          write_sample(frame, root / rec.stem);
          index.records.push_back(rec);
        };
        for (double state : spec.states)
          for (int v = 0; v < spec.views_per_state; ++v) emit(state, true);
        for (int t = 0; t < spec.n_targets; ++t) emit(frame_rng.uniform(), false);
      }
    }
  }
  write_index(index, root);
  return index;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

static constexpr char kCkptMagic[8] = {'L', 'A', 'R', 'M', 'C', 'K', 'P', 'T'};

void save_params(const ModelParams& params, const fs::path& path) {
  std::vector<uint8_t> buf;
  buf.insert(buf.end(), kCkptMagic, kCkptMagic + 8);
  const ModelConfig& c = params.cfg;
  for (int v : {c.patch_size, c.dim, c.layers, c.heads, c.image_h, c.image_w, c.views_per_state,
                c.channels})
    put_u32_le(buf, static_cast<uint32_t>(v));
  put_u32_le(buf, static_cast<uint32_t>(params.t.count()));
  for (size_t i = 0; i < params.t.count(); ++i) {
    const std::string& name = params.t.names[i];
    const MatX<float>& m = params.t.tensors[i];
    put_u32_le(buf, static_cast<uint32_t>(name.size()));
    buf.insert(buf.end(), name.begin(), name.end());
    put_u32_le(buf, static_cast<uint32_t>(m.rows()));
    put_u32_le(buf, static_cast<uint32_t>(m.cols()));
    for (int col = 0; col < m.cols(); ++col)
      for (int row = 0; row < m.rows(); ++row) {
        uint32_t bits;
        float v = m(row, col);
        std::memcpy(&bits, &v, 4);
        put_u32_le(buf, bits);
      }
  }
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::DiskWrite, "cannot write checkpoint " + path.string());
}

ModelParams load_params(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::CorruptHeader, "cannot open checkpoint " + path.string());
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 8 + 9 * 4 || std::memcmp(buf.data(), kCkptMagic, 8) != 0)
    throw Error(ErrorCode::CorruptHeader, "bad checkpoint header");
  size_t off = 8;
  auto read_u32 = [&]() {
    if (off + 4 > buf.size()) throw Error(ErrorCode::SizeMismatch, "checkpoint truncated");
    uint32_t v = get_u32_le(buf.data() + off);
    off += 4;
    return v;
  };
  ModelParams params;
  ModelConfig& c = params.cfg;
  c.patch_size = static_cast<int>(read_u32());
  c.dim = static_cast<int>(read_u32());
  c.layers = static_cast<int>(read_u32());
  c.heads = static_cast<int>(read_u32());
  c.image_h = static_cast<int>(read_u32());
  c.image_w = static_cast<int>(read_u32());
  c.views_per_state = static_cast<int>(read_u32());
  c.channels = static_cast<int>(read_u32());
  uint32_t n_tensors = read_u32();
  for (uint32_t i = 0; i < n_tensors; ++i) {
    uint32_t name_len = read_u32();
    if (off + name_len > buf.size()) throw Error(ErrorCode::SizeMismatch, "checkpoint truncated");
    std::string name(reinterpret_cast<const char*>(buf.data() + off), name_len);
    off += name_len;
    uint32_t rows = read_u32(), cols = read_u32();
    MatX<float>& m = params.t.add(name, static_cast<int>(rows), static_cast<int>(cols));
    for (uint32_t col = 0; col < cols; ++col)
      for (uint32_t row = 0; row < rows; ++row) {
        uint32_t bits = read_u32();
        float v;
        std::memcpy(&v, &bits, 4);
        m(static_cast<int>(row), static_cast<int>(col)) = v;
      }
  }
  return params;
}

ModelParams load_params(const fs::path& path, const ModelConfig& expect) {
  ModelParams params = load_params(path);
  if (!(params.cfg == expect))
    throw Error(ErrorCode::ConfigMismatch, "checkpoint config does not match model config");
  return params;
}

}  // namespace larm
