#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "larm/frame.hpp"
#include "larm/model.hpp"
#include "larm/synth_world.hpp"

namespace larm {

namespace fs = std::filesystem;

// Basic rasters ------------------------------------------------------------

void write_png_rgb8(const Image<float>& rgb, const fs::path& path);
Image<float> read_png_rgb8(const fs::path& path);

/// Masks are stored as 1-bit grayscale PNG.
void write_png_mask1(const Image<uint8_t>& mask, const fs::path& path);
Image<uint8_t> read_png_mask1(const fs::path& path);

/// Raw little-endian float32 depth with a 16-byte header:
/// magic "LARMDPTH", u32 width, u32 height.
void write_depth(const Image<float>& depth, const fs::path& path);
Image<float> read_depth(const fs::path& path);

// Frames -------------------------------------------------------------------

/// Writes `<stem>.png`, `<stem>.dpth`, `<stem>_fg.png`, `<stem>_part.png`
/// and a JSON sidecar `<stem>.json` with the camera and joint state.
void write_sample(const SampleFrame& frame, const fs::path& stem);
SampleFrame read_sample(const fs::path& stem);

// Dataset index ------------------------------------------------------------

struct FrameRecord {
  int scene_id = 0;
  int joint_id = 0;
  std::string stem;  // path stem relative to the dataset root
  double theta = 0.0;
  bool is_input = false;  // conditioning view at theta in {0, 1} vs training target
  std::string split;      // "train" / "val" / "test" / "" before splitting
};

struct SceneMeta {
  int scene_id = 0;
  uint64_t seed = 0;
  SceneFamily family = SceneFamily::Door;
  uint64_t variant_seed = 0;  // 0: base scene, else augment_scene seed
  std::vector<JointSpec> joints;

  ArticulatedScene rebuild() const;
};

struct DatasetIndex {
  std::vector<SceneMeta> scenes;
  std::vector<FrameRecord> records;
  int resolution = 0;
};

void write_index(const DatasetIndex& index, const fs::path& root);
DatasetIndex read_index(const fs::path& root);

/// Scene-level split: every record of a scene lands in the same split.
/// `fractions` must sum to 1; throws EmptySplit when a fraction rounds to
/// zero scenes.
DatasetIndex split_dataset(const DatasetIndex& index, const std::vector<double>& fractions,
                           const std::vector<std::string>& names, uint64_t seed);

// Dataset generation -------------------------------------------------------

struct DatasetSpec {
  int n_scenes = 4;
  int views_per_state = 3;      // input views at each of theta = 0 and theta = 1
  std::vector<double> states = {0.0, 1.0};
  int n_targets = 0;            // extra frames at random theta / pose
  int resolution = 64;
  uint64_t seed = 0;
  int variants_per_scene = 1;   // > 1 applies scaling + texture augmentation
  std::vector<SceneFamily> families = {SceneFamily::Door, SceneFamily::Drawer, SceneFamily::Lid};
};

/// Renders and writes a dataset under `root`; returns the written index.
DatasetIndex make_dataset(const DatasetSpec& spec, const fs::path& root);

// Checkpoints --------------------------------------------------------------

/// Single binary file: magic "LARMCKPT", config block, then named float32
/// tensors. Round trips bit-exactly.
void save_params(const ModelParams& params, const fs::path& path);
ModelParams load_params(const fs::path& path);
/// Throws ConfigMismatch if the stored config differs from `expect`.
ModelParams load_params(const fs::path& path, const ModelConfig& expect);

}  // namespace larm
