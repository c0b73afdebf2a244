#pragma once

#include <array>
#include <filesystem>
#include <memory>

#include "larm/joint_estimation.hpp"
#include "larm/synthesizer.hpp"

namespace larm {

enum class PartLabel { Body, Movable };

struct LabeledPointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> colors;
  std::vector<PartLabel> labels;

  size_t size() const { return points.size(); }
};

/// Uniform signed-distance volume with per-voxel fusion weight and color.
/// Unobserved voxels keep weight 0 and take no part in extraction.
struct TsdfVolume {
  int resolution = 128;
  Vec3 origin = Vec3(-0.6, -0.6, -0.6);
  double voxel_size = 1.2 / 128;
  double truncation = 3.0 * 1.2 / 128;
  std::vector<float> sdf;          // normalized to [-1, 1]
  std::vector<float> weight;       // observation weight; 0 = never observed
  std::vector<float> color;        // rgb per voxel, averaged over surface hits
  std::vector<float> color_weight; // surface hits only (carving adds none)

  TsdfVolume() { allocate(); }
  TsdfVolume(int res, const Vec3& lo, const Vec3& hi, double truncation_voxels = 3.0);

  void allocate() {
    size_t n = static_cast<size_t>(resolution) * resolution * resolution;
    sdf.assign(n, 1.0f);
    weight.assign(n, 0.0f);
    color.assign(n * 3, 0.0f);
    color_weight.assign(n, 0.0f);
  }
  size_t index(int x, int y, int z) const {
    return (static_cast<size_t>(z) * resolution + y) * resolution + x;
  }
  Vec3 voxel_center(int x, int y, int z) const {
    return origin + voxel_size * Vec3(x + 0.5, y + 0.5, z + 0.5);
  }
  void validate() const;
};

struct PartMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec3> colors;  // per vertex
  std::string label = "body";

  void validate() const;
};

/// Unprojects all foreground pixels of each view into labeled world points.
/// Requires at least 4 views; throws EmptyCloud when nothing is foreground.
std::pair<LabeledPointCloud, LabeledPointCloud> fuse_views(
    const std::vector<SampleFrame>& frames);

/// Projective TSDF update from one synthesized view. Pixels matching
/// `filter` contribute surface measurements; other pixels only carve definite
/// free space in front of their observed depth. Pixels with part probability
/// within `ambiguity_margin` of 0.5 are dropped entirely.
void tsdf_integrate(TsdfVolume& volume, const Prediction& frame, PartLabel filter,
                    double ambiguity_margin = 0.1);

/// Marching cubes over the zero level set; only cells whose 8 corners were
/// all observed are triangulated, vertices are welded along shared edges and
/// colors interpolated from the fused voxel colors. Throws NoSurface.
PartMesh extract_mesh(const TsdfVolume& volume);

/// Triangulation table and edge topology exposed for consistency checks.
const int (*marching_cubes_tri_table())[16];
const int (*marching_cubes_edge_corners())[2];

struct ReconConfig {
  int n_views = 64;
  int volume_resolution = 128;
  int image_resolution = 64;
  double ambiguity_margin = 0.1;
  uint64_t seed = 0;
};

/// Canonical-state reconstruction: synthesizes `n_views` views at theta = 0
/// from seeded sphere cameras and fuses two volumes (body / movable).
/// Smaller n_views with the same seed uses a prefix of the same camera set.
std::pair<PartMesh, PartMesh> reconstruct(const ViewSynthesizer& synth, const ReconConfig& cfg);

/// Articulates the movable mesh by joint_transform(0 -> theta); the body and
/// all topology/colors are untouched.
std::pair<PartMesh, PartMesh> pose_mesh_at_state(const std::pair<PartMesh, PartMesh>& meshes,
                                                 const JointSpec& joint, double theta);

// Multi-part pipeline --------------------------------------------------------

/// View source for a K-joint object: part `k` posed at theta with every other
/// joint at rest; the part probability channel tracks part k.
class MultiPartSynthesizer {
 public:
  virtual ~MultiPartSynthesizer() = default;
  virtual int num_parts() const = 0;
  virtual Prediction synthesize(int part, const CameraIntrinsics& intr, const CameraPose& pose,
                                double theta) const = 0;
};

class OracleMultiSynthesizer : public MultiPartSynthesizer {
 public:
  explicit OracleMultiSynthesizer(const ArticulatedScene& scene) : scene_(&scene) {}
  int num_parts() const override { return scene_->num_joints(); }
  Prediction synthesize(int part, const CameraIntrinsics& intr, const CameraPose& pose,
                        double theta) const override;

 private:
  const ArticulatedScene* scene_;
};

struct MultiPartResult {
  PartMesh body;
  std::vector<PartMesh> parts;
  std::vector<JointFitResult> joints;
};

/// Runs joint estimation and movable-part reconstruction independently per
/// part, then fuses the body from rest-state views with the pixels of every
/// movable part removed. Errors from a part are rethrown with its index.
MultiPartResult multi_part_reconstruct(const MultiPartSynthesizer& synth,
                                       const std::vector<JointKind>& kinds,
                                       const std::vector<const Matcher*>& matchers,
                                       const ReconConfig& recon_cfg,
                                       const EstimateConfig& estimate_cfg);

// Artifacts ------------------------------------------------------------------

void write_ply(const PartMesh& mesh, const fs::path& path);
PartMesh read_ply(const fs::path& path);

struct ArticulatedPartEntry {
  std::string mesh_path;
  JointSpec joint;
};
void write_articulated_descriptor(const std::string& body_mesh_path,
                                  const std::vector<ArticulatedPartEntry>& parts,
                                  const fs::path& path);

}  // namespace larm
