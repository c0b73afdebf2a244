#pragma once

#include "larm/recon.hpp"

namespace larm {

/// Exact nearest-neighbor index over 3D points.
class KdTree {
 public:
  explicit KdTree(const std::vector<Vec3>& points);
  double nearest_dist(const Vec3& q) const;
  size_t size() const { return points_.size(); }

 private:
  struct Node {
    int left = -1, right = -1;
    int point = -1;
    int axis = 0;
  };
  int build(int lo, int hi, int depth);
  void search(int node, const Vec3& q, double& best) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Area-weighted uniform surface samples; deterministic per seed. n = 0 gives
/// an empty set; throws DegenerateMesh when the mesh has no positive area.
std::vector<Vec3> sample_surface(const PartMesh& mesh, int n, uint64_t seed = 0);

/// 0.5 * (mean_A min-dist-to-B + mean_B min-dist-to-A), non-squared Euclidean.
double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

/// F-score at threshold tau (precision/recall of tau-coverage).
double fscore(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double tau = 0.05);

/// 10*log10(1/MSE) over all channels, capped at 99 dB. Inputs are expected to
/// be composited over a white background already.
double psnr(const Image<float>& a, const Image<float>& b);

/// Mean per-pixel MSE between adjacent frames of an ordered sequence.
double temporal_consistency(const std::vector<Image<float>>& frames);

/// Independently recenters each mesh to its bbox center and scales the bbox
/// longest side to 1. No rotation alignment is performed.
std::pair<PartMesh, PartMesh> align_normalize(const PartMesh& pred, const PartMesh& gt);

struct JointMetrics {
  double axis_angle_err = 0.0;  // arccos(|a_p . a_g|), radians
  double axis_origin_err = 0.0; // line-to-line distance; 0 for prismatic
  double m_r = 0.0;             // relative motion-range error
  double m_d = 0.0;             // angle between signed motion vectors
  bool axis_ok = false;         // <= 0.25 rad
  bool origin_ok = false;       // <= 0.15
  bool mr_ok = false;           // <= 0.3
  bool md_ok = false;           // positive direction agreement, angle <= 0.3
  bool all_ok = false;
};

/// Gauge-invariant joint accuracy (both specs canonicalized first).
/// Throws KindMismatch when the kinds differ.
JointMetrics joint_metrics(const JointSpec& pred, const JointSpec& gt);

// Ground-truth meshes --------------------------------------------------------

/// Triangulated scene with per-vertex colors baked from the textures and the
/// scene lighting; each checker cell becomes a flat-colored quad so renders
/// of this mesh reproduce the scene rasterizer exactly.
PartMesh scene_mesh(const ArticulatedScene& scene, const std::vector<double>& states);

/// Canonical-state (theta = 0) meshes split into (everything else, the
/// movable part of `joint_id`).
std::pair<PartMesh, PartMesh> scene_part_meshes(const ArticulatedScene& scene, int joint_id);

PartMesh merge_meshes(const PartMesh& a, const PartMesh& b);

/// Renders a colored mesh with the shared rasterizer (colors used as-is; the
/// shading is expected to be baked into the vertex colors).
SampleFrame render_mesh(const PartMesh& mesh, const CameraIntrinsics& intr,
                        const CameraPose& pose);

// Full object evaluation -----------------------------------------------------

struct EvalConfig {
  int n_states = 5;
  int n_render_views = 8;
  int n_surface_samples = 10000;
  int render_resolution = 64;
  uint64_t seed = 0;
};

struct StateEval {
  double theta = 0.0;
  double cd = 0.0;
  double fscore = 0.0;
  double psnr = 0.0;
};

struct ObjectReport {
  std::vector<StateEval> states;
  double cd = 0.0;      // means over states
  double fscore = 0.0;
  double psnr = 0.0;
  JointMetrics joint;
};

/// Poses predicted and ground-truth meshes at n_states uniformly spaced
/// states, normalizes, and scores CD / F-score / PSNR per state plus the
/// joint metrics. Deterministic per seed.
ObjectReport evaluate_object(const std::pair<PartMesh, PartMesh>& pred_meshes,
                             const JointFitResult& pred_joint, const ArticulatedScene& gt_scene,
                             int joint_id, const EvalConfig& cfg);

void write_report_json(const ObjectReport& report, const fs::path& path);
/// One CSV row per object plus a trailing mean row.
void write_report_csv(const std::vector<std::pair<std::string, ObjectReport>>& reports,
                      const fs::path& path);

}  // namespace larm
