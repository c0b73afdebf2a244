#pragma once

#include <optional>
#include <vector>

#include "larm/frame.hpp"
#include "larm/geometry.hpp"

namespace larm {

/// Checkerboard face texture; cells == 0 means a solid color.
struct BoxTexture {
  Vec3 color_a = Vec3(0.8, 0.8, 0.8);
  Vec3 color_b = Vec3(0.3, 0.3, 0.3);
  int cells = 0;
};

/// Checker lookup at face-local uv in [0,1]^2.
Vec3 box_texture_color(const BoxTexture& tex, const Vec2& uv);

/// Axis-aligned box in rest placement.
struct TexturedBox {
  Vec3 center = Vec3::Zero();
  Vec3 half = Vec3(0.5, 0.5, 0.5);
  BoxTexture texture;
};

struct MovablePart {
  TexturedBox box;
  JointSpec joint;
};

enum class SceneFamily { Door, Drawer, Lid };

const char* to_string(SceneFamily family);
SceneFamily scene_family_from_string(const std::string& s);

/// Procedural articulated scene: a rigid body made of boxes plus movable
/// parts, each driven by one joint. Normalized so the union bounding box of
/// all parts across states fits in [-0.5, 0.5]^3.
struct ArticulatedScene {
  std::vector<TexturedBox> body;
  std::vector<MovablePart> parts;
  Vec3 light_dir = Vec3(-0.4, -0.8, -0.45).normalized();  // fixed per scene
  double ambient = 0.35;

  int num_joints() const { return static_cast<int>(parts.size()); }
};

/// Deterministic single-joint scene. Revolute families draw
/// scale in [pi/6, pi/2]; prismatic scale lands in [0.1, 0.4] normalized units.
ArticulatedScene sample_scene(uint64_t seed, SceneFamily family);

/// Multi-joint cabinet with `n_parts` prismatic drawers (and a revolute door
/// when n_parts >= 3), for the multi-part pipeline.
ArticulatedScene sample_multi_scene(uint64_t seed, int n_parts);

/// Finetuning augmentation: per-axis scale in [0.75, 1.3] plus texture
/// reseed, then renormalization. Depth/masks of the same variant seed are a
/// pure function of geometry, so a texture-only reseed leaves them intact.
ArticulatedScene augment_scene(const ArticulatedScene& scene, uint64_t seed,
                               bool rescale = true, bool retexture = true);

/// Uniform camera on the sphere of radius `radius` looking at the origin,
/// elevation restricted to [-30°, 60°].
CameraPose sample_camera(Rng& rng, double radius = kCameraRadius);
CameraIntrinsics default_intrinsics(int resolution);

/// Z-buffer rasterization of the scene with the target joint posed at theta
/// and all other joints at rest. Background rgb is white, depth sentinel 0.
SampleFrame rasterize(const ArticulatedScene& scene, const CameraIntrinsics& intr,
                      const CameraPose& pose, double theta, int joint_id);

/// As above with an explicit state per joint; part_mask still tracks
/// `joint_id` only.
SampleFrame rasterize_states(const ArticulatedScene& scene, const CameraIntrinsics& intr,
                             const CameraPose& pose, const std::vector<double>& states,
                             int joint_id);

/// Generic triangle rasterizer used for rendering reconstructed meshes:
/// per-vertex colors, optional flat shading, white background.
struct ShadedTriangle {
  Vec3 v[3];
  Vec3 color[3];
};
SampleFrame rasterize_shaded(const std::vector<ShadedTriangle>& tris,
                             const CameraIntrinsics& intr, const CameraPose& pose);

/// Test oracle companion: exact ray/scene intersection returning camera-frame
/// depth for pixel (x, y), or nullopt when the ray misses.
std::optional<double> ray_scene_depth(const ArticulatedScene& scene,
                                      const CameraIntrinsics& intr, const CameraPose& pose,
                                      double u, double v, const std::vector<double>& states);

/// Axis-aligned bounds of the scene swept over theta in [0, 1] (sampled).
void scene_bounds(const ArticulatedScene& scene, Vec3& lo, Vec3& hi, int theta_samples = 17);

/// Oriented-box overlap check used by the non-intersection invariant.
bool parts_intersect_body(const ArticulatedScene& scene, double theta, double margin = 0.0);

}  // namespace larm
