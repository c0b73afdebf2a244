#pragma once

#include <Eigen/Dense>
#include <vector>

#include "larm/core.hpp"

namespace larm {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Depth parameterization shared by the renderer, the network depth head and
// the TSDF fusion. All geometry lives in a normalized world where the scene
// fits in [-0.5, 0.5]^3 and cameras sit on a sphere of radius 2.
constexpr double kDepthNear = 0.1;
constexpr double kDepthFar = 4.0;
constexpr double kCameraRadius = 2.0;

struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const;
};

/// Camera-to-world rigid pose. `translation` is the camera center in world
/// coordinates.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  void validate() const;

  Vec3 to_world(const Vec3& p_cam) const { return rotation * p_cam + translation; }
  Vec3 to_camera(const Vec3& p_world) const {
    return rotation.transpose() * (p_world - translation);
  }
  Vec3 forward() const { return rotation.col(2); }

  /// Camera at `eye` looking at `target`; +z points toward the target.
  static CameraPose look_at(const Vec3& eye, const Vec3& target,
                            const Vec3& up = Vec3(0, 1, 0));
};

/// Per-pixel ray encoding: unit direction d and moment m = o x d, H x W x 6.
struct PluckerMap {
  int width = 0, height = 0;
  std::vector<double> data;  // row-major, 6 per pixel: dx dy dz mx my mz

  PluckerMap() = default;
  PluckerMap(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 6, 0.0) {}

  double* pixel(int x, int y) { return &data[(static_cast<size_t>(y) * width + x) * 6]; }
  const double* pixel(int x, int y) const {
    return &data[(static_cast<size_t>(y) * width + x) * 6];
  }
  Vec3 direction(int x, int y) const { return Vec3(pixel(x, y)[0], pixel(x, y)[1], pixel(x, y)[2]); }
  Vec3 moment(int x, int y) const { return Vec3(pixel(x, y)[3], pixel(x, y)[4], pixel(x, y)[5]); }
};

enum class JointKind { Revolute, Prismatic };

const char* to_string(JointKind kind);
JointKind joint_kind_from_string(const std::string& s);

/// One-dof joint. `scale` maps a unit of normalized state to radians
/// (revolute) or world units (prismatic). The revolute pivot is canonicalized
/// to the point on the axis line closest to the world origin, which makes the
/// representation unique and equality testable.
struct JointSpec {
  JointKind kind = JointKind::Revolute;
  Vec3 axis = Vec3(0, 0, 1);
  Vec3 pivot = Vec3::Zero();
  double scale = 0.0;

  static JointSpec revolute(const Vec3& axis, const Vec3& pivot, double scale);
  static JointSpec prismatic(const Vec3& axis, double scale);

  /// Gauge-fix: flips (axis, scale) so that scale >= 0 and re-canonicalizes
  /// the pivot.
  JointSpec canonical() const;
  void validate() const;
};

struct JointState {
  double theta = 0.0;
};

struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return R * p + t; }
  RigidTransform inverse() const { return {R.transpose(), -(R.transpose() * t)}; }
  /// this ∘ other: applies `other` first.
  RigidTransform compose(const RigidTransform& other) const {
    return {R * other.R, R * other.t + t};
  }
  static RigidTransform identity() { return {}; }
};

/// Ray through the center of each pixel, i.e. through (u+0.5, v+0.5).
PluckerMap compute_plucker_map(const CameraIntrinsics& intr, const CameraPose& pose);

/// World-space point for pixel (x, y) at camera-frame depth z (z along the
/// optical axis, not the ray).
Vec3 unproject_pixel(double u, double v, double depth, const CameraIntrinsics& intr,
                     const CameraPose& pose);

/// Unprojects every foreground pixel (mask nonzero) of a depth map.
/// Throws NonPositiveDepth if a foreground pixel has depth <= near.
std::vector<Vec3> unproject_depth(const Image<float>& depth, const Image<uint8_t>& fg_mask,
                                  const CameraIntrinsics& intr, const CameraPose& pose,
                                  double near = kDepthNear);

struct PixelProjection {
  double u = 0, v = 0;      // continuous pixel coordinates (pixel center = index + 0.5)
  double depth = 0;         // camera-frame z
  bool in_bounds = false;
};

/// Throws BehindCamera when the point has non-positive camera depth.
PixelProjection project_point(const Vec3& x, const CameraIntrinsics& intr,
                              const CameraPose& pose);

/// Rigid motion carrying the movable part from state theta_u to theta_v:
/// rotation by scale*(theta_v - theta_u) about the joint axis, or translation
/// by axis*scale*(theta_v - theta_u).
RigidTransform joint_transform(const JointSpec& spec, double theta_u, double theta_v);

}  // namespace larm
