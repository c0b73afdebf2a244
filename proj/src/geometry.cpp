#include "larm/geometry.hpp"

#include <Eigen/Geometry>

namespace larm {

void CameraIntrinsics::validate() const {
  if (!(fx > 0 && fy > 0))
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  if (!(cx > 0 && cx < width && cy > 0 && cy < height))
    throw Error(ErrorCode::InvalidArgument, "principal point outside image");
}

void CameraPose::validate() const {
  Mat3 should_be_identity = rotation.transpose() * rotation;
  if ((should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "rotation is not orthonormal");
  if (std::abs(rotation.determinant() - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "rotation determinant is not +1");
}

CameraPose look_at_impl(const Vec3& eye, const Vec3& target, const Vec3& up) {
  Vec3 z = (target - eye).normalized();
  Vec3 x = up.cross(z);
  if (x.norm() < 1e-12) {
    // view direction parallel to up; pick an arbitrary orthogonal frame
    x = Vec3(1, 0, 0).cross(z);
    if (x.norm() < 1e-12) x = Vec3(0, 1, 0).cross(z);
  }
  x.normalize();
  Vec3 y = z.cross(x);
  CameraPose pose;
  pose.rotation.col(0) = x;
  pose.rotation.col(1) = y;
  pose.rotation.col(2) = z;
  pose.translation = eye;
  return pose;
}

CameraPose CameraPose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  return look_at_impl(eye, target, up);
}

const char* to_string(JointKind kind) {
  return kind == JointKind::Revolute ? "revolute" : "prismatic";
}

JointKind joint_kind_from_string(const std::string& s) {
  if (s == "revolute") return JointKind::Revolute;
  if (s == "prismatic") return JointKind::Prismatic;
  throw Error(ErrorCode::InvalidArgument, "unknown joint kind '" + s + "'");
}

static Vec3 canonical_pivot(const Vec3& axis, const Vec3& pivot) {
  return pivot - axis.dot(pivot) * axis;
}

JointSpec JointSpec::revolute(const Vec3& axis, const Vec3& pivot, double scale) {
  JointSpec s;
  s.kind = JointKind::Revolute;
  s.axis = axis.normalized();
  s.pivot = canonical_pivot(s.axis, pivot);
  s.scale = scale;
  s.validate();
  return s;
}

JointSpec JointSpec::prismatic(const Vec3& axis, double scale) {
  JointSpec s;
  s.kind = JointKind::Prismatic;
  s.axis = axis.normalized();
  s.pivot = Vec3::Zero();
  s.scale = scale;
  s.validate();
  return s;
}

JointSpec JointSpec::canonical() const {
  JointSpec s = *this;
  if (s.scale < 0) {
    s.scale = -s.scale;
    s.axis = -s.axis;
  }
  s.pivot = canonical_pivot(s.axis, s.pivot);
  return s;
}

void JointSpec::validate() const {
  if (std::abs(axis.norm() - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "joint axis is not unit length");
  if (!std::isfinite(scale))
    throw Error(ErrorCode::InvalidArgument, "joint scale is not finite");
  if (kind == JointKind::Revolute && std::abs(axis.dot(pivot)) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "revolute pivot is not canonicalized");
}

PluckerMap compute_plucker_map(const CameraIntrinsics& intr, const CameraPose& pose) {
  intr.validate();
  pose.validate();
  PluckerMap map(intr.width, intr.height);
  const Vec3 origin = pose.translation;
  for (int y = 0; y < intr.height; ++y) {
    for (int x = 0; x < intr.width; ++x) {
      Vec3 dir_cam((x + 0.5 - intr.cx) / intr.fx, (y + 0.5 - intr.cy) / intr.fy, 1.0);
      Vec3 d = (pose.rotation * dir_cam).normalized();
      Vec3 m = origin.cross(d);
      double* px = map.pixel(x, y);
      px[0] = d.x(); px[1] = d.y(); px[2] = d.z();
      px[3] = m.x(); px[4] = m.y(); px[5] = m.z();
    }
  }
  return map;
}

Vec3 unproject_pixel(double u, double v, double depth, const CameraIntrinsics& intr,
                     const CameraPose& pose) {
  Vec3 p_cam((u - intr.cx) / intr.fx * depth, (v - intr.cy) / intr.fy * depth, depth);
  return pose.to_world(p_cam);
}

std::vector<Vec3> unproject_depth(const Image<float>& depth, const Image<uint8_t>& fg_mask,
                                  const CameraIntrinsics& intr, const CameraPose& pose,
                                  double near) {
  if (depth.width != fg_mask.width || depth.height != fg_mask.height)
    throw Error(ErrorCode::ShapeMismatch, "depth/mask size mismatch");
  std::vector<Vec3> points;
  points.reserve(depth.data.size() / 4);
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      if (!fg_mask.at(x, y)) continue;
      double z = depth.at(x, y);
      if (z <= near)
        throw Error(ErrorCode::NonPositiveDepth, "foreground depth at or below near plane");
      points.push_back(unproject_pixel(x + 0.5, y + 0.5, z, intr, pose));
    }
  }
  return points;
}

PixelProjection project_point(const Vec3& x, const CameraIntrinsics& intr,
                              const CameraPose& pose) {
  Vec3 p_cam = pose.to_camera(x);
  if (p_cam.z() <= 0)
    throw Error(ErrorCode::BehindCamera, "point has non-positive camera depth");
  PixelProjection proj;
  proj.u = intr.fx * p_cam.x() / p_cam.z() + intr.cx;
  proj.v = intr.fy * p_cam.y() / p_cam.z() + intr.cy;
  proj.depth = p_cam.z();
  proj.in_bounds = proj.u >= 0 && proj.u < intr.width && proj.v >= 0 && proj.v < intr.height;
  return proj;
}

RigidTransform joint_transform(const JointSpec& spec, double theta_u, double theta_v) {
  // intermediate optimizer states carry non-canonical pivots; the transform is
  // well defined for any point on the axis, so only the essentials are checked
  if (std::abs(spec.axis.norm() - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "joint axis is not unit length");
  if (!std::isfinite(spec.scale))
    throw Error(ErrorCode::InvalidArgument, "joint scale is not finite");
  const double delta = spec.scale * (theta_v - theta_u);
  RigidTransform T;
  if (spec.kind == JointKind::Revolute) {
    T.R = Eigen::AngleAxisd(delta, spec.axis).toRotationMatrix();
    T.t = spec.pivot - T.R * spec.pivot;
  } else {
    T.t = spec.axis * delta;
  }
  return T;
}

}  // namespace larm
