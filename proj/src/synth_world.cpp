#include "larm/synth_world.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace larm {

const char* to_string(SceneFamily family) {
  switch (family) {
    case SceneFamily::Door: return "door";
    case SceneFamily::Drawer: return "drawer";
    case SceneFamily::Lid: return "lid";
  }
  return "unknown";
}

SceneFamily scene_family_from_string(const std::string& s) {
  if (s == "door") return SceneFamily::Door;
  if (s == "drawer") return SceneFamily::Drawer;
  if (s == "lid") return SceneFamily::Lid;
  throw Error(ErrorCode::InvalidArgument, "unknown scene family '" + s + "'");
}

// ---------------------------------------------------------------------------
// Scene construction
// ---------------------------------------------------------------------------

static BoxTexture random_texture(Rng& rng) {
  BoxTexture tex;
  auto channel = [&](double lo, double hi) { return rng.uniform(lo, hi); };
  tex.color_a = Vec3(channel(0.35, 0.95), channel(0.35, 0.95), channel(0.35, 0.95));
  tex.color_b = Vec3(channel(0.05, 0.5), channel(0.05, 0.5), channel(0.05, 0.5));
  static const int kCells[] = {0, 0, 2, 3, 4, 6, 8};
  tex.cells = kCells[rng.below(sizeof(kCells) / sizeof(kCells[0]))];
  return tex;
}

static void box_corners(const TexturedBox& box, Vec3 out[8]) {
  int i = 0;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1})
        out[i++] = box.center + Vec3(sx * box.half.x(), sy * box.half.y(), sz * box.half.z());
}

void scene_bounds(const ArticulatedScene& scene, Vec3& lo, Vec3& hi, int theta_samples) {
  lo = Vec3::Constant(1e30);
  hi = Vec3::Constant(-1e30);
  auto grow = [&](const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };
  Vec3 corners[8];
  for (const auto& box : scene.body) {
    box_corners(box, corners);
    for (const Vec3& c : corners) grow(c);
  }
  for (const auto& part : scene.parts) {
    box_corners(part.box, corners);
    for (int s = 0; s < theta_samples; ++s) {
      double theta = theta_samples == 1 ? 0.0 : double(s) / (theta_samples - 1);
      RigidTransform T = joint_transform(part.joint, 0.0, theta);
      for (const Vec3& c : corners) grow(T.apply(c));
    }
  }
}

/// Maps x -> scale * (x - center) over all scene geometry, keeping joints
/// consistent with the moved geometry.
static void transform_scene(ArticulatedScene& scene, const Vec3& center, double scale) {
  auto map_box = [&](TexturedBox& box) {
    box.center = scale * (box.center - center);
    box.half *= scale;
  };
  for (auto& box : scene.body) map_box(box);
  for (auto& part : scene.parts) {
    map_box(part.box);
    JointSpec& j = part.joint;
    Vec3 new_pivot = scale * (j.pivot - center);
    double new_scale = j.kind == JointKind::Prismatic ? j.scale * scale : j.scale;
    if (j.kind == JointKind::Revolute)
      j = JointSpec::revolute(j.axis, new_pivot, new_scale);
    else
      j = JointSpec::prismatic(j.axis, new_scale);
  }
}

static void normalize_scene(ArticulatedScene& scene) {
  Vec3 lo, hi;
  scene_bounds(scene, lo, hi, 33);
  Vec3 center = 0.5 * (lo + hi);
  double extent = (hi - lo).maxCoeff();
  transform_scene(scene, center, extent > 0 ? 1.0 / extent : 1.0);
}

ArticulatedScene sample_scene(uint64_t seed, SceneFamily family) {
  Rng rng(seed * 0x9e3779b97f4a7c15ull + static_cast<uint64_t>(family) + 1);
  ArticulatedScene scene;
  scene.light_dir =
      Vec3(rng.uniform(-0.6, 0.6), rng.uniform(-1.0, -0.5), rng.uniform(-0.6, 0.6)).normalized();
  scene.ambient = rng.uniform(0.3, 0.45);

  const double gap = 0.012;
  const Vec3 body_half(rng.uniform(0.25, 0.4), rng.uniform(0.25, 0.45), rng.uniform(0.15, 0.3));
  TexturedBox body{Vec3::Zero(), body_half, random_texture(rng)};
  scene.body.push_back(body);
  if (rng.uniform() < 0.5) {
    // top slab for visual variety
    double t = rng.uniform(0.02, 0.05);
    TexturedBox slab{Vec3(0, body_half.y() + t, 0),
                     Vec3(body_half.x() * rng.uniform(1.0, 1.1), t, body_half.z() * 1.02),
                     random_texture(rng)};
    scene.body.push_back(slab);
  }

  MovablePart part;
  part.box.texture = random_texture(rng);
  switch (family) {
    case SceneFamily::Door: {
      double t = rng.uniform(0.018, 0.035);
      double px = body_half.x() * rng.uniform(0.45, 0.95);
      double py = body_half.y() * rng.uniform(0.8, 0.98);
      double ox = rng.uniform(-(body_half.x() - px), body_half.x() - px);
      double z_center = body_half.z() + gap + t;
      part.box.center = Vec3(ox, 0, z_center);
      part.box.half = Vec3(px, py, t);
      bool left_hinge = rng.uniform() < 0.5;
      double hinge_x = left_hinge ? ox - px : ox + px;
      Vec3 axis = left_hinge ? Vec3(0, -1, 0) : Vec3(0, 1, 0);
      part.joint = JointSpec::revolute(axis, Vec3(hinge_x, 0, z_center),
                                       rng.uniform(M_PI / 6, M_PI / 2));
      break;
    }
    case SceneFamily::Lid: {
      double t = rng.uniform(0.018, 0.035);
      double lx = body_half.x() * rng.uniform(0.8, 0.98);
      double lz = body_half.z() * rng.uniform(0.75, 0.95);
      double y_center = body_half.y() + gap + t;
      part.box.center = Vec3(0, y_center, 0);
      part.box.half = Vec3(lx, t, lz);
      // hinge along the back top edge, opening upward
      part.joint = JointSpec::revolute(Vec3(-1, 0, 0), Vec3(0, y_center, -lz),
                                       rng.uniform(M_PI / 6, M_PI / 2));
      // no extra slab on lid scenes, it would collide with the opening lid
      scene.body.resize(1);
      break;
    }
    case SceneFamily::Drawer: {
      double dz = rng.uniform(0.04, 0.1);
      double dx = body_half.x() * rng.uniform(0.5, 0.9);
      double dy = body_half.y() * rng.uniform(0.2, 0.45);
      double oy = rng.uniform(-(body_half.y() - dy), body_half.y() - dy);
      part.box.center = Vec3(0, oy, body_half.z() + gap + dz);
      part.box.half = Vec3(dx, dy, dz);
      // choose the physical travel so that the normalized scale lands in a
      // safe interior of [0.1, 0.4]
      double s_norm = rng.uniform(0.12, 0.35);
      double base_z = 2 * body_half.z() + 2 * dz + gap;
      double other = std::max(2 * body_half.x(), 2 * body_half.y());
      double travel = s_norm * other;
      if (base_z + travel > other) travel = s_norm * base_z / (1.0 - s_norm);
      part.joint = JointSpec::prismatic(Vec3(0, 0, 1), travel);
      break;
    }
  }
  scene.parts.push_back(part);
  normalize_scene(scene);
  return scene;
}

ArticulatedScene sample_multi_scene(uint64_t seed, int n_parts) {
  if (n_parts < 1) throw Error(ErrorCode::InvalidArgument, "need at least one part");
  Rng rng(seed * 0xa0761d6478bd642full + n_parts);
  ArticulatedScene scene;
  scene.light_dir =
      Vec3(rng.uniform(-0.6, 0.6), rng.uniform(-1.0, -0.5), rng.uniform(-0.6, 0.6)).normalized();
  scene.ambient = rng.uniform(0.3, 0.45);

  const double gap = 0.012;
  int n_drawers = std::min(n_parts, 2 + (n_parts > 3 ? n_parts - 3 : 0));
  bool with_door = n_parts >= 3;
  if (!with_door) n_drawers = n_parts;

  const Vec3 body_half(rng.uniform(0.3, 0.4), rng.uniform(0.38, 0.48), rng.uniform(0.18, 0.28));
  scene.body.push_back({Vec3::Zero(), body_half, random_texture(rng)});

  // stack drawers along y on the front face
  double slot_h = 2 * body_half.y() / (n_drawers + (with_door ? 1 : 0));
  for (int i = 0; i < n_drawers; ++i) {
    MovablePart part;
    part.box.texture = random_texture(rng);
    double dz = rng.uniform(0.04, 0.08);
    double dy = slot_h * rng.uniform(0.3, 0.42);
    double oy = body_half.y() - (i + 0.5) * slot_h;
    part.box.center = Vec3(0, oy, body_half.z() + gap + dz);
    part.box.half = Vec3(body_half.x() * rng.uniform(0.6, 0.85), dy, dz);
    part.joint = JointSpec::prismatic(Vec3(0, 0, 1), rng.uniform(0.15, 0.3));
    scene.parts.push_back(part);
  }
  if (with_door) {
    MovablePart part;
    part.box.texture = random_texture(rng);
    double t = rng.uniform(0.018, 0.03);
    double py = slot_h * 0.42;
    double oy = body_half.y() - (n_drawers + 0.5) * slot_h;
    double px = body_half.x() * rng.uniform(0.5, 0.8);
    double zc = body_half.z() + gap + t;
    part.box.center = Vec3(0, oy, zc);
    part.box.half = Vec3(px, py, t);
    part.joint =
        JointSpec::revolute(Vec3(0, -1, 0), Vec3(-px, 0, zc), rng.uniform(M_PI / 6, M_PI / 2));
    scene.parts.push_back(part);
  }
  normalize_scene(scene);
  return scene;
}

ArticulatedScene augment_scene(const ArticulatedScene& scene, uint64_t seed, bool rescale,
                               bool retexture) {
  Rng rng(seed * 0xe7037ed1a0b428dbull + 17);
  ArticulatedScene out = scene;
  if (rescale) {
    Vec3 s(rng.uniform(0.75, 1.3), rng.uniform(0.75, 1.3), rng.uniform(0.75, 1.3));
    auto map_box = [&](TexturedBox& box) {
      box.center = box.center.cwiseProduct(s);
      box.half = box.half.cwiseProduct(s);
    };
    for (auto& box : out.body) map_box(box);
    for (auto& part : out.parts) {
      map_box(part.box);
      JointSpec& j = part.joint;
      // joint axes are coordinate-aligned by construction, so a per-axis
      // scale maps the axis onto itself
      Vec3 axis = j.axis.cwiseProduct(s).normalized();
      Vec3 pivot = j.pivot.cwiseProduct(s);
      if (j.kind == JointKind::Revolute) {
        j = JointSpec::revolute(axis, pivot, j.scale);
      } else {
        double k = j.axis.cwiseAbs().dot(s);  // scale along the travel axis
        j = JointSpec::prismatic(axis, j.scale * k);
      }
    }
    normalize_scene(out);
  }
  if (retexture) {
    Rng trng = rng.fork(1);
    for (auto& box : out.body) box.texture = random_texture(trng);
    for (auto& part : out.parts) part.box.texture = random_texture(trng);
  }
  return out;
}

CameraPose sample_camera(Rng& rng, double radius) {
  double sin_lo = std::sin(-30.0 * M_PI / 180.0);
  double sin_hi = std::sin(60.0 * M_PI / 180.0);
  double se = rng.uniform(sin_lo, sin_hi);
  double ce = std::sqrt(std::max(0.0, 1.0 - se * se));
  double az = rng.uniform(0.0, 2 * M_PI);
  Vec3 eye(radius * ce * std::cos(az), radius * se, radius * ce * std::sin(az));
  return CameraPose::look_at(eye, Vec3::Zero());
}

CameraIntrinsics default_intrinsics(int resolution) {
  CameraIntrinsics intr;
  intr.width = intr.height = resolution;
  intr.fx = intr.fy = resolution;  // half fov ~26.6 deg, keeps the unit cube in frame
  intr.cx = intr.cy = resolution / 2.0;
  return intr;
}

// ---------------------------------------------------------------------------
// Rasterizer
// ---------------------------------------------------------------------------

namespace {

struct RasterTri {
  Vec3 v[3];
  Vec2 uv[3];
  Vec3 color[3];  // used when tex == nullptr
  Vec3 normal;
  const BoxTexture* tex = nullptr;
  int part = -1;  // -1: body
};

// 12 triangles per box, with face-local uv in [0,1]^2 for texturing
void append_box(std::vector<RasterTri>& out, const TexturedBox& box, const RigidTransform& T,
                int part) {
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign : {-1, 1}) {
      int a = (axis + 1) % 3, b = (axis + 2) % 3;
      Vec3 n = Vec3::Zero();
      n[axis] = sign;
      Vec3 center = box.center + n.cwiseProduct(box.half);
      Vec3 ea = Vec3::Zero(), eb = Vec3::Zero();
      ea[a] = box.half[a];
      eb[b] = box.half[b];
      Vec3 corners[4] = {center - ea - eb, center + ea - eb, center + ea + eb, center - ea + eb};
      Vec2 uvs[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
      int idx[2][3] = {{0, 1, 2}, {0, 2, 3}};
      for (auto& tri_idx : idx) {
        RasterTri tri;
        for (int k = 0; k < 3; ++k) {
          tri.v[k] = T.apply(corners[tri_idx[k]]);
          tri.uv[k] = uvs[tri_idx[k]];
        }
        tri.normal = T.R * n;
        tri.tex = &box.texture;
        tri.part = part;
        out.push_back(tri);
      }
    }
  }
}

Vec3 sample_texture(const BoxTexture& tex, const Vec2& uv) {
  if (tex.cells <= 0) return tex.color_a;
  int cu = std::min(tex.cells - 1, std::max(0, static_cast<int>(uv.x() * tex.cells)));
  int cv = std::min(tex.cells - 1, std::max(0, static_cast<int>(uv.y() * tex.cells)));
  return ((cu + cv) & 1) ? tex.color_b : tex.color_a;
}

SampleFrame raster_core(const std::vector<RasterTri>& tris, const CameraIntrinsics& intr,
                        const CameraPose& pose, const Vec3& light_dir, double ambient,
                        bool shaded, int target_part) {
  intr.validate();
  pose.validate();
  SampleFrame frame;
  frame.rgb = Image<float>(intr.width, intr.height, 3, 1.0f);  // white background
  frame.depth = Image<float>(intr.width, intr.height, 1, 0.0f);
  frame.fg_mask = Image<uint8_t>(intr.width, intr.height, 1, 0);
  frame.part_mask = Image<uint8_t>(intr.width, intr.height, 1, 0);
  frame.intr = intr;
  frame.pose = pose;

  std::vector<double> zbuf(static_cast<size_t>(intr.width) * intr.height, 1e30);

  for (const RasterTri& tri : tris) {
    Vec3 cam[3];
    Vec2 scr[3];
    bool skip = false;
    for (int k = 0; k < 3; ++k) {
      cam[k] = pose.to_camera(tri.v[k]);
      if (cam[k].z() < kDepthNear) {
        skip = true;  // cameras stay outside the scene; no near-plane clipping
        break;
      }
      scr[k] = Vec2(intr.fx * cam[k].x() / cam[k].z() + intr.cx,
                    intr.fy * cam[k].y() / cam[k].z() + intr.cy);
    }
    if (skip) continue;

    double area = (scr[1].x() - scr[0].x()) * (scr[2].y() - scr[0].y()) -
                  (scr[1].y() - scr[0].y()) * (scr[2].x() - scr[0].x());
    if (area == 0) continue;
    double inv_area = 1.0 / area;

    double min_x = std::min({scr[0].x(), scr[1].x(), scr[2].x()});
    double max_x = std::max({scr[0].x(), scr[1].x(), scr[2].x()});
    double min_y = std::min({scr[0].y(), scr[1].y(), scr[2].y()});
    double max_y = std::max({scr[0].y(), scr[1].y(), scr[2].y()});
    int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
    int x1 = std::min(intr.width - 1, static_cast<int>(std::ceil(max_x - 0.5)));
    int y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    int y1 = std::min(intr.height - 1, static_cast<int>(std::ceil(max_y - 0.5)));

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        Vec2 p(x + 0.5, y + 0.5);
        auto edge = [&](const Vec2& a, const Vec2& b) {
          return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
        };
        double w0 = edge(scr[1], scr[2]) * inv_area;
        double w1 = edge(scr[2], scr[0]) * inv_area;
        double w2 = edge(scr[0], scr[1]) * inv_area;
        if (w0 < 0 || w1 < 0 || w2 < 0) continue;

        // perspective-correct interpolation over 1/z
        double inv_z = w0 / cam[0].z() + w1 / cam[1].z() + w2 / cam[2].z();
        double z = 1.0 / inv_z;
        size_t pix = static_cast<size_t>(y) * intr.width + x;
        if (z >= zbuf[pix]) continue;
        zbuf[pix] = z;

        Vec3 color;
        if (tri.tex) {
          Vec2 uv = z * (w0 / cam[0].z() * tri.uv[0] + w1 / cam[1].z() * tri.uv[1] +
                         w2 / cam[2].z() * tri.uv[2]);
          color = sample_texture(*tri.tex, uv);
        } else {
          color = z * (w0 / cam[0].z() * tri.color[0] + w1 / cam[1].z() * tri.color[1] +
                       w2 / cam[2].z() * tri.color[2]);
        }
        if (shaded) {
          Vec3 point = unproject_pixel(p.x(), p.y(), z, intr, pose);
          Vec3 n = tri.normal;
          if (n.dot(pose.translation - point) < 0) n = -n;
          double diffuse = std::max(0.0, n.dot(-light_dir));
          color *= ambient + (1.0 - ambient) * diffuse;
        }
        for (int c = 0; c < 3; ++c)
          frame.rgb.at(x, y, c) = static_cast<float>(std::clamp(color[c], 0.0, 1.0));
        frame.depth.at(x, y) = static_cast<float>(z);
        frame.fg_mask.at(x, y) = 1;
        frame.part_mask.at(x, y) = (tri.part == target_part) ? 1 : 0;
      }
    }
  }
  return frame;
}

std::vector<RasterTri> scene_triangles(const ArticulatedScene& scene,
                                       const std::vector<double>& states) {
  if (states.size() != scene.parts.size())
    throw Error(ErrorCode::ShapeMismatch, "one state per joint required");
  std::vector<RasterTri> tris;
  tris.reserve((scene.body.size() + scene.parts.size()) * 12);
  for (const auto& box : scene.body) append_box(tris, box, RigidTransform::identity(), -1);
  for (size_t j = 0; j < scene.parts.size(); ++j) {
    RigidTransform T = joint_transform(scene.parts[j].joint, 0.0, states[j]);
    append_box(tris, scene.parts[j].box, T, static_cast<int>(j));
  }
  return tris;
}

}  // namespace

Vec3 box_texture_color(const BoxTexture& tex, const Vec2& uv) { return sample_texture(tex, uv); }

SampleFrame rasterize_states(const ArticulatedScene& scene, const CameraIntrinsics& intr,
                             const CameraPose& pose, const std::vector<double>& states,
                             int joint_id) {
  SampleFrame frame = raster_core(scene_triangles(scene, states), intr, pose, scene.light_dir,
                                  scene.ambient, true, joint_id);
  frame.theta = joint_id >= 0 && joint_id < static_cast<int>(states.size()) ? states[joint_id] : 0;
  frame.joint_id = joint_id;
  return frame;
}

SampleFrame rasterize(const ArticulatedScene& scene, const CameraIntrinsics& intr,
                      const CameraPose& pose, double theta, int joint_id) {
  if (joint_id < 0 || joint_id >= scene.num_joints())
    throw Error(ErrorCode::InvalidArgument, "joint_id out of range");
  std::vector<double> states(scene.parts.size(), 0.0);
  states[joint_id] = theta;
  return rasterize_states(scene, intr, pose, states, joint_id);
}

SampleFrame rasterize_shaded(const std::vector<ShadedTriangle>& tris,
                             const CameraIntrinsics& intr, const CameraPose& pose) {
  std::vector<RasterTri> rtris;
  rtris.reserve(tris.size());
  for (const auto& t : tris) {
    RasterTri rt;
    for (int k = 0; k < 3; ++k) {
      rt.v[k] = t.v[k];
      rt.color[k] = t.color[k];
    }
    rt.normal = (t.v[1] - t.v[0]).cross(t.v[2] - t.v[0]).normalized();
    rt.tex = nullptr;
    rt.part = -1;
    rtris.push_back(rt);
  }
  return raster_core(rtris, intr, pose, Vec3(0, -1, 0), 1.0, false, -1);
}

// ---------------------------------------------------------------------------
// Analytic oracle and overlap checks
// ---------------------------------------------------------------------------

static std::optional<double> ray_box(const Vec3& o, const Vec3& d, const TexturedBox& box) {
  double t_lo = -1e30, t_hi = 1e30;
  for (int a = 0; a < 3; ++a) {
    double lo = box.center[a] - box.half[a], hi = box.center[a] + box.half[a];
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < lo || o[a] > hi) return std::nullopt;
      continue;
    }
    double t1 = (lo - o[a]) / d[a], t2 = (hi - o[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    t_lo = std::max(t_lo, t1);
    t_hi = std::min(t_hi, t2);
    if (t_lo > t_hi) return std::nullopt;
  }
  if (t_hi < 0) return std::nullopt;
  return t_lo >= 0 ? t_lo : t_hi;
}

std::optional<double> ray_scene_depth(const ArticulatedScene& scene,
                                      const CameraIntrinsics& intr, const CameraPose& pose,
                                      double u, double v, const std::vector<double>& states) {
  // direction with unit camera-frame z, so the ray parameter equals depth
  Vec3 dir_cam((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
  Vec3 o = pose.translation;
  Vec3 d = pose.rotation * dir_cam;

  std::optional<double> best;
  auto consider = [&](std::optional<double> t) {
    if (t && (!best || *t < *best)) best = t;
  };
  for (const auto& box : scene.body) consider(ray_box(o, d, box));
  for (size_t j = 0; j < scene.parts.size(); ++j) {
    RigidTransform inv = joint_transform(scene.parts[j].joint, 0.0, states[j]).inverse();
    consider(ray_box(inv.apply(o), inv.R * d, scene.parts[j].box));
  }
  return best;
}

/// Separating-axis test between an oriented box (R, center, half) and an AABB.
static bool obb_aabb_overlap(const Mat3& R, const Vec3& center, const Vec3& half_obb,
                             const TexturedBox& aabb, double margin) {
  Vec3 d = center - aabb.center;
  Vec3 ha = aabb.half.array() - margin;
  Vec3 hb = half_obb.array() - margin;
  Mat3 absR = R.cwiseAbs().array() + 1e-12;
  // AABB face axes
  for (int i = 0; i < 3; ++i)
    if (std::abs(d[i]) > ha[i] + absR.row(i).dot(hb)) return false;
  // OBB face axes
  for (int j = 0; j < 3; ++j)
    if (std::abs(R.col(j).dot(d)) > hb[j] + absR.col(j).dot(ha)) return false;
  // cross products
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Vec3 axis = Vec3::Unit(i).cross(R.col(j));
      double len = axis.norm();
      if (len < 1e-12) continue;
      axis /= len;
      double ra = ha.dot(axis.cwiseAbs());
      double rb = hb.dot((R.transpose() * axis).cwiseAbs());
      if (std::abs(d.dot(axis)) > ra + rb) return false;
    }
  return true;
}

bool parts_intersect_body(const ArticulatedScene& scene, double theta, double margin) {
  for (const auto& part : scene.parts) {
    RigidTransform T = joint_transform(part.joint, 0.0, theta);
    Vec3 center = T.apply(part.box.center);
    for (const auto& body : scene.body)
      if (obb_aabb_overlap(T.R, center, part.box.half, body, margin)) return true;
  }
  return false;
}

Prediction Prediction::from_frame(const SampleFrame& f) {
  Prediction p;
  p.rgb = f.rgb;
  p.depth = f.depth;
  p.fg_prob = Image<float>(f.depth.width, f.depth.height, 1);
  p.part_prob = Image<float>(f.depth.width, f.depth.height, 1);
  for (size_t i = 0; i < p.fg_prob.data.size(); ++i) {
    p.fg_prob.data[i] = f.fg_mask.data[i] ? 1.0f : 0.0f;
    p.part_prob.data[i] = f.part_mask.data[i] ? 1.0f : 0.0f;
    if (!f.fg_mask.data[i]) p.depth.data[i] = static_cast<float>(kDepthFar);
  }
  p.intr = f.intr;
  p.pose = f.pose;
  p.theta = f.theta;
  return p;
}

SampleFrame Prediction::to_frame(int joint_id, float threshold) const {
  SampleFrame f;
  f.rgb = rgb;
  f.depth = depth;
  f.fg_mask = fg_mask(threshold);
  f.part_mask = part_mask(threshold);
  for (size_t i = 0; i < f.depth.data.size(); ++i)
    if (!f.fg_mask.data[i]) f.depth.data[i] = 0.0f;
  f.intr = intr;
  f.pose = pose;
  f.theta = theta;
  f.joint_id = joint_id;
  return f;
}

}  // namespace larm
