#include "larm/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

namespace larm {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// KdTree
// ---------------------------------------------------------------------------

KdTree::KdTree(const std::vector<Vec3>& points) : points_(points) {
  if (points_.empty()) throw Error(ErrorCode::EmptySet, "kd-tree over empty point set");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(0, static_cast<int>(points_.size()), 0);
}

int KdTree::build(int lo, int hi, int depth) {
  if (lo >= hi) return -1;
  int axis = depth % 3;
  int mid = (lo + hi) / 2;
  std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{});
  nodes_[id].point = order_[mid];
  nodes_[id].axis = axis;
  int left = build(lo, mid, depth + 1);
  int right = build(mid + 1, hi, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::search(int node, const Vec3& q, double& best) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  best = std::min(best, (points_[n.point] - q).norm());
  double delta = q[n.axis] - points_[n.point][n.axis];
  int near = delta < 0 ? n.left : n.right;
  int far = delta < 0 ? n.right : n.left;
  search(near, q, best);
  if (std::abs(delta) < best) search(far, q, best);
}

double KdTree::nearest_dist(const Vec3& q) const {
  double best = std::numeric_limits<double>::infinity();
  search(root_, q, best);
  return best;
}

// ---------------------------------------------------------------------------
// Point metrics
// ---------------------------------------------------------------------------

std::vector<Vec3> sample_surface(const PartMesh& mesh, int n, uint64_t seed) {
  mesh.validate();
  if (n == 0) return {};
  std::vector<double> cum;
  double total = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    total += 0.5 * (b - a).cross(c - a).norm();
    cum.push_back(total);
  }
  if (mesh.triangles.empty() || total <= 0.0)
    throw Error(ErrorCode::DegenerateMesh, "mesh has no positive surface area");

  Rng rng(seed ^ 0x94d049bb133111ebull);
  std::vector<Vec3> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    double r = rng.uniform() * total;
    size_t ti = std::lower_bound(cum.begin(), cum.end(), r) - cum.begin();
    if (ti >= mesh.triangles.size()) ti = mesh.triangles.size() - 1;
    const auto& t = mesh.triangles[ti];
    double u = std::sqrt(rng.uniform());
    double v = rng.uniform();
    out.push_back((1.0 - u) * mesh.vertices[t[0]] + u * (1.0 - v) * mesh.vertices[t[1]] +
                  u * v * mesh.vertices[t[2]]);
  }
  return out;
}

double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySet, "chamfer over empty set");
  KdTree tree_a(a), tree_b(b);
  double da = 0.0, db = 0.0;
  for (const auto& p : a) da += tree_b.nearest_dist(p);
  for (const auto& p : b) db += tree_a.nearest_dist(p);
  return 0.5 * (da / a.size() + db / b.size());
}

double fscore(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double tau) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySet, "fscore over empty set");
  KdTree tree_a(a), tree_b(b);
  double precision = 0.0, recall = 0.0;
  for (const auto& p : a) precision += tree_b.nearest_dist(p) <= tau;
  for (const auto& p : b) recall += tree_a.nearest_dist(p) <= tau;
  precision /= a.size();
  recall /= b.size();
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double psnr(const Image<float>& a, const Image<float>& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, "psnr image shape mismatch");
  double mse = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double d = static_cast<double>(a.data[i]) - b.data[i];
    mse += d * d;
  }
  mse /= a.data.size();
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double temporal_consistency(const std::vector<Image<float>>& frames) {
  if (frames.size() < 2)
    throw Error(ErrorCode::TooFewFrames, "temporal consistency needs >= 2 frames");
  double total = 0.0;
  for (size_t i = 0; i + 1 < frames.size(); ++i) {
    if (!frames[i].same_shape(frames[i + 1]))
      throw Error(ErrorCode::ShapeMismatch, "frame shape changes mid-sequence");
    double mse = 0.0;
    for (size_t k = 0; k < frames[i].data.size(); ++k) {
      double d = static_cast<double>(frames[i].data[k]) - frames[i + 1].data[k];
      mse += d * d;
    }
    total += mse / frames[i].data.size();
  }
  return total / (frames.size() - 1);
}

namespace {

PartMesh bbox_normalize(const PartMesh& mesh) {
  if (mesh.vertices.empty()) throw Error(ErrorCode::DegenerateMesh, "empty mesh");
  Vec3 lo = Vec3::Constant(1e30), hi = Vec3::Constant(-1e30);
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  double extent = (hi - lo).maxCoeff();
  if (extent <= 0) throw Error(ErrorCode::DegenerateMesh, "mesh bbox has no extent");
  Vec3 center = 0.5 * (lo + hi);
  PartMesh out = mesh;
  for (auto& v : out.vertices) v = (v - center) / extent;
  return out;
}

}  // namespace

std::pair<PartMesh, PartMesh> align_normalize(const PartMesh& pred, const PartMesh& gt) {
  return {bbox_normalize(pred), bbox_normalize(gt)};
}

JointMetrics joint_metrics(const JointSpec& pred_in, const JointSpec& gt_in) {
  if (pred_in.kind != gt_in.kind)
    throw Error(ErrorCode::KindMismatch, "joint kinds differ");
  JointSpec pred = pred_in.canonical();
  JointSpec gt = gt_in.canonical();

  JointMetrics m;
  Vec3 ap = pred.axis.normalized(), ag = gt.axis.normalized();
  m.axis_angle_err = std::acos(std::clamp(std::abs(ap.dot(ag)), 0.0, 1.0));

  if (pred.kind == JointKind::Revolute) {
    Vec3 d = gt.pivot - pred.pivot;
    Vec3 cross = ap.cross(ag);
    if (cross.norm() < 1e-9) {
      m.axis_origin_err = (d - ag * d.dot(ag)).norm();
    } else {
      m.axis_origin_err = std::abs(d.dot(cross)) / cross.norm();
    }
  }

  m.m_r = std::abs(pred.scale - gt.scale) / std::max(std::abs(gt.scale), 1e-12);

  Vec3 vp = ap * pred.scale, vg = ag * gt.scale;
  double dot = vp.dot(vg);
  if (vp.norm() < 1e-12 || vg.norm() < 1e-12) {
    m.m_d = (vp.norm() < 1e-12 && vg.norm() < 1e-12) ? 0.0 : M_PI;
  } else {
    m.m_d = std::acos(std::clamp(vp.normalized().dot(vg.normalized()), -1.0, 1.0));
  }
  m.axis_ok = m.axis_angle_err <= 0.25;
  m.origin_ok = m.axis_origin_err <= 0.15;
  m.mr_ok = m.m_r <= 0.3;
  m.md_ok = dot > 0 && m.m_d <= 0.3;
  m.all_ok = m.axis_ok && m.origin_ok && m.mr_ok && m.md_ok;
  return m;
}

// ---------------------------------------------------------------------------
// Ground-truth meshes
// ---------------------------------------------------------------------------

namespace {

/// Appends a box as flat-colored quads, one per texture cell per face, with
/// lighting baked into the vertex colors (outward-normal diffuse).
void append_box_mesh(PartMesh& mesh, const TexturedBox& box, const RigidTransform& T,
                     const Vec3& light_dir, double ambient) {
  const int cells = box.texture.cells > 0 ? box.texture.cells : 1;
  for (int axis = 0; axis < 3; ++axis)
    for (int sign : {-1, 1}) {
      int a = (axis + 1) % 3, b = (axis + 2) % 3;
      Vec3 n = Vec3::Zero();
      n[axis] = sign;
      Vec3 face_center = box.center + n.cwiseProduct(box.half);
      Vec3 ea = Vec3::Zero(), eb = Vec3::Zero();
      ea[a] = box.half[a];
      eb[b] = box.half[b];
      Vec3 n_world = T.R * n;
      double shade = ambient + (1.0 - ambient) * std::max(0.0, n_world.dot(-light_dir));
      for (int cu = 0; cu < cells; ++cu)
        for (int cv = 0; cv < cells; ++cv) {
          Vec2 uv_mid((cu + 0.5) / cells, (cv + 0.5) / cells);
          Vec3 color = box_texture_color(box.texture, uv_mid) * shade;
          color = color.cwiseMin(1.0).cwiseMax(0.0);
          auto corner = [&](int iu, int iv) {
            double fu = 2.0 * iu / cells - 1.0, fv = 2.0 * iv / cells - 1.0;
            return T.apply(face_center + fu * ea + fv * eb);
          };
          int base = static_cast<int>(mesh.vertices.size());
          mesh.vertices.push_back(corner(cu, cv));
          mesh.vertices.push_back(corner(cu + 1, cv));
          mesh.vertices.push_back(corner(cu + 1, cv + 1));
          mesh.vertices.push_back(corner(cu, cv + 1));
          for (int k = 0; k < 4; ++k) mesh.colors.push_back(color);
          mesh.triangles.push_back({base, base + 1, base + 2});
          mesh.triangles.push_back({base, base + 2, base + 3});
        }
    }
}

}  // namespace

PartMesh scene_mesh(const ArticulatedScene& scene, const std::vector<double>& states) {
  if (states.size() != scene.parts.size())
    throw Error(ErrorCode::ShapeMismatch, "one state per joint required");
  PartMesh mesh;
  for (const auto& box : scene.body)
    append_box_mesh(mesh, box, RigidTransform::identity(), scene.light_dir, scene.ambient);
  for (size_t j = 0; j < scene.parts.size(); ++j) {
    RigidTransform T = joint_transform(scene.parts[j].joint, 0.0, states[j]);
    append_box_mesh(mesh, scene.parts[j].box, T, scene.light_dir, scene.ambient);
  }
  mesh.validate();
  return mesh;
}

std::pair<PartMesh, PartMesh> scene_part_meshes(const ArticulatedScene& scene, int joint_id) {
  if (joint_id < 0 || joint_id >= scene.num_joints())
    throw Error(ErrorCode::InvalidArgument, "joint_id out of range");
  PartMesh body, movable;
  body.label = "body";
  movable.label = "movable";
  for (const auto& box : scene.body)
    append_box_mesh(body, box, RigidTransform::identity(), scene.light_dir, scene.ambient);
  for (int j = 0; j < scene.num_joints(); ++j) {
    PartMesh& dst = j == joint_id ? movable : body;
    append_box_mesh(dst, scene.parts[j].box, RigidTransform::identity(), scene.light_dir,
                    scene.ambient);
  }
  return {std::move(body), std::move(movable)};
}

PartMesh merge_meshes(const PartMesh& a, const PartMesh& b) {
  PartMesh out = a;
  int base = static_cast<int>(a.vertices.size());
  out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
  out.colors.insert(out.colors.end(), b.colors.begin(), b.colors.end());
  for (const auto& t : b.triangles)
    out.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  return out;
}

SampleFrame render_mesh(const PartMesh& mesh, const CameraIntrinsics& intr,
                        const CameraPose& pose) {
  mesh.validate();
  std::vector<ShadedTriangle> tris;
  tris.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    ShadedTriangle st;
    for (int k = 0; k < 3; ++k) {
      st.v[k] = mesh.vertices[t[k]];
      st.color[k] = mesh.colors[t[k]];
    }
    tris.push_back(st);
  }
  return rasterize_shaded(tris, intr, pose);
}

// ---------------------------------------------------------------------------
// Object evaluation
// ---------------------------------------------------------------------------

ObjectReport evaluate_object(const std::pair<PartMesh, PartMesh>& pred_meshes,
                             const JointFitResult& pred_joint, const ArticulatedScene& gt_scene,
                             int joint_id, const EvalConfig& cfg) {
  if (cfg.n_states < 1) throw Error(ErrorCode::InvalidArgument, "need at least one state");
  const JointSpec& gt_joint = gt_scene.parts.at(joint_id).joint;

  ObjectReport report;
  report.joint = joint_metrics(pred_joint.spec, gt_joint);

  std::pair<PartMesh, PartMesh> gt_meshes = scene_part_meshes(gt_scene, joint_id);
  CameraIntrinsics intr = default_intrinsics(cfg.render_resolution);
  Rng cam_rng(cfg.seed ^ 0xc2b2ae3d27d4eb4full);
  std::vector<CameraPose> views;
  for (int i = 0; i < cfg.n_render_views; ++i) views.push_back(sample_camera(cam_rng));

  for (int si = 0; si < cfg.n_states; ++si) {
    double theta = cfg.n_states == 1 ? 0.0 : si / static_cast<double>(cfg.n_states - 1);
    auto pred_posed = pose_mesh_at_state(pred_meshes, pred_joint.spec, theta);
    auto gt_posed = pose_mesh_at_state(gt_meshes, gt_joint, theta);
    PartMesh pred_full = merge_meshes(pred_posed.first, pred_posed.second);
    PartMesh gt_full = merge_meshes(gt_posed.first, gt_posed.second);

    StateEval se;
    se.theta = theta;
    auto [pred_n, gt_n] = align_normalize(pred_full, gt_full);
    uint64_t sseed = cfg.seed + 1000003 * (si + 1);
    std::vector<Vec3> pa = sample_surface(pred_n, cfg.n_surface_samples, sseed);
    std::vector<Vec3> pb = sample_surface(gt_n, cfg.n_surface_samples, sseed ^ 0x5bd1e995u);
    se.cd = chamfer(pa, pb);
    se.fscore = fscore(pa, pb);

    double psnr_sum = 0.0;
    for (const auto& pose : views) {
      SampleFrame rp = render_mesh(pred_full, intr, pose);
      SampleFrame rg = render_mesh(gt_full, intr, pose);
      psnr_sum += psnr(rp.rgb, rg.rgb);
    }
    se.psnr = psnr_sum / views.size();
    report.states.push_back(se);
  }

  for (const auto& se : report.states) {
    report.cd += se.cd;
    report.fscore += se.fscore;
    report.psnr += se.psnr;
  }
  report.cd /= report.states.size();
  report.fscore /= report.states.size();
  report.psnr /= report.states.size();
  return report;
}

namespace {

json metrics_to_json(const JointMetrics& m) {
  return json{{"axis_angle_err", m.axis_angle_err}, {"axis_origin_err", m.axis_origin_err},
              {"m_r", m.m_r},                       {"m_d", m.m_d},
              {"axis_ok", m.axis_ok},               {"origin_ok", m.origin_ok},
              {"mr_ok", m.mr_ok},                   {"md_ok", m.md_ok},
              {"all_ok", m.all_ok}};
}

}  // namespace

void write_report_json(const ObjectReport& report, const fs::path& path) {
  json j;
  j["cd"] = report.cd;
  j["fscore"] = report.fscore;
  j["psnr"] = report.psnr;
  j["joint"] = metrics_to_json(report.joint);
  j["states"] = json::array();
  for (const auto& se : report.states)
    j["states"].push_back(
        {{"theta", se.theta}, {"cd", se.cd}, {"fscore", se.fscore}, {"psnr", se.psnr}});
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::DiskWrite, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_report_csv(const std::vector<std::pair<std::string, ObjectReport>>& reports,
                      const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::DiskWrite, "cannot write " + path.string());
  out << "object,cd,fscore,psnr,axis_angle_err,axis_origin_err,m_r,m_d,joint_all_ok\n";
  double cd = 0, fs_ = 0, ps = 0;
  for (const auto& [name, r] : reports) {
    out << name << ',' << r.cd << ',' << r.fscore << ',' << r.psnr << ','
        << r.joint.axis_angle_err << ',' << r.joint.axis_origin_err << ',' << r.joint.m_r << ','
        << r.joint.m_d << ',' << (r.joint.all_ok ? 1 : 0) << '\n';
    cd += r.cd;
    fs_ += r.fscore;
    ps += r.psnr;
  }
  if (!reports.empty())
    out << "mean," << cd / reports.size() << ',' << fs_ / reports.size() << ','
        << ps / reports.size() << ",,,,,\n";
}

}  // namespace larm
