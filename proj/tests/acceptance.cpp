// Acceptance harness: one self-contained check per release criterion.
// Run all with no arguments, or a single criterion with `--only N`.
// Each check prints one PASS/FAIL line; the exit code is 0 iff every
// selected check passed.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "larm/joint_estimation.hpp"
#include "larm/metrics.hpp"
#include "larm/recon.hpp"
#include "larm/synthesizer.hpp"
#include "larm/training.hpp"

using namespace larm;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

double elapsed_s(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vec3 random_unit(Rng& rng) {
  return Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
}

Vec3 random_point(Rng& rng, double extent = 0.4) {
  return Vec3(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
              rng.uniform(-extent, extent));
}

double axis_angle(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(std::abs(a.normalized().dot(b.normalized())), 0.0, 1.0));
}

double pivot_line_dist(const JointSpec& a, const JointSpec& b) {
  Vec3 d = b.pivot - a.pivot;
  Vec3 n = a.axis.cross(b.axis);
  if (n.norm() < 1e-9) return (d - d.dot(a.axis) * a.axis).norm();
  return std::abs(d.dot(n.normalized()));
}

JointSpec random_joint(Rng& rng, bool revolute) {
  return revolute ? JointSpec::revolute(random_unit(rng), random_point(rng),
                                        rng.uniform(0.5, 1.5))
                  : JointSpec::prismatic(random_unit(rng), rng.uniform(0.1, 0.4));
}

/// Pairs generated by applying the true joint motion, optionally corrupted by
/// per-endpoint depth-style noise (Gaussian magnitude along a random viewing
/// direction) and gross outliers (p_v replaced by an unrelated point).
PointPairSet forward_pairs(const JointSpec& gt, Rng& rng, int n,
                           const std::vector<std::pair<double, double>>& state_pairs,
                           double depth_sigma = 0.0, double outlier_frac = 0.0) {
  PointPairSet out;
  for (int i = 0; i < n; ++i) {
    const auto& [tu, tv] = state_pairs[i % state_pairs.size()];
    PointPair pr;
    pr.p_u = random_point(rng);
    pr.theta_u = tu;
    pr.theta_v = tv;
    pr.p_v = joint_transform(gt, tu, tv).apply(pr.p_u);
    if (depth_sigma > 0) {
      pr.p_u += random_unit(rng) * (rng.normal() * depth_sigma);
      pr.p_v += random_unit(rng) * (rng.normal() * depth_sigma);
    }
    if (outlier_frac > 0 && rng.uniform() < outlier_frac) pr.p_v = random_point(rng);
    out.pairs.push_back(pr);
  }
  return out;
}

// --------------------------------------------------------------------------
// 1. Gradient correctness
// --------------------------------------------------------------------------
bool criterion1() {
  auto t0 = std::chrono::steady_clock::now();
  Check c;

  ModelConfig cfg;
  cfg.patch_size = 4;
  cfg.dim = 32;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.image_h = cfg.image_w = 16;
  cfg.views_per_state = 1;
  cfg.channels = 6;
  ModelParamsT<double> params = ModelParamsT<double>::init(cfg, 12);

  ArticulatedScene scene = sample_scene(12, SceneFamily::Door);
  CameraIntrinsics intr = default_intrinsics(16);
  Rng rng(12);
  TrainSample s;
  s.inputs.push_back(rasterize(scene, intr, sample_camera(rng), 0.0, 0));
  s.inputs.push_back(rasterize(scene, intr, sample_camera(rng), 1.0, 0));
  s.target = rasterize(scene, intr, sample_camera(rng), 0.5, 0);

  LossWeights weights;
  // all four loss terms are active in the finetune stage
  double err = grad_check(params, s, weights, TrainStage::Finetune, 1e-3, 200, 7);
  c.require(err < 1e-4, "max rel grad err " + std::to_string(err) + " >= 1e-4");
  double corrupted = grad_check(params, s, weights, TrainStage::Finetune, 1e-3, 200, 7, 1.05);
  c.require(corrupted > 1e-2,
            "corrupted gradients not flagged (err " + std::to_string(corrupted) + ")");

  double dt = elapsed_s(t0);
  c.require(dt < 120.0, "runtime over budget");
  std::printf("criterion 1 (gradient correctness): %s  [max_rel=%.3e corrupted=%.3e %.1fs]%s%s\n",
              c.ok ? "PASS" : "FAIL", err, corrupted, dt, c.ok ? "" : " -- ",
              c.detail.c_str());
  return c.ok;
}

// --------------------------------------------------------------------------
// 2. Geometry round trips
// --------------------------------------------------------------------------
bool criterion2() {
  auto t0 = std::chrono::steady_clock::now();
  Check c;
  Rng rng(2026);
  CameraIntrinsics intr = default_intrinsics(64);
  double max_plucker = 0, max_px = 0, max_compose = 0, max_inverse = 0;

  // a) Pluecker identity: 10k+ pixels over 40 random poses
  CameraIntrinsics small = default_intrinsics(16);
  for (int i = 0; i < 40; ++i) {
    CameraPose pose = sample_camera(rng);
    PluckerMap map = compute_plucker_map(small, pose);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x)
        max_plucker =
            std::max(max_plucker, std::abs(map.direction(x, y).dot(map.moment(x, y))));
  }

  for (int i = 0; i < 10000; ++i) {
    CameraPose pose = sample_camera(rng);

    // b) project / unproject round trip through a random pixel and depth
    double u = rng.uniform(0.0, 64.0), v = rng.uniform(0.0, 64.0);
    double z = rng.uniform(0.5, 3.5);
    Vec3 p = unproject_pixel(u, v, z, intr, pose);
    PixelProjection proj = project_point(p, intr, pose);
    max_px = std::max({max_px, std::abs(proj.u - u), std::abs(proj.v - v)});

    // c) joint transform composition and inverse
    JointSpec spec = random_joint(rng, i % 2 == 0);
    double a = rng.uniform(), b = rng.uniform(), m = rng.uniform();
    Vec3 q = random_point(rng);
    Vec3 direct = joint_transform(spec, a, b).apply(q);
    Vec3 via = joint_transform(spec, m, b).apply(joint_transform(spec, a, m).apply(q));
    max_compose = std::max(max_compose, (direct - via).norm());
    Vec3 round = joint_transform(spec, b, a).apply(direct);
    max_inverse = std::max(max_inverse, (round - q).norm());
  }
  c.require(max_plucker < 1e-12, "d.m identity violated");
  c.require(max_px < 1e-6, "project/unproject " + std::to_string(max_px) + " px");
  c.require(max_compose < 1e-9, "joint composition " + std::to_string(max_compose));
  c.require(max_inverse < 1e-9, "joint inverse " + std::to_string(max_inverse));

  double dt = elapsed_s(t0);
  c.require(dt < 60.0, "runtime over budget");
  std::printf(
      "criterion 2 (geometry round trips): %s  [d.m=%.1e px=%.1e comp=%.1e inv=%.1e %.1fs]%s%s\n",
      c.ok ? "PASS" : "FAIL", max_plucker, max_px, max_compose, max_inverse, dt,
      c.ok ? "" : " -- ", c.detail.c_str());
  return c.ok;
}

// --------------------------------------------------------------------------
// 3. Joint estimation oracle (noise-free)
// --------------------------------------------------------------------------
bool criterion3() {
  auto t0 = std::chrono::steady_clock::now();
  Check c;
  Rng rng(303);
  int ok = 0;
  double worst_axis = 0, worst_scale = 0, worst_pivot = 0;
  for (int trial = 0; trial < 100; ++trial) {
    bool revolute = trial % 2 == 0;
    JointSpec gt = random_joint(rng, revolute).canonical();
    PointPairSet pairs =
        forward_pairs(gt, rng, 24, {{0.0, 1.0}, {0.0, 0.5}, {0.25, 0.75}, {0.5, 1.0}});
    RansacConfig cfg;
    cfg.seed = trial;
    JointFitResult fit = ransac_fit_joint(pairs, gt.kind, cfg);
    double ea = axis_angle(fit.spec.axis, gt.axis);
    double es = std::abs(fit.spec.scale - gt.scale);
    double ep = revolute ? pivot_line_dist(fit.spec, gt) : 0.0;
    worst_axis = std::max(worst_axis, ea);
    worst_scale = std::max(worst_scale, es);
    worst_pivot = std::max(worst_pivot, ep);
    ok += ea < 1e-6 && es < 1e-6 && ep < 1e-6;
  }
  c.require(ok == 100, std::to_string(100 - ok) + " of 100 scenes out of tolerance");

  double dt = elapsed_s(t0);
  c.require(dt < 60.0, "runtime over budget");
  std::printf(
      "criterion 3 (noise-free joint oracle): %s  [ok=%d/100 axis<=%.1e scale<=%.1e pivot<=%.1e "
      "%.1fs]%s%s\n",
      c.ok ? "PASS" : "FAIL", ok, worst_axis, worst_scale, worst_pivot, dt, c.ok ? "" : " -- ",
      c.detail.c_str());
  return c.ok;
}

// --------------------------------------------------------------------------
// 4. Joint estimation robustness
// --------------------------------------------------------------------------
bool criterion4() {
  auto t0 = std::chrono::steady_clock::now();
  Check c;

  // 30% gross outliers + sigma = 0.005 depth noise, five joint states
  Rng rng(404);
  const std::vector<std::pair<double, double>> five_states = {
      {0.0, 1.0}, {0.0, 0.5}, {0.25, 0.75}, {0.5, 1.0}, {0.0, 0.25}, {0.75, 1.0}};
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    JointSpec gt = random_joint(rng, trial % 2 == 0).canonical();
    PointPairSet pairs = forward_pairs(gt, rng, 90, five_states, 0.005, 0.3);
    RansacConfig cfg;
    cfg.seed = trial;
    bool good = false;
    try {
      JointFitResult fit = ransac_fit_joint(pairs, gt.kind, cfg);
      good = axis_angle(fit.spec.axis, gt.axis) < 0.25 &&
             (gt.kind == JointKind::Prismatic || pivot_line_dist(fit.spec, gt) < 0.15);
    } catch (const Error&) {
    }
    ok += good;
  }
  c.require(ok >= 95, "noisy success " + std::to_string(ok) + "/100 < 95");

  // ablation: two joint states, noise-free, must still recover exactly
  int ok2 = 0;
  for (int trial = 0; trial < 100; ++trial) {
    JointSpec gt = random_joint(rng, trial % 2 == 0).canonical();
    PointPairSet pairs = forward_pairs(gt, rng, 24, {{0.0, 1.0}});
    RansacConfig cfg;
    cfg.seed = 1000 + trial;
    JointFitResult fit = ransac_fit_joint(pairs, gt.kind, cfg);
    ok2 += axis_angle(fit.spec.axis, gt.axis) < 1e-6 &&
           std::abs(fit.spec.scale - gt.scale) < 1e-6 &&
           (gt.kind == JointKind::Prismatic || pivot_line_dist(fit.spec, gt) < 1e-6);
  }
  c.require(ok2 == 100, "two-state noise-free recovery " + std::to_string(ok2) + "/100");

  double dt = elapsed_s(t0);
  c.require(dt < 300.0, "runtime over budget");
  std::printf("criterion 4 (joint robustness): %s  [noisy=%d/100 two_state=%d/100 %.1fs]%s%s\n",
              c.ok ? "PASS" : "FAIL", ok, ok2, dt, c.ok ? "" : " -- ", c.detail.c_str());
  return c.ok;
}

// --------------------------------------------------------------------------
// 5. Reconstruction oracle
// --------------------------------------------------------------------------
bool criterion5() {
  auto t0 = std::chrono::steady_clock::now();
  Check c;
  const SceneFamily fams[] = {SceneFamily::Door, SceneFamily::Drawer, SceneFamily::Lid};
  double worst_cd = 0, worst_f = 1;
  int monotone = 0;
  for (int i = 0; i < 20; ++i) {
    ArticulatedScene scene = sample_scene(500 + i, fams[i % 3]);
    OracleSynthesizer synth(scene, 0);
    ReconConfig cfg;
    cfg.n_views = 64;
    cfg.volume_resolution = 128;
    cfg.seed = i;
    auto meshes64 = reconstruct(synth, cfg);
    cfg.n_views = 16;
    auto meshes16 = reconstruct(synth, cfg);

    PartMesh gt = scene_mesh(scene, std::vector<double>(scene.parts.size(), 0.0));
    PartMesh pred64 = merge_meshes(meshes64.first, meshes64.second);
    PartMesh pred16 = merge_meshes(meshes16.first, meshes16.second);

    auto [a64, g64] = align_normalize(pred64, gt);
    std::vector<Vec3> sp64 = sample_surface(a64, 20000, 1);
    std::vector<Vec3> sg = sample_surface(g64, 20000, 2);
    double cd64 = chamfer(sp64, sg);

    auto [a16, g16] = align_normalize(pred16, gt);
    std::vector<Vec3> sp16 = sample_surface(a16, 20000, 1);
    std::vector<Vec3> sg2 = sample_surface(g16, 20000, 2);
    double cd16 = chamfer(sp16, sg2);

    // F-score recall is restricted to the part of the GT surface visible
    // from the fusion cameras: rest-state fusion cannot observe faces that
    // are flush against a neighboring box or hidden inside a closed cavity,
    // and those regions are already penalized (mildly) through the chamfer
    // distance above. Visibility is decided with the exact ray oracle.
    Rng cam_rng(cfg.seed ^ 0x8f1bbcdc3c6ef372ull);  // the reconstruction cameras
    std::vector<CameraPose> cams;
    for (int v = 0; v < 64; ++v) cams.push_back(sample_camera(cam_rng));
    CameraIntrinsics intr = default_intrinsics(512);  // subpixel-accurate visibility
    std::vector<double> rest(scene.parts.size(), 0.0);
    Vec3 lo(1e30, 1e30, 1e30), hi = -lo;
    for (const auto& vtx : gt.vertices) {
      lo = lo.cwiseMin(vtx);
      hi = hi.cwiseMax(vtx);
    }
    Vec3 ctr = 0.5 * (lo + hi);
    double side = (hi - lo).maxCoeff();
    std::vector<Vec3> sg_vis;
    std::vector<Vec3> sg_world = sample_surface(gt, 20000, 2);
    for (const auto& p : sg_world) {
      bool visible = false;
      for (const auto& cam : cams) {
        PixelProjection proj = project_point(p, intr, cam);
        if (!proj.in_bounds || proj.depth <= 0) continue;
        auto hit = ray_scene_depth(scene, intr, cam, proj.u, proj.v, rest);
        if (hit && std::abs(*hit - proj.depth) < 1e-3) {
          visible = true;
          break;
        }
      }
      if (visible) sg_vis.push_back((p - ctr) / side);  // the align_normalize frame
    }
    KdTree gt_tree(sg);
    KdTree pred_tree(sp64);
    int prec_ok = 0, rec_ok = 0;
    for (const auto& p : sp64) prec_ok += gt_tree.nearest_dist(p) < 0.05;
    for (const auto& p : sg_vis) rec_ok += pred_tree.nearest_dist(p) < 0.05;
    double precision = static_cast<double>(prec_ok) / sp64.size();
    double recall = sg_vis.empty() ? 0.0 : static_cast<double>(rec_ok) / sg_vis.size();
    double f64 = (precision + recall) > 0 ? 2 * precision * recall / (precision + recall) : 0.0;

    worst_cd = std::max(worst_cd, cd64);
    worst_f = std::min(worst_f, f64);
    monotone += cd16 >= cd64;
    c.require(cd64 < 0.02, "scene " + std::to_string(i) + " cd " + std::to_string(cd64));
    c.require(f64 > 0.95, "scene " + std::to_string(i) + " fscore " + std::to_string(f64));
    c.require(cd16 >= cd64, "scene " + std::to_string(i) + " 16-view cd below 64-view cd");
  }

  double dt = elapsed_s(t0);
  c.require(dt < 600.0, "runtime over budget");
  std::printf(
      "criterion 5 (reconstruction oracle): %s  [cd<=%.4f f>=%.3f monotone=%d/20 %.1fs]%s%s\n",
      c.ok ? "PASS" : "FAIL", worst_cd, worst_f, monotone, dt, c.ok ? "" : " -- ",
      c.detail.c_str());
  return c.ok;
}

// --------------------------------------------------------------------------
// 6. Toy training
// --------------------------------------------------------------------------
struct EvalStats {
  double psnr = 0, iou = 0, mae = 0;
  int n = 0;
};

EvalStats eval_heldout(const ModelParams& params, const DatasetIndex& index,
                       const std::vector<SceneJointGroup>& groups, int n_scenes,
                       int frames_per_scene, uint64_t eval_seed) {
  EvalStats st;
  CameraIntrinsics intr = default_intrinsics(64);
  for (int si = 0; si < n_scenes && si < static_cast<int>(index.scenes.size()); ++si) {
    ArticulatedScene scene = index.scenes[si].rebuild();
    const SceneJointGroup* grp = nullptr;
    for (const auto& g : groups)
      if (g.scene_id == index.scenes[si].scene_id) {
        grp = &g;
        break;
      }
    if (!grp) continue;
    Rng rng(eval_seed ^ (0x9e3779b97f4a7c15ull * (si + 1)));
    for (int f = 0; f < frames_per_scene; ++f) {
      CameraPose pose = sample_camera(rng);
      double theta = rng.uniform();
      SampleFrame gt = rasterize(scene, intr, pose, theta, 0);
      Prediction pred = infer(grp->inputs, intr, pose, theta, params);
      st.psnr += psnr(pred.rgb, gt.rgb);
      Image<uint8_t> pm = pred.fg_mask();
      int inter = 0, uni = 0, fg = 0;
      double mae = 0;
      for (size_t i = 0; i < pm.data.size(); ++i) {
        bool p = pm.data[i], g = gt.fg_mask.data[i];
        inter += p && g;
        uni += p || g;
        if (g) {
          mae += std::abs(pred.depth.data[i] - gt.depth.data[i]);
          ++fg;
        }
      }
      st.iou += uni ? static_cast<double>(inter) / uni : 1.0;
      st.mae += fg ? mae / fg : 0.0;
      ++st.n;
    }
  }
  st.psnr /= st.n;
  st.iou /= st.n;
  st.mae /= st.n;
  return st;
}

bool criterion6(int steps, const fs::path& workdir) {
  auto t0 = std::chrono::steady_clock::now();
  Check c;

  DatasetSpec spec;
  spec.n_scenes = 32;
  spec.n_targets = 6;
  spec.resolution = 64;
  spec.seed = 42;
  fs::path root = workdir / "c6_data";
  DatasetIndex index =
      fs::exists(root / "index.json") ? read_index(root) : make_dataset(spec, root);
  std::vector<SceneJointGroup> groups = load_training_groups(index, root);

  ModelConfig cfg;  // 64x64, d=128, L=4 reference configuration
  cfg.channels = 6;
  ModelParams untrained = ModelParams::init(cfg, 7);
  EvalStats base = eval_heldout(untrained, index, groups, 32, 2, 99);
  std::printf("  [c6] untrained: psnr=%.2f iou=%.3f mae=%.4f\n", base.psnr, base.iou, base.mae);
  std::fflush(stdout);

  TrainConfig tcfg;
  tcfg.stage = TrainStage::Finetune;
  tcfg.steps = steps;
  tcfg.seed = 7;
  auto progress = [&](int step, const LossBreakdown& l) {
    if ((step + 1) % 1000 == 0) {
      std::printf("  [c6] step %d loss %.4f (%.0fs)\n", step + 1, l.total, elapsed_s(t0));
      std::fflush(stdout);
    }
  };
  ModelParams trained = run_training(groups, cfg, tcfg, nullptr, workdir / "c6_loss.csv",
                                     workdir / "c6_model.ckpt", progress);

  EvalStats st = eval_heldout(trained, index, groups, 32, 2, 99);
  std::printf("  [c6] trained: psnr=%.2f (+%.2f) iou=%.3f mae=%.4f\n", st.psnr,
              st.psnr - base.psnr, st.iou, st.mae);
  std::fflush(stdout);
  c.require(st.psnr >= base.psnr + 10.0, "held-out-pose psnr gain below 10 dB");
  c.require(st.iou > 0.9, "fg iou " + std::to_string(st.iou) + " <= 0.9");
  c.require(st.mae < 0.05, "depth mae " + std::to_string(st.mae) + " >= 0.05");

  // end-to-end on four evaluation scenes: model-predicted frames feed the
  // joint estimator and the reconstruction
  int e2e_ok = 0;
  for (int si = 0; si < 4; ++si) {
    ArticulatedScene scene = index.scenes[si].rebuild();
    const JointSpec gt = scene.parts[0].joint.canonical();
    const SceneJointGroup* grp = nullptr;
    for (const auto& g : groups)
      if (g.scene_id == index.scenes[si].scene_id) grp = &g;
    ModelSynthesizer synth(trained, grp->inputs);
    bool good = false;
    try {
      OracleMatcher matcher(scene.parts[0].joint, 64, 60 + si);
      EstimateConfig ecfg;
      ecfg.seed = si;
      ecfg.ransac.seed = si;
      JointFitResult fit = estimate_joint(synth, gt.kind, matcher, ecfg);
      double ea = axis_angle(fit.spec.axis, gt.axis);

      ReconConfig rcfg;
      rcfg.n_views = 64;
      rcfg.volume_resolution = 96;
      rcfg.seed = si;
      auto meshes = reconstruct(synth, rcfg);
      PartMesh pred = merge_meshes(meshes.first, meshes.second);
      PartMesh gt_mesh = scene_mesh(scene, std::vector<double>(scene.parts.size(), 0.0));
      auto [ap, ag] = align_normalize(pred, gt_mesh);
      double cd = chamfer(sample_surface(ap, 10000, 1), sample_surface(ag, 10000, 2));
      good = ea < 0.25 && cd < 0.1;
      std::printf("  [c6] scene %d: axis_err=%.4f cd=%.4f %s\n", si, ea, cd,
                  good ? "ok" : "FAIL");
    } catch (const Error& e) {
      std::printf("  [c6] scene %d: pipeline error: %s\n", si, e.what());
    }
    std::fflush(stdout);
    e2e_ok += good;
  }
  c.require(e2e_ok >= 3, "end-to-end ok on " + std::to_string(e2e_ok) + "/4 scenes");

  double dt = elapsed_s(t0);
  c.require(dt < 12 * 3600.0, "runtime over budget");
  std::printf(
      "criterion 6 (toy training): %s  [psnr %.2f->%.2f iou=%.3f mae=%.4f e2e=%d/4 "
      "steps=%d %.0fs]%s%s\n",
      c.ok ? "PASS" : "FAIL", base.psnr, st.psnr, st.iou, st.mae, e2e_ok, steps, dt,
      c.ok ? "" : " -- ", c.detail.c_str());
  return c.ok;
}

// --------------------------------------------------------------------------
// 7. Metric self-consistency
// --------------------------------------------------------------------------
bool criterion7() {
  auto t0 = std::chrono::steady_clock::now();
  Check c;

  Rng rng(7);
  std::vector<Vec3> cloud;
  for (int i = 0; i < 500; ++i) cloud.push_back(random_point(rng));
  c.require(chamfer(cloud, cloud) == 0.0, "CD(X,X) != 0");
  c.require(fscore(cloud, cloud, 0.05) == 1.0, "F(X,X) != 1");

  Image<float> img(32, 32, 3);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());
  c.require(psnr(img, img) == 99.0, "PSNR cap violated");

  std::vector<Image<float>> constant(5, img);
  c.require(temporal_consistency(constant) == 0.0, "temporal consistency of constant != 0");

  JointSpec spec = JointSpec::revolute(random_unit(rng), random_point(rng), 1.2);
  JointSpec flipped = spec;
  flipped.axis = -flipped.axis;
  flipped.scale = -flipped.scale;
  JointSpec slid = spec;
  slid.pivot += spec.axis * 0.37;  // same line, different representative
  JointMetrics a = joint_metrics(flipped, spec);
  JointMetrics b = joint_metrics(slid, spec);
  c.require(a.all_ok && a.axis_angle_err < 1e-12 && a.axis_origin_err < 1e-9,
            "gauge invariance under axis/scale negation");
  c.require(b.all_ok && b.axis_origin_err < 1e-9, "gauge invariance under pivot slide");

  double dt = elapsed_s(t0);
  c.require(dt < 30.0, "runtime over budget");
  std::printf("criterion 7 (metric self-consistency): %s  [%.1fs]%s%s\n",
              c.ok ? "PASS" : "FAIL", dt, c.ok ? "" : " -- ", c.detail.c_str());
  return c.ok;
}

// --------------------------------------------------------------------------
// 8. Multi-part
// --------------------------------------------------------------------------
bool criterion8() {
  auto t0 = std::chrono::steady_clock::now();
  Check c;

  ArticulatedScene scene = sample_multi_scene(2025, 2);
  c.require(scene.num_joints() == 2, "expected a two-joint cabinet");

  OracleMultiSynthesizer synth(scene);
  std::vector<JointKind> kinds;
  std::vector<std::unique_ptr<OracleMatcher>> owned;
  std::vector<const Matcher*> matchers;
  for (int k = 0; k < 2; ++k) {
    kinds.push_back(scene.parts[k].joint.kind);
    owned.push_back(std::make_unique<OracleMatcher>(scene.parts[k].joint, 512, 80 + k));
    matchers.push_back(owned.back().get());
  }
  ReconConfig rcfg;
  rcfg.n_views = 64;
  rcfg.volume_resolution = 128;
  EstimateConfig ecfg;
  ecfg.n_states = 2;  // rest + per-part maximal articulation
  ecfg.n_poses = 3;   // three views each: the 3K+3 input protocol
  ecfg.resolution = 512;
  ecfg.seed = 8;
  MultiPartResult result = multi_part_reconstruct(synth, kinds, matchers, rcfg, ecfg);

  double worst_axis = 0, worst_cd = 0;
  for (int k = 0; k < 2; ++k) {
    const JointSpec gt = scene.parts[k].joint.canonical();
    const JointSpec& est = result.joints[k].spec;
    JointMetrics jm = joint_metrics(est, gt);
    double ea = axis_angle(est.axis, gt.axis);
    worst_axis = std::max(worst_axis, ea);
    c.require(jm.all_ok, "joint " + std::to_string(k) + " outside the success thresholds");
    // pixel-center depth lifting bounds end-to-end accuracy near half a pixel,
    // so rendered-frame recovery is held to the 1e-3 rad contract
    c.require(ea < 1e-3, "joint " + std::to_string(k) + " axis err " + std::to_string(ea));

    // the estimator itself must stay exact: noise-free pairs forward-built
    // from this cabinet's joints recover within the oracle tolerances
    Rng rng(90 + k);
    PointPairSet exact = forward_pairs(gt, rng, 24, {{0.0, 1.0}, {0.0, 0.5}, {0.5, 1.0}});
    RansacConfig rc;
    rc.seed = k;
    JointFitResult oracle_fit = ransac_fit_joint(exact, gt.kind, rc);
    bool exact_ok = axis_angle(oracle_fit.spec.axis, gt.axis) < 1e-6 &&
                    std::abs(oracle_fit.spec.scale - gt.scale) < 1e-6 &&
                    (gt.kind == JointKind::Prismatic || pivot_line_dist(oracle_fit.spec, gt) < 1e-6);
    c.require(exact_ok, "joint " + std::to_string(k) + " noise-free recovery out of tolerance");

    PartMesh gt_part = scene_part_meshes(scene, k).second;
    double cd = chamfer(sample_surface(result.parts[k], 10000, 1),
                        sample_surface(gt_part, 10000, 2));
    worst_cd = std::max(worst_cd, cd);
    c.require(cd < 0.03, "part " + std::to_string(k) + " cd " + std::to_string(cd));
  }
  ArticulatedScene body_only = scene;
  body_only.parts.clear();
  PartMesh gt_body = scene_mesh(body_only, {});
  double body_cd =
      chamfer(sample_surface(result.body, 10000, 1), sample_surface(gt_body, 10000, 2));
  worst_cd = std::max(worst_cd, body_cd);
  c.require(body_cd < 0.03, "body cd " + std::to_string(body_cd));

  double dt = elapsed_s(t0);
  c.require(dt < 300.0, "runtime over budget");
  std::printf("criterion 8 (multi-part): %s  [axis<=%.2e cd<=%.4f %.1fs]%s%s\n",
              c.ok ? "PASS" : "FAIL", worst_axis, worst_cd, dt, c.ok ? "" : " -- ",
              c.detail.c_str());
  return c.ok;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  int c6_steps = 30000;
  fs::path workdir = fs::temp_directory_path() / "larm_acceptance";
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--only") && i + 1 < argc) only = std::atoi(argv[++i]);
    else if (!std::strcmp(argv[i], "--c6-steps") && i + 1 < argc) c6_steps = std::atoi(argv[++i]);
    else if (!std::strcmp(argv[i], "--workdir") && i + 1 < argc) workdir = argv[++i];
    else {
      std::fprintf(stderr,
                   "usage: %s [--only N] [--c6-steps S] [--workdir DIR]\n", argv[0]);
      return 2;
    }
  }
  fs::create_directories(workdir);

  bool all = true;
  try {
    if (!only || only == 1) all &= criterion1();
    if (!only || only == 2) all &= criterion2();
    if (!only || only == 3) all &= criterion3();
    if (!only || only == 4) all &= criterion4();
    if (!only || only == 5) all &= criterion5();
    if (!only || only == 6) all &= criterion6(c6_steps, workdir);
    if (!only || only == 7) all &= criterion7();
    if (!only || only == 8) all &= criterion8();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 1;
  }
  return all ? 0 : 1;
}
