#include <doctest.h>

#include <filesystem>
#include <unistd.h>

#include "larm/joint_estimation.hpp"
#include "larm/synthesizer.hpp"

using namespace larm;

namespace {

Vec3 random_unit(Rng& rng) {
  return Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
}

Vec3 random_point(Rng& rng, double extent = 0.4) {
  return Vec3(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
              rng.uniform(-extent, extent));
}

/// Exact pairs generated by applying the ground-truth joint motion.
PointPairSet forward_pairs(const JointSpec& gt, Rng& rng, int n,
                           const std::vector<std::pair<double, double>>& state_pairs,
                           double noise = 0.0, double outlier_frac = 0.0) {
  PointPairSet out;
  for (int i = 0; i < n; ++i) {
    const auto& [tu, tv] = state_pairs[i % state_pairs.size()];
    PointPair pr;
    pr.p_u = random_point(rng);
    pr.theta_u = tu;
    pr.theta_v = tv;
    pr.p_v = joint_transform(gt, tu, tv).apply(pr.p_u);
    if (outlier_frac > 0 && rng.uniform() < outlier_frac)
      pr.p_v = random_point(rng);
    else if (noise > 0)
      pr.p_v += Vec3(rng.normal(), rng.normal(), rng.normal()) * noise;
    out.pairs.push_back(pr);
  }
  return out;
}

double axis_angle(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(std::abs(a.normalized().dot(b.normalized())), 0.0, 1.0));
}

double pivot_line_dist(const JointSpec& a, const JointSpec& b) {
  // distance between the two axis lines, robust to near-parallel axes
  Vec3 d = b.pivot - a.pivot;
  Vec3 n = a.axis.cross(b.axis);
  if (n.norm() < 1e-9) return (d - d.dot(a.axis) * a.axis).norm();
  return std::abs(d.dot(n.normalized()));
}

}  // namespace

TEST_CASE("closed-form initialization recovers exact single-state-pair motion") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    bool revolute = trial % 2 == 0;
    JointSpec gt = revolute
                       ? JointSpec::revolute(random_unit(rng), random_point(rng),
                                             rng.uniform(0.5, 1.5))
                       : JointSpec::prismatic(random_unit(rng), rng.uniform(0.1, 0.4));
    PointPairSet pairs = forward_pairs(gt, rng, revolute ? 5 : 3, {{0.0, 1.0}});
    JointSpec init = closed_form_init(pairs, gt.kind).canonical();
    JointSpec canon = gt.canonical();
    CHECK(axis_angle(init.axis, canon.axis) < 1e-6);
    CHECK(std::abs(init.scale - canon.scale) < 1e-6);
    if (revolute) CHECK(pivot_line_dist(init, canon) < 1e-6);
  }
}

TEST_CASE("noise-free oracle recovery over 100 random joints") {
  // multi state-pair sets exercise the gradient refinement path
  Rng rng(29);
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    bool revolute = trial % 2 == 0;
    JointSpec gt = revolute
                       ? JointSpec::revolute(random_unit(rng), random_point(rng),
                                             rng.uniform(0.5, 1.5))
                       : JointSpec::prismatic(random_unit(rng), rng.uniform(0.1, 0.4));
    PointPairSet pairs =
        forward_pairs(gt, rng, 24, {{0.0, 1.0}, {0.0, 0.5}, {0.25, 0.75}, {0.5, 1.0}});
    RansacConfig cfg;
    cfg.seed = trial;
    JointFitResult fit = ransac_fit_joint(pairs, gt.kind, cfg);
    JointSpec canon = gt.canonical();
    bool good = axis_angle(fit.spec.axis, canon.axis) < 1e-6 &&
                std::abs(fit.spec.scale - canon.scale) < 1e-6 &&
                (!revolute || pivot_line_dist(fit.spec, canon) < 1e-6);
    ok += good;
  }
  CHECK(ok == 100);
}

TEST_CASE("ransac survives 30% gross outliers") {
  Rng rng(31);
  int ok = 0;
  for (int trial = 0; trial < 40; ++trial) {
    JointSpec gt = JointSpec::revolute(random_unit(rng), random_point(rng),
                                       rng.uniform(0.5, 1.5));
    PointPairSet pairs = forward_pairs(gt, rng, 60, {{0.0, 1.0}, {0.0, 0.5}, {0.5, 1.0}},
                                       0.002, 0.3);
    RansacConfig cfg;
    cfg.seed = trial;
    JointFitResult fit;
    try {
      fit = ransac_fit_joint(pairs, gt.kind, cfg);
    } catch (const Error&) {
      continue;
    }
    JointSpec canon = gt.canonical();
    ok += axis_angle(fit.spec.axis, canon.axis) < 0.25 && pivot_line_dist(fit.spec, canon) < 0.15;
  }
  CHECK(ok >= 38);
}

TEST_CASE("ransac is invariant to the input pair order") {
  Rng rng(37);
  JointSpec gt = JointSpec::revolute(random_unit(rng), random_point(rng), 1.1);
  PointPairSet pairs = forward_pairs(gt, rng, 30, {{0.0, 1.0}, {0.0, 0.5}}, 0.001, 0.2);
  RansacConfig cfg;
  cfg.seed = 5;
  JointFitResult a = ransac_fit_joint(pairs, gt.kind, cfg);
  PointPairSet shuffled = pairs;
  Rng shuffle_rng(8);
  for (size_t i = shuffled.pairs.size(); i > 1; --i)
    std::swap(shuffled.pairs[i - 1], shuffled.pairs[shuffle_rng.below(i)]);
  JointFitResult b = ransac_fit_joint(shuffled, gt.kind, cfg);
  CHECK((a.spec.axis - b.spec.axis).norm() == 0.0);
  CHECK(a.spec.scale == b.spec.scale);
  CHECK(a.inlier_fraction == b.inlier_fraction);
}

TEST_CASE("fit result is gauge invariant under axis/scale negation") {
  Rng rng(41);
  JointSpec gt = JointSpec::revolute(random_unit(rng), random_point(rng), 0.9);
  JointSpec flipped = gt;
  flipped.axis = -flipped.axis;
  flipped.scale = -flipped.scale;
  PointPairSet a = forward_pairs(gt, rng, 12, {{0.0, 1.0}});
  Rng rng2(41);
  (void)rng2;
  JointFitResult fit = fit_joint(a, gt.kind, flipped.canonical());
  CHECK(fit.spec.scale >= 0.0);
  CHECK(axis_angle(fit.spec.axis, gt.canonical().axis) < 1e-6);
}

TEST_CASE("filtering enforces confidence, masks and spatial separation") {
  Image<uint8_t> mask(16, 16, 1, 0);
  for (int y = 4; y < 12; ++y)
    for (int x = 4; x < 12; ++x) mask.at(x, y) = 1;
  std::vector<Correspondence> cands;
  cands.push_back({Vec2(5.5, 5.5), Vec2(5.5, 5.5), 0.95});
  cands.push_back({Vec2(5.9, 5.9), Vec2(6.5, 6.5), 0.9});    // too close to the first
  cands.push_back({Vec2(10.5, 10.5), Vec2(9.5, 9.5), 0.85});
  cands.push_back({Vec2(8.5, 8.5), Vec2(8.5, 8.5), 0.2});    // low confidence
  cands.push_back({Vec2(1.5, 1.5), Vec2(5.5, 5.5), 0.99});   // outside the part mask
  auto kept = filter_correspondences(cands, mask, mask, 0.8, 3.0, 2);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].confidence == 0.95);
  CHECK(kept[1].confidence == 0.85);

  CHECK_THROWS_AS(filter_correspondences(cands, mask, mask, 0.8, 3.0, 3), Error);
}

TEST_CASE("lifting rejects correspondences on empty depth") {
  CameraIntrinsics intr = default_intrinsics(16);
  CameraPose pose = CameraPose::look_at(Vec3(0, 0, -2), Vec3::Zero());
  Image<float> depth(16, 16, 1, 0.0f);
  depth.at(8, 8) = 2.0f;
  std::vector<Correspondence> corr = {{Vec2(8.5, 8.5), Vec2(2.5, 2.5), 1.0}};
  CHECK_THROWS_AS(lift_pairs(corr, depth, depth, intr, pose, 0, 1), Error);
  corr[0].pixel_v = Vec2(8.5, 8.5);
  PointPairSet ok = lift_pairs(corr, depth, depth, intr, pose, 0, 1);
  CHECK(ok.pairs.size() == 1);
  CHECK((ok.pairs[0].p_u - unproject_pixel(8.5, 8.5, 2.0, intr, pose)).norm() < 1e-12);
}

TEST_CASE("end-to-end estimation from rendered frames matches ground truth") {
  for (uint64_t seed : {7ull, 15ull}) {
    for (SceneFamily fam : {SceneFamily::Door, SceneFamily::Drawer}) {
      ArticulatedScene scene = sample_scene(seed, fam);
      const JointSpec gt = scene.parts[0].joint.canonical();
      OracleSynthesizer synth(scene, 0);
      OracleMatcher matcher(scene.parts[0].joint, 64, seed);
      EstimateConfig cfg;
      cfg.seed = seed;
      cfg.ransac.seed = seed;
      JointFitResult fit = estimate_joint(synth, gt.kind, matcher, cfg);
      CHECK(axis_angle(fit.spec.axis, gt.axis) < 0.02);
      CHECK(std::abs(fit.spec.scale - gt.scale) / gt.scale < 0.05);
      if (gt.kind == JointKind::Revolute) CHECK(pivot_line_dist(fit.spec, gt) < 0.02);
      CHECK(fit.inlier_fraction > 0.8);
    }
  }
}

TEST_CASE("correspondence files round trip through the file matcher") {
  fs::path dir = fs::temp_directory_path() / ("larm_match_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::vector<Correspondence> set = {{Vec2(1.5, 2.5), Vec2(3.25, 4.75), 0.9},
                                     {Vec2(5.0, 6.0), Vec2(7.0, 8.0), 1.0}};
  write_correspondences_json({{0.0, 1.0, set}}, dir / "m.json");
  FileMatcher matcher(dir / "m.json");
  Prediction u, v;
  u.theta = 0.0;
  v.theta = 1.0;
  auto got = matcher.match(u, v);
  REQUIRE(got.size() == 2);
  CHECK((got[0].pixel_v - Vec2(3.25, 4.75)).norm() == 0.0);
  CHECK(matcher.match(v, u).empty());  // unknown state pair
  fs::remove_all(dir);
}

TEST_CASE("joint result json round trip") {
  fs::path dir = fs::temp_directory_path() / ("larm_joint_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  JointFitResult r;
  r.spec = JointSpec::revolute(Vec3(0, 1, 0), Vec3(0.2, 0, 0.1), 1.25);
  r.inlier_fraction = 0.875;
  r.rms = 0.0042;
  write_joint_result_json(r, JointKind::Revolute, dir / "j.json");
  JointKind kind;
  JointFitResult back = read_joint_result_json(dir / "j.json", &kind);
  CHECK(kind == JointKind::Revolute);
  CHECK((back.spec.axis - r.spec.axis).norm() < 1e-12);
  CHECK((back.spec.pivot - r.spec.pivot).norm() < 1e-12);
  CHECK(back.spec.scale == r.spec.scale);
  CHECK(back.inlier_fraction == r.inlier_fraction);
  CHECK(back.rms == r.rms);
  fs::remove_all(dir);
}

TEST_CASE("degenerate inputs raise typed errors") {
  PointPairSet empty;
  RansacConfig cfg;
  CHECK_THROWS_AS(ransac_fit_joint(empty, JointKind::Revolute, cfg), Error);

  // no relative motion: every state pair identical
  Rng rng(3);
  JointSpec gt = JointSpec::revolute(Vec3(0, 0, 1), Vec3::Zero(), 1.0);
  PointPairSet still = forward_pairs(gt, rng, 6, {{0.3, 0.3}});
  CHECK_THROWS_AS(fit_joint(still, JointKind::Revolute, gt), Error);
}
