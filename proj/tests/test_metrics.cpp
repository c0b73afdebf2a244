#include <doctest.h>

#include <fstream>

#include "larm/metrics.hpp"

using namespace larm;

namespace {

std::vector<Vec3> random_points(Rng& rng, int n) {
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i)
    pts.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  return pts;
}

double brute_nearest(const std::vector<Vec3>& pts, const Vec3& q) {
  double best = std::numeric_limits<double>::max();
  for (const auto& p : pts) best = std::min(best, (p - q).norm());
  return best;
}

PartMesh unit_quad() {
  PartMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
  m.colors = std::vector<Vec3>(4, Vec3(0.5, 0.5, 0.5));
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

}  // namespace

TEST_CASE("kd-tree agrees with brute force nearest neighbors") {
  Rng rng(3);
  auto pts = random_points(rng, 500);
  KdTree tree(pts);
  for (int i = 0; i < 2000; ++i) {
    Vec3 q(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
    CHECK(tree.nearest_dist(q) == doctest::Approx(brute_nearest(pts, q)).epsilon(1e-12));
  }
}

TEST_CASE("chamfer distance: identity, symmetry and a hand-computed value") {
  Rng rng(5);
  auto a = random_points(rng, 100);
  auto b = random_points(rng, 120);
  CHECK(chamfer(a, a) == 0.0);
  CHECK(chamfer(a, b) == doctest::Approx(chamfer(b, a)).epsilon(1e-12));
  CHECK(chamfer(a, b) > 0.0);

  // two points offset by d in one direction: both directed means equal d
  std::vector<Vec3> p = {Vec3(0, 0, 0)};
  std::vector<Vec3> q = {Vec3(0.3, 0, 0)};
  CHECK(chamfer(p, q) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("f-score: perfect overlap scores 1, distant sets score 0") {
  Rng rng(8);
  auto a = random_points(rng, 64);
  CHECK(fscore(a, a, 0.05) == 1.0);
  std::vector<Vec3> far;
  for (const auto& p : a) far.push_back(p + Vec3(10, 0, 0));
  CHECK(fscore(a, far, 0.05) == 0.0);

  // one of two points within tau: precision = recall = 0.5 -> F = 0.5
  std::vector<Vec3> x = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  std::vector<Vec3> y = {Vec3(0.01, 0, 0), Vec3(2, 0, 0)};
  CHECK(fscore(x, y, 0.05) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("psnr: identical images hit the 99 dB cap, known mse maps exactly") {
  Image<float> a(4, 4, 3, 0.25f);
  CHECK(psnr(a, a) == 99.0);
  Image<float> b = a;
  for (auto& v : b.data) v += 0.1f;
  double expect = 10.0 * std::log10(1.0 / (0.1 * 0.1));
  CHECK(psnr(a, b) == doctest::Approx(expect).epsilon(1e-4));
}

TEST_CASE("temporal consistency of a constant sequence is zero") {
  Image<float> f(4, 4, 3, 0.6f);
  CHECK(temporal_consistency({f, f, f}) == 0.0);
  Image<float> g = f;
  g.at(0, 0, 0) += 0.48f;
  double mse = 0.48 * 0.48 / (4 * 4 * 3);
  CHECK(temporal_consistency({f, g}) == doctest::Approx(mse).epsilon(1e-6));
}

TEST_CASE("align_normalize centers each mesh and scales the longest side to 1") {
  PartMesh a = unit_quad();
  PartMesh big = unit_quad();
  for (auto& v : big.vertices) v = v * 4.0 + Vec3(10, -3, 2);
  auto [na, nb] = align_normalize(a, big);
  auto bounds = [](const PartMesh& m) {
    Vec3 lo = m.vertices[0], hi = m.vertices[0];
    for (const auto& v : m.vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    return std::pair{lo, hi};
  };
  for (const PartMesh* m : {&na, &nb}) {
    auto [lo, hi] = bounds(*m);
    CHECK((hi - lo).maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((0.5 * (lo + hi)).norm() < 1e-12);
  }
  // after normalization the two differently-scaled quads coincide
  for (size_t i = 0; i < na.vertices.size(); ++i)
    CHECK((na.vertices[i] - nb.vertices[i]).norm() < 1e-12);
}

TEST_CASE("surface sampling is deterministic and area weighted") {
  PartMesh quad = unit_quad();
  auto s1 = sample_surface(quad, 5000, 3);
  auto s2 = sample_surface(quad, 5000, 3);
  REQUIRE(s1.size() == 5000);
  for (size_t i = 0; i < s1.size(); ++i) CHECK((s1[i] - s2[i]).norm() == 0.0);
  Vec3 mean = Vec3::Zero();
  for (const auto& p : s1) {
    CHECK(p.x() >= 0.0);
    CHECK(p.x() <= 1.0);
    CHECK(p.z() == 0.0);
    mean += p;
  }
  mean /= static_cast<double>(s1.size());
  CHECK((mean - Vec3(0.5, 0.5, 0.0)).norm() < 0.02);

  CHECK(sample_surface(quad, 0, 1).empty());
  PartMesh degenerate;
  degenerate.vertices = {Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 0, 0)};
  degenerate.colors = degenerate.vertices;
  degenerate.triangles = {{0, 1, 2}};
  CHECK_THROWS_AS(sample_surface(degenerate, 10, 1), Error);
}

TEST_CASE("joint metrics are gauge invariant and threshold correct") {
  JointSpec gt = JointSpec::revolute(Vec3(0, 1, 0), Vec3(0.2, 0, 0.1), 1.2);
  JointMetrics self = joint_metrics(gt, gt);
  CHECK(self.axis_angle_err == 0.0);
  CHECK(self.axis_origin_err < 1e-12);
  CHECK(self.m_r == 0.0);
  CHECK(self.all_ok);

  // the flipped gauge describes the identical motion
  JointSpec flipped = gt;
  flipped.axis = -flipped.axis;
  flipped.scale = -flipped.scale;
  JointMetrics gauge = joint_metrics(flipped, gt);
  CHECK(gauge.axis_angle_err < 1e-12);
  CHECK(gauge.m_r < 1e-12);
  CHECK(gauge.all_ok);

  // sliding the pivot along the axis does not change the axis line
  JointSpec slid = gt;
  slid.pivot += 0.4 * slid.axis;
  CHECK(joint_metrics(slid, gt).axis_origin_err < 1e-12);

  // past the axis threshold
  JointSpec tilted = JointSpec::revolute(Vec3(std::sin(0.3), std::cos(0.3), 0),
                                         gt.pivot, 1.2);
  JointMetrics bad = joint_metrics(tilted, gt);
  CHECK(bad.axis_angle_err == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(!bad.axis_ok);
  CHECK(!bad.all_ok);

  // opposite motion direction fails the direction criterion even if the
  // undirected axis matches
  JointSpec reversed = gt;
  reversed.scale = -reversed.scale;  // NOT flipping the axis: true reversal
  JointMetrics dir = joint_metrics(reversed.canonical(), gt);
  CHECK(dir.axis_angle_err < 1e-12);
  CHECK(!dir.md_ok);

  CHECK_THROWS_AS(joint_metrics(JointSpec::prismatic(Vec3(1, 0, 0), 0.2), gt), Error);
}

TEST_CASE("relative range error uses the ground-truth magnitude") {
  JointSpec gt = JointSpec::prismatic(Vec3(1, 0, 0), 0.2);
  JointSpec pred = JointSpec::prismatic(Vec3(1, 0, 0), 0.25);
  CHECK(joint_metrics(pred, gt).m_r == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(joint_metrics(pred, gt).mr_ok);
  JointSpec way_off = JointSpec::prismatic(Vec3(1, 0, 0), 0.4);
  CHECK(!joint_metrics(way_off, gt).mr_ok);
}

TEST_CASE("ground-truth meshes render exactly like the scene rasterizer") {
  ArticulatedScene scene = sample_scene(13, SceneFamily::Door);
  CameraIntrinsics intr = default_intrinsics(64);
  Rng rng(6);
  for (double theta : {0.0, 0.6}) {
    CameraPose pose = sample_camera(rng);
    PartMesh mesh = scene_mesh(scene, {theta});
    SampleFrame from_mesh = render_mesh(mesh, intr, pose);
    SampleFrame from_scene = rasterize(scene, intr, pose, theta, 0);
    CHECK(psnr(from_mesh.rgb, from_scene.rgb) == 99.0);
  }
}

TEST_CASE("evaluating the ground truth against itself is perfect") {
  ArticulatedScene scene = sample_scene(17, SceneFamily::Drawer);
  auto meshes = scene_part_meshes(scene, 0);
  JointFitResult joint;
  joint.spec = scene.parts[0].joint;
  EvalConfig cfg;
  cfg.n_states = 3;
  cfg.n_render_views = 4;
  cfg.seed = 2;
  ObjectReport report = evaluate_object(meshes, joint, scene, 0, cfg);
  CHECK(report.psnr == 99.0);
  CHECK(report.fscore == 1.0);
  CHECK(report.cd < 0.02);  // surface-sampling noise floor
  CHECK(report.joint.all_ok);
  REQUIRE(report.states.size() == 3);
  CHECK(report.states.front().theta == 0.0);
  CHECK(report.states.back().theta == 1.0);
}

TEST_CASE("report writers produce the documented schema") {
  ArticulatedScene scene = sample_scene(19, SceneFamily::Door);
  auto meshes = scene_part_meshes(scene, 0);
  JointFitResult joint;
  joint.spec = scene.parts[0].joint;
  EvalConfig cfg;
  cfg.n_states = 2;
  cfg.n_render_views = 2;
  cfg.n_surface_samples = 2000;
  cfg.seed = 1;
  ObjectReport report = evaluate_object(meshes, joint, scene, 0, cfg);

  fs::path dir = fs::temp_directory_path() / "larm_report_test";
  fs::create_directories(dir);
  write_report_json(report, dir / "r.json");
  write_report_csv({{"obj0", report}}, dir / "r.csv");
  std::ifstream csv(dir / "r.csv");
  std::string header, row, mean;
  std::getline(csv, header);
  std::getline(csv, row);
  std::getline(csv, mean);
  CHECK(header ==
        "object,cd,fscore,psnr,axis_angle_err,axis_origin_err,m_r,m_d,joint_all_ok");
  CHECK(row.substr(0, 5) == "obj0,");
  CHECK(mean.substr(0, 5) == "mean,");
  fs::remove_all(dir);
}
