#include <doctest.h>

#include "larm/model.hpp"
#include "larm/synth_world.hpp"
#include "larm/training.hpp"

using namespace larm;

namespace {

ModelConfig small_cfg(int channels) {
  ModelConfig cfg;
  cfg.patch_size = 4;
  cfg.dim = 32;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.image_h = cfg.image_w = 16;
  cfg.views_per_state = 1;
  cfg.channels = channels;
  return cfg;
}

TrainSample make_sample(uint64_t seed, const ModelConfig& cfg) {
  ArticulatedScene scene = sample_scene(seed, SceneFamily::Door);
  CameraIntrinsics intr = default_intrinsics(cfg.image_h);
  Rng rng(seed);
  TrainSample s;
  for (int i = 0; i < cfg.views_per_state; ++i) {
    s.inputs.push_back(rasterize(scene, intr, sample_camera(rng), 0.0, 0));
    s.inputs.push_back(rasterize(scene, intr, sample_camera(rng), 1.0, 0));
  }
  s.target = rasterize(scene, intr, sample_camera(rng), 0.5, 0);
  return s;
}

}  // namespace

TEST_CASE("token geometry of the default configuration") {
  ModelConfig cfg;  // 64x64, p=8, N=3
  CHECK(cfg.patches_per_view() == 64);
  CHECK(cfg.input_tokens() == 384);
  CHECK(cfg.target_tokens() == 64);
  CHECK(cfg.input_tokens() + cfg.target_tokens() == 448);
  CHECK(cfg.input_token_width() == 9 * 64 + 1);
  CHECK(cfg.target_token_width() == 6 * 64 + 1);
  CHECK(cfg.head_width() == 64 * 3);
}

TEST_CASE("patchify layout round trips through plane_from_rows") {
  Image<float> img(8, 8, 3);
  Rng rng(4);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());
  MatX<double> rows = patchify<double>(img, 4);
  CHECK(rows.rows() == 4);
  CHECK(rows.cols() == 48);
  for (int c = 0; c < 3; ++c) {
    MatX<double> plane = plane_from_rows(rows, c, 8, 8, 4);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        CHECK(plane(y, x) == doctest::Approx(img.at(x, y, c)).epsilon(1e-12));
  }
}

TEST_CASE("parameter initialization statistics and determinism") {
  ModelConfig cfg = small_cfg(3);
  ModelParamsT<double> a = ModelParamsT<double>::init(cfg, 123);
  ModelParamsT<double> b = ModelParamsT<double>::init(cfg, 123);
  ModelParamsT<double> c = ModelParamsT<double>::init(cfg, 124);
  bool all_equal = true, any_diff = false;
  for (size_t i = 0; i < a.t.count(); ++i) {
    all_equal &= a.t.tensors[i].cwiseEqual(b.t.tensors[i]).all();
    any_diff |= !a.t.tensors[i].cwiseEqual(c.t.tensors[i]).all();
  }
  CHECK(all_equal);
  CHECK(any_diff);

  // weight std close to 0.02, biases zero
  const MatX<double>& w = a.t.at("layer0.attn.wq");
  double std_dev = std::sqrt(w.array().square().mean());
  CHECK(std_dev == doctest::Approx(0.02).epsilon(0.2));
  CHECK(a.t.at("layer0.attn.bq").cwiseAbs().maxCoeff() == 0.0);
  // residual output projections use the depth-scaled std
  const MatX<double>& wo = a.t.at("layer0.attn.wo");
  double wo_std = std::sqrt(wo.array().square().mean());
  CHECK(wo_std == doctest::Approx(0.02 / std::sqrt(2.0 * cfg.layers)).epsilon(0.25));
}

TEST_CASE("transformer forward is deterministic and finite") {
  ModelConfig cfg = small_cfg(3);
  ModelParamsT<double> params = ModelParamsT<double>::init(cfg, 9);
  MatX<double> tokens = MatX<double>::Zero(cfg.input_tokens() + cfg.target_tokens(), cfg.dim);
  Rng rng(10);
  for (int i = 0; i < tokens.size(); ++i) tokens.data()[i] = rng.normal() * 0.1;
  MatX<double> out1 = transformer_forward<double>(tokens, params, nullptr);
  MatX<double> out2 = transformer_forward<double>(tokens, params, nullptr);
  CHECK(out1.cwiseEqual(out2).all());
  CHECK(out1.allFinite());
  CHECK(out1.rows() == tokens.rows());
  CHECK(out1.cols() == cfg.dim);
}

TEST_CASE("decoded patches are sigmoid-bounded") {
  ModelConfig cfg = small_cfg(6);
  ModelParamsT<double> params = ModelParamsT<double>::init(cfg, 2);
  MatX<double> rows = MatX<double>::Zero(cfg.target_tokens(), cfg.dim);
  Rng rng(3);
  for (int i = 0; i < rows.size(); ++i) rows.data()[i] = rng.normal();
  MatX<double> out = decode_tokens<double>(rows, params, nullptr);
  CHECK(out.rows() == cfg.target_tokens());
  CHECK(out.cols() == cfg.head_width());
  CHECK(out.minCoeff() > 0.0);
  CHECK(out.maxCoeff() < 1.0);
}

TEST_CASE("infer produces a well-formed prediction") {
  ModelConfig cfg = small_cfg(6);
  ModelParams params = ModelParams::init(cfg, 31);
  TrainSample s = make_sample(6, cfg);
  Prediction pred = infer(s.inputs, s.target.intr, s.target.pose, 0.5, params);
  CHECK(pred.rgb.width == cfg.image_w);
  CHECK(pred.rgb.channels == 3);
  CHECK(pred.theta == 0.5);
  for (float v : pred.fg_prob.data) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
  for (float v : pred.depth.data) {
    CHECK(v >= kDepthNear);
    CHECK(v <= kDepthFar);
  }
  CHECK_NOTHROW(pred.to_frame(0).validate());
}

TEST_CASE("input view order interleaves the two conditioning states") {
  ModelConfig cfg = small_cfg(3);
  cfg.views_per_state = 2;
  TrainSample s = make_sample(8, cfg);
  std::vector<int> order = input_view_order(s.inputs, cfg.views_per_state);
  REQUIRE(order.size() == 4);
  // the first half must be the theta=0 views, the second half theta=1
  for (int i = 0; i < 2; ++i) CHECK(s.inputs[order[i]].theta == 0.0);
  for (int i = 2; i < 4; ++i) CHECK(s.inputs[order[i]].theta == 1.0);
}

TEST_CASE("finetune warm start reproduces the pretrained rgb output exactly") {
  ModelConfig pre_cfg = small_cfg(3);
  ModelConfig fin_cfg = small_cfg(6);
  ModelParams pre = ModelParams::init(pre_cfg, 44);
  ModelParams fin = init_finetune_heads(pre, fin_cfg);
  TrainSample s = make_sample(12, pre_cfg);
  Prediction a = infer(s.inputs, s.target.intr, s.target.pose, 0.5, pre);
  Prediction b = infer(s.inputs, s.target.intr, s.target.pose, 0.5, fin);
  CHECK(a.rgb.data == b.rgb.data);
}

TEST_CASE("gelu matches the exact erf formulation") {
  for (double x : {-3.0, -1.0, -0.25, 0.0, 0.5, 2.0}) {
    double expect = 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
    CHECK(detail::gelu(x) == doctest::Approx(expect).epsilon(1e-12));
    double h = 1e-6;
    double fd = (detail::gelu(x + h) - detail::gelu(x - h)) / (2 * h);
    CHECK(detail::gelu_grad(x) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("layer norm output is standardized per row") {
  MatX<double> x(3, 8);
  Rng rng(5);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal() * 3 + 1;
  MatX<double> g = MatX<double>::Ones(8, 1), b = MatX<double>::Zero(8, 1);
  MatX<double> y = detail::layer_norm(x, g, b, static_cast<LayerNormCache<double>*>(nullptr));
  for (int r = 0; r < 3; ++r) {
    CHECK(y.row(r).mean() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(y.row(r).array().square().mean() == doctest::Approx(1.0).epsilon(1e-3));
  }
}
