#include "larm/model.hpp"

#include <algorithm>
#include <numeric>

namespace larm {

std::vector<int> input_view_order(const std::vector<SampleFrame>& inputs, int views_per_state) {
  if (static_cast<int>(inputs.size()) != 2 * views_per_state)
    throw Error(ErrorCode::StateCountMismatch, "expected 2N input views");
  std::vector<double> thetas;
  for (const auto& f : inputs)
    if (std::find_if(thetas.begin(), thetas.end(),
                     [&](double t) { return std::abs(t - f.theta) < 1e-12; }) == thetas.end())
      thetas.push_back(f.theta);
  if (thetas.size() != 2)
    throw Error(ErrorCode::StateCountMismatch, "input views must span exactly two states");
  std::sort(thetas.begin(), thetas.end());

  std::vector<int> order;
  for (double t : thetas)
    for (size_t i = 0; i < inputs.size(); ++i)
      if (std::abs(inputs[i].theta - t) < 1e-12) order.push_back(static_cast<int>(i));
  for (double t : thetas) {
    int count = 0;
    for (const auto& f : inputs) count += std::abs(f.theta - t) < 1e-12;
    if (count != views_per_state)
      throw Error(ErrorCode::StateCountMismatch, "need N views per state");
  }
  return order;
}

Prediction infer(const std::vector<SampleFrame>& inputs, const CameraIntrinsics& target_intr,
                 const CameraPose& target_pose, double theta_t, const ModelParams& params) {
  const ModelConfig& cfg = params.cfg;
  std::vector<int> order = input_view_order(inputs, cfg.views_per_state);

  MatX<float> tokens(cfg.input_tokens() + cfg.target_tokens(), cfg.dim);
  int row = 0;
  for (int idx : order) {
    const SampleFrame& f = inputs[idx];
    PluckerMap plucker = compute_plucker_map(f.intr, f.pose);
    MatX<float> t = tokenize_input_view(f.rgb, plucker, f.theta, params);
    tokens.middleRows(row, t.rows()) = t;
    row += static_cast<int>(t.rows());
  }
  PluckerMap target_plucker = compute_plucker_map(target_intr, target_pose);
  MatX<float> tq = tokenize_target_view(target_plucker, theta_t, params);
  tokens.middleRows(row, tq.rows()) = tq;

  MatX<float> out = transformer_forward<float>(tokens, params, nullptr);
  MatX<float> decoded =
      decode_tokens<float>(out.bottomRows(cfg.target_tokens()), params, nullptr);
  Image<float> img = decode_patches_to_image(decoded, cfg);

  Prediction pred;
  pred.intr = target_intr;
  pred.pose = target_pose;
  pred.theta = theta_t;
  pred.rgb = Image<float>(cfg.image_w, cfg.image_h, 3);
  pred.depth = Image<float>(cfg.image_w, cfg.image_h, 1);
  pred.fg_prob = Image<float>(cfg.image_w, cfg.image_h, 1, 1.0f);
  pred.part_prob = Image<float>(cfg.image_w, cfg.image_h, 1, 0.0f);
  for (int y = 0; y < cfg.image_h; ++y)
    for (int x = 0; x < cfg.image_w; ++x) {
      for (int c = 0; c < 3; ++c) pred.rgb.at(x, y, c) = img.at(x, y, c);
      if (cfg.channels == 6) {
        pred.depth.at(x, y) = static_cast<float>(
            kDepthNear + (kDepthFar - kDepthNear) * img.at(x, y, 3));
        pred.fg_prob.at(x, y) = img.at(x, y, 4);
        pred.part_prob.at(x, y) = img.at(x, y, 5);
      }
    }
  return pred;
}

ModelParams init_finetune_heads(const ModelParams& pretrain, const ModelConfig& finetune_cfg) {
  ModelConfig expect = finetune_cfg;
  expect.channels = pretrain.cfg.channels;
  if (pretrain.cfg.channels != 3 || finetune_cfg.channels != 6 || expect != pretrain.cfg)
    throw Error(ErrorCode::ConfigMismatch,
                "finetune config must match pretrain config except channels 3 -> 6");

  ModelParams out;
  out.cfg = finetune_cfg;
  for (size_t i = 0; i < pretrain.t.count(); ++i) {
    const std::string& name = pretrain.t.names[i];
    if (name == "head.w" || name == "head.b") continue;
    out.t.add(name, static_cast<int>(pretrain.t.tensors[i].rows()),
              static_cast<int>(pretrain.t.tensors[i].cols()));
    out.t[name] = pretrain.t.tensors[i];
  }
  const int p2 = finetune_cfg.patch_size * finetune_cfg.patch_size;
  MatX<float>& w = out.t.add("head.w", finetune_cfg.dim, finetune_cfg.head_width());
  MatX<float>& b = out.t.add("head.b", finetune_cfg.head_width(), 1);
  const MatX<float>& w0 = pretrain.t.at("head.w");
  const MatX<float>& b0 = pretrain.t.at("head.b");
  for (int c = 0; c < 6; ++c) {
    int src = c < 3 ? c : 0;  // depth/fg/part warm started from the red channel
    w.middleCols(c * p2, p2) = w0.middleCols(src * p2, p2);
    b.middleRows(c * p2, p2) = b0.middleRows(src * p2, p2);
  }
  return out;
}

}  // namespace larm
