#pragma once

#include <functional>

#include "larm/dataset_io.hpp"
#include "larm/model.hpp"

namespace larm {

struct LossWeights {
  double perceptual = 0.1;
  double depth = 2.0;
  double fg = 1.0;
  double part = 1.0;
};

enum class TrainStage { Pretrain, Finetune };

/// Optional perceptual term of the RGB loss. The default hook returns zero
/// (a pretrained perceptual network is out of scope); a replacement must
/// also fill `grad` (d loss / d pred) when requested.
using PerceptualHook =
    std::function<double(const Image<float>& pred, const Image<float>& gt, Image<float>* grad)>;

struct TrainConfig {
  TrainStage stage = TrainStage::Finetune;
  double learning_rate = 3e-4;
  int steps = 1000;
  int batch_size = 1;
  uint64_t seed = 0;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double warmup_frac = 0.05;
  LossWeights weights;
  bool aug_scale = true;    // per-axis scale augmentation (applied at data generation)
  bool aug_texture = true;  // texture reseed augmentation
  int checkpoint_every = 0; // 0: final checkpoint only
  PerceptualHook perceptual;  // empty: zero hook
};

struct LossBreakdown {
  double total = 0, rgb = 0, depth = 0, fg = 0, part = 0;
};

/// One optimization sample: the 2N conditioning frames plus one target.
struct TrainSample {
  std::vector<SampleFrame> inputs;
  SampleFrame target;
};

// ---------------------------------------------------------------------------
// Loss primitives on planes (row = y, col = x), with gradients
// ---------------------------------------------------------------------------

namespace loss_detail {

constexpr double kBceClamp = 1e-6;

template <typename S>
S mse(const MatX<S>& pred, const MatX<S>& gt, MatX<S>* d, S weight_count) {
  // weight_count: total element count of the (possibly multi-plane) tensor
  MatX<S> diff = pred - gt;
  if (d) *d = (S(2) / weight_count) * diff;
  return diff.array().square().sum() / weight_count;
}

template <typename S>
S l1_masked(const MatX<S>& pred, const MatX<S>& gt, const MatX<S>& mask, MatX<S>* d) {
  S count = mask.sum();
  if (count <= S(0)) throw Error(ErrorCode::EmptyForeground, "no foreground pixels");
  MatX<S> diff = (pred - gt).array() * mask.array();
  if (d) *d = diff.array().sign() / count;
  return diff.array().abs().sum() / count;
}

template <typename S>
inline S bce_term(S p, S y) {
  S pc = std::clamp(p, static_cast<S>(kBceClamp), S(1) - static_cast<S>(kBceClamp));
  return -(y * std::log(pc) + (S(1) - y) * std::log(S(1) - pc));
}

template <typename S>
inline S bce_grad(S p, S y) {
  if (p <= static_cast<S>(kBceClamp) || p >= S(1) - static_cast<S>(kBceClamp)) return S(0);
  return (p - y) / (p * (S(1) - p));
}

/// BCE averaged separately over positive and negative ground-truth pixels
/// (0.5 weight each); a side with zero pixels contributes 0.
/// `d` is accumulated, not overwritten, so the bbox term of the part loss can
/// reuse it on a sub-block.
template <typename S>
S separated_bce(const MatX<S>& pred, const MatX<S>& gt, MatX<S>* d) {
  S n_pos = S(0), n_neg = S(0);
  for (int c = 0; c < gt.cols(); ++c)
    for (int r = 0; r < gt.rows(); ++r) (gt(r, c) > S(0.5) ? n_pos : n_neg) += S(1);
  S loss = S(0);
  for (int c = 0; c < gt.cols(); ++c)
    for (int r = 0; r < gt.rows(); ++r) {
      bool pos = gt(r, c) > S(0.5);
      S n = pos ? n_pos : n_neg;
      if (n <= S(0)) continue;
      S w = S(0.5) / n;
      loss += w * bce_term(pred(r, c), gt(r, c));
      if (d) (*d)(r, c) += w * bce_grad(pred(r, c), gt(r, c));
    }
  return loss;
}

struct BBox {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive; empty when x1 < x0
  bool empty() const { return x1 < x0 || y1 < y0; }
};

template <typename S>
BBox mask_bbox(const MatX<S>& mask, int pad, int W, int H) {
  BBox b{W, H, -1, -1};
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      if (mask(y, x) > S(0.5)) {
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
      }
  if (b.empty()) return b;
  b.x0 = std::max(0, b.x0 - pad);
  b.y0 = std::max(0, b.y0 - pad);
  b.x1 = std::min(W - 1, b.x1 + pad);
  b.y1 = std::min(H - 1, b.y1 + pad);
  return b;
}

/// Full-image separated BCE plus a second separated BCE over the padded
/// ground-truth part bounding box (zero when the part is absent).
template <typename S>
S part_loss(const MatX<S>& pred, const MatX<S>& gt, MatX<S>* d) {
  S loss = separated_bce(pred, gt, d);
  BBox b = mask_bbox(gt, 4, static_cast<int>(gt.cols()), static_cast<int>(gt.rows()));
  if (!b.empty()) {
    int h = b.y1 - b.y0 + 1, w = b.x1 - b.x0 + 1;
    MatX<S> pred_crop = pred.block(b.y0, b.x0, h, w);
    MatX<S> gt_crop = gt.block(b.y0, b.x0, h, w);
    if (d) {
      MatX<S> d_crop = MatX<S>::Zero(h, w);
      loss += separated_bce(pred_crop, gt_crop, &d_crop);
      d->block(b.y0, b.x0, h, w) += d_crop;
    } else {
      loss += separated_bce<S>(pred_crop, gt_crop, nullptr);
    }
  }
  return loss;
}

template <typename S>
MatX<S> plane_from_image(const Image<float>& img, int channel = 0) {
  MatX<S> plane(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) plane(y, x) = static_cast<S>(img.at(x, y, channel));
  return plane;
}

template <typename S>
MatX<S> plane_from_mask(const Image<uint8_t>& img) {
  MatX<S> plane(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) plane(y, x) = img.at(x, y) ? S(1) : S(0);
  return plane;
}

}  // namespace loss_detail

// Spec-surface loss functions on images (see tests for the exact contracts).
double loss_rgb(const Image<float>& pred, const Image<float>& gt,
                double lambda_perceptual = 0.1, const PerceptualHook& hook = {});
double loss_depth(const Image<float>& pred, const Image<float>& gt,
                  const Image<uint8_t>& fg_mask);
double loss_mask_separated(const Image<float>& pred_prob, const Image<uint8_t>& gt_mask);
double loss_part(const Image<float>& pred_prob, const Image<uint8_t>& gt_part_mask);

// ---------------------------------------------------------------------------
// Full differentiable pipeline
// ---------------------------------------------------------------------------

/// Runs tokenize -> transformer -> decode on one sample, evaluates the
/// composite loss (RGB on the target view; auxiliary terms averaged over the
/// target and all input views in the finetune stage) and, when `grads` is
/// non-null, accumulates exact reverse-mode parameter gradients.
template <typename S>
LossBreakdown compute_loss_and_grads(const ModelParamsT<S>& params, const TrainSample& sample,
                                     const LossWeights& weights, TrainStage stage,
                                     NamedTensors<S>* grads,
                                     const PerceptualHook& hook = {});

template <typename S>
struct AdamState {
  NamedTensors<S> m, v;
  int step = 0;

  static AdamState init(const ModelParamsT<S>& params) {
    return AdamState{params.t.zeros_like(), params.t.zeros_like(), 0};
  }
};

double lr_at_step(const TrainConfig& cfg, int step);

/// One AdamW step on the averaged batch gradient. Throws NonFiniteGradient.
template <typename S>
LossBreakdown train_step(ModelParamsT<S>& params, const std::vector<TrainSample>& batch,
                         const TrainConfig& cfg, AdamState<S>& state);

/// Compares analytic gradients against central finite differences on
/// `n_coords` randomly sampled parameter coordinates (float64 accumulation);
/// returns the max relative error. `corrupt_factor` != 1 scales the analytic
/// gradient, as a negative control.
double grad_check(const ModelParamsT<double>& params, const TrainSample& sample,
                  const LossWeights& weights, TrainStage stage, double epsilon,
                  int n_coords = 200, uint64_t seed = 0, double corrupt_factor = 1.0);

// ---------------------------------------------------------------------------
// Dataset-backed training loop
// ---------------------------------------------------------------------------

struct SceneJointGroup {
  int scene_id = 0;
  int joint_id = 0;
  std::vector<SampleFrame> inputs;   // 2N conditioning frames
  std::vector<SampleFrame> targets;  // novel pose/state frames
};

std::vector<SceneJointGroup> load_training_groups(const DatasetIndex& index, const fs::path& root,
                                                  const std::string& split = "");

/// Full loop: samples (group, target) pairs, logs a CSV
/// `step,loss,loss_rgb,loss_d,loss_mf,loss_mp`, writes the final checkpoint.
ModelParams run_training(const std::vector<SceneJointGroup>& groups, const ModelConfig& model_cfg,
                         const TrainConfig& cfg, const ModelParams* warm_start,
                         const fs::path& log_csv, const fs::path& checkpoint,
                         const std::function<void(int, const LossBreakdown&)>& progress = {});

// template implementations ---------------------------------------------------

namespace train_detail {

template <typename S>
struct ViewDecode {
  DecodeCache<S> cache;
  MatX<S> out;       // n_patches x p^2 c, sigmoid outputs
  MatX<S> d_out;     // accumulated gradient
  const SampleFrame* gt = nullptr;
};

}  // namespace train_detail

template <typename S>
LossBreakdown compute_loss_and_grads(const ModelParamsT<S>& params, const TrainSample& sample,
                                     const LossWeights& weights, TrainStage stage,
                                     NamedTensors<S>* grads, const PerceptualHook& hook) {
  using namespace loss_detail;
  const ModelConfig& cfg = params.cfg;
  cfg.validate();
  if (stage == TrainStage::Finetune && cfg.channels != 6)
    throw Error(ErrorCode::ConfigMismatch, "finetune stage requires 6 output channels");
  if (stage == TrainStage::Finetune &&
      (sample.target.fg_mask.empty() || sample.target.depth.empty()))
    throw Error(ErrorCode::MissingAuxiliaryGT, "finetune requires depth and mask ground truth");

  std::vector<int> order = input_view_order(sample.inputs, cfg.views_per_state);
  const int n_views = static_cast<int>(order.size());
  const int tpv = cfg.patches_per_view();
  const int p = cfg.patch_size;
  const S hw = static_cast<S>(cfg.image_h) * cfg.image_w;

  // tokenize
  std::vector<MatX<S>> raws(n_views);
  MatX<S> tokens(cfg.input_tokens() + cfg.target_tokens(), cfg.dim);
  for (int i = 0; i < n_views; ++i) {
    const SampleFrame& f = sample.inputs[order[i]];
    PluckerMap plucker = compute_plucker_map(f.intr, f.pose);
    raws[i] = input_token_raw<S>(f.rgb, plucker, f.theta, cfg);
    tokens.middleRows(i * tpv, tpv) =
        (raws[i] * params.t.at("input_proj.w")).rowwise() +
        params.t.at("input_proj.b").col(0).transpose();
  }
  PluckerMap target_plucker = compute_plucker_map(sample.target.intr, sample.target.pose);
  MatX<S> target_raw = target_token_raw<S>(target_plucker, sample.target.theta, cfg);
  tokens.bottomRows(tpv) = (target_raw * params.t.at("target_proj.w")).rowwise() +
                           params.t.at("target_proj.b").col(0).transpose();

  // forward
  ForwardCache<S> fwd;
  MatX<S> out_tokens = transformer_forward(tokens, params, grads ? &fwd : nullptr);

  // decode: target always; input views only when their outputs are supervised
  const bool aux = stage == TrainStage::Finetune;
  std::vector<train_detail::ViewDecode<S>> views(aux ? n_views + 1 : 1);
  views[0].gt = &sample.target;
  MatX<S> target_out_rows = out_tokens.bottomRows(tpv);
  views[0].out = decode_tokens(target_out_rows, params, grads ? &views[0].cache : nullptr);
  views[0].d_out = MatX<S>::Zero(tpv, cfg.head_width());
  if (aux)
    for (int i = 0; i < n_views; ++i) {
      views[i + 1].gt = &sample.inputs[order[i]];
      MatX<S> view_rows = out_tokens.middleRows(i * tpv, tpv);
      views[i + 1].out =
          decode_tokens(view_rows, params, grads ? &views[i + 1].cache : nullptr);
      views[i + 1].d_out = MatX<S>::Zero(tpv, cfg.head_width());
    }

  LossBreakdown losses;

  // L_RGB on the target view
  {
    auto& v = views[0];
    for (int c = 0; c < 3; ++c) {
      MatX<S> pred = plane_from_rows(v.out, c, cfg.image_h, cfg.image_w, p);
      MatX<S> gt = plane_from_image<S>(v.gt->rgb, c);
      MatX<S> d;
      losses.rgb += mse(pred, gt, grads ? &d : nullptr, S(3) * hw);
      if (grads) rows_add_plane(v.d_out, c, d, p);
    }
    if (hook) {
      Image<float> pred_img(cfg.image_w, cfg.image_h, 3);
      for (int c = 0; c < 3; ++c) {
        MatX<S> plane = plane_from_rows(v.out, c, cfg.image_h, cfg.image_w, p);
        for (int y = 0; y < cfg.image_h; ++y)
          for (int x = 0; x < cfg.image_w; ++x)
            pred_img.at(x, y, c) = static_cast<float>(plane(y, x));
      }
      Image<float> hg(cfg.image_w, cfg.image_h, 3, 0.0f);
      losses.rgb += weights.perceptual * hook(pred_img, v.gt->rgb, grads ? &hg : nullptr);
      if (grads)
        for (int c = 0; c < 3; ++c) {
          MatX<S> d = weights.perceptual * plane_from_image<S>(hg, c);
          rows_add_plane(v.d_out, c, d, p);
        }
    }
  }

  // auxiliary terms, averaged over target + input views
  if (aux) {
    const S inv_views = S(1) / static_cast<S>(views.size());
    const S depth_range = static_cast<S>(kDepthFar - kDepthNear);
    for (auto& v : views) {
      if (v.gt->fg_mask.empty() || v.gt->part_mask.empty() || v.gt->depth.empty())
        throw Error(ErrorCode::MissingAuxiliaryGT, "a view lacks auxiliary ground truth");
      MatX<S> fg = plane_from_mask<S>(v.gt->fg_mask);
      // depth: sigmoid output mapped onto [near, far]
      {
        MatX<S> sig = plane_from_rows(v.out, 3, cfg.image_h, cfg.image_w, p);
        MatX<S> mapped = (sig.array() * depth_range + static_cast<S>(kDepthNear)).matrix();
        MatX<S> gt = plane_from_image<S>(v.gt->depth);
        MatX<S> d;
        losses.depth += inv_views * l1_masked(mapped, gt, fg, grads ? &d : nullptr);
        if (grads) {
          // lambda weights are folded into the gradients here so that the
          // accumulated gradient matches the weighted total
          MatX<S> d_sig = (inv_views * depth_range * static_cast<S>(weights.depth)) * d;
          rows_add_plane(v.d_out, 3, d_sig, p);
        }
      }
      // foreground mask
      {
        MatX<S> pred = plane_from_rows(v.out, 4, cfg.image_h, cfg.image_w, p);
        MatX<S> d = MatX<S>::Zero(cfg.image_h, cfg.image_w);
        losses.fg += inv_views * separated_bce(pred, fg, grads ? &d : nullptr);
        if (grads) {
          d *= inv_views * static_cast<S>(weights.fg);
          rows_add_plane(v.d_out, 4, d, p);
        }
      }
      // part mask
      {
        MatX<S> pred = plane_from_rows(v.out, 5, cfg.image_h, cfg.image_w, p);
        MatX<S> gt = plane_from_mask<S>(v.gt->part_mask);
        MatX<S> d = MatX<S>::Zero(cfg.image_h, cfg.image_w);
        losses.part += inv_views * part_loss(pred, gt, grads ? &d : nullptr);
        if (grads) {
          d *= inv_views * static_cast<S>(weights.part);
          rows_add_plane(v.d_out, 5, d, p);
        }
      }
    }
  }

  losses.total = losses.rgb + weights.depth * losses.depth + weights.fg * losses.fg +
                 weights.part * losses.part;

  if (grads) {
    MatX<S> d_tokens_out = MatX<S>::Zero(tokens.rows(), cfg.dim);
    {
      MatX<S> d_rows = views[0].d_out;
      d_tokens_out.bottomRows(tpv) += decode_backward(views[0].cache, d_rows, params, *grads);
    }
    if (aux)
      for (int i = 0; i < n_views; ++i) {
        // scale aux grads by their lambda weights
        auto& v = views[i + 1];
        d_tokens_out.middleRows(i * tpv, tpv) +=
            decode_backward(v.cache, v.d_out, params, *grads);
      }
    MatX<S> d_tokens_in = transformer_backward(fwd, d_tokens_out, params, *grads);
    for (int i = 0; i < n_views; ++i) {
      auto d_block = d_tokens_in.middleRows(i * tpv, tpv);
      (*grads)["input_proj.w"] += raws[i].transpose() * d_block;
      (*grads)["input_proj.b"].col(0) += d_block.colwise().sum().transpose();
    }
    auto d_target = d_tokens_in.bottomRows(tpv);
    (*grads)["target_proj.w"] += target_raw.transpose() * d_target;
    (*grads)["target_proj.b"].col(0) += d_target.colwise().sum().transpose();
  }
  return losses;
}

template <typename S>
LossBreakdown train_step(ModelParamsT<S>& params, const std::vector<TrainSample>& batch,
                         const TrainConfig& cfg, AdamState<S>& state) {
  if (batch.empty()) throw Error(ErrorCode::InvalidArgument, "empty batch");
  NamedTensors<S> grads = params.t.zeros_like();
  LossBreakdown avg;
  for (const auto& sample : batch) {
    NamedTensors<S> g = params.t.zeros_like();
    LossBreakdown l =
        compute_loss_and_grads(params, sample, cfg.weights, cfg.stage, &g, cfg.perceptual);
    for (size_t i = 0; i < grads.count(); ++i) grads.tensors[i] += g.tensors[i];
    avg.total += l.total;
    avg.rgb += l.rgb;
    avg.depth += l.depth;
    avg.fg += l.fg;
    avg.part += l.part;
  }
  const S inv_b = S(1) / static_cast<S>(batch.size());
  for (auto& g : grads.tensors) g *= inv_b;
  avg.total *= inv_b;
  avg.rgb *= inv_b;
  avg.depth *= inv_b;
  avg.fg *= inv_b;
  avg.part *= inv_b;

  if (!grads.all_finite())
    throw Error(ErrorCode::NonFiniteGradient, "gradient diverged");

  const double lr = lr_at_step(cfg, state.step);
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, state.step);
  const double bc2 = 1.0 - std::pow(cfg.beta2, state.step);
  for (size_t i = 0; i < params.t.count(); ++i) {
    MatX<S>& theta = params.t.tensors[i];
    MatX<S>& m = state.m.tensors[i];
    MatX<S>& v = state.v.tensors[i];
    const MatX<S>& g = grads.tensors[i];
    m = static_cast<S>(cfg.beta1) * m + static_cast<S>(1 - cfg.beta1) * g;
    v = static_cast<S>(cfg.beta2) * v.array().matrix() +
        static_cast<S>(1 - cfg.beta2) * g.array().square().matrix();
    auto m_hat = m.array() / static_cast<S>(bc1);
    auto v_hat = v.array() / static_cast<S>(bc2);
    theta.array() -= static_cast<S>(lr) * (m_hat / (v_hat.sqrt() + S(1e-8)));
    bool is_weight_matrix = theta.rows() > 1 && theta.cols() > 1;
    if (is_weight_matrix && cfg.weight_decay > 0)
      theta.array() -= static_cast<S>(lr * cfg.weight_decay) * theta.array();
  }
  return avg;
}

}  // namespace larm
