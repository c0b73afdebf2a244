#include "larm/training.hpp"

#include <fstream>

namespace larm {

using loss_detail::plane_from_image;
using loss_detail::plane_from_mask;

double loss_rgb(const Image<float>& pred, const Image<float>& gt, double lambda_perceptual,
                const PerceptualHook& hook) {
  if (!pred.same_shape(gt) || pred.channels != 3)
    throw Error(ErrorCode::ShapeMismatch, "rgb loss needs matching 3-channel images");
  double total = 0.0;
  const double n = 3.0 * pred.width * pred.height;
  for (int c = 0; c < 3; ++c) {
    MatX<double> p = plane_from_image<double>(pred, c);
    MatX<double> g = plane_from_image<double>(gt, c);
    total += loss_detail::mse<double>(p, g, nullptr, n);
  }
  if (hook) total += lambda_perceptual * hook(pred, gt, nullptr);
  return total;
}

double loss_depth(const Image<float>& pred, const Image<float>& gt,
                  const Image<uint8_t>& fg_mask) {
  if (pred.width != gt.width || pred.height != gt.height || fg_mask.width != gt.width ||
      fg_mask.height != gt.height)
    throw Error(ErrorCode::ShapeMismatch, "depth loss plane size mismatch");
  return loss_detail::l1_masked<double>(plane_from_image<double>(pred),
                                        plane_from_image<double>(gt),
                                        plane_from_mask<double>(fg_mask), nullptr);
}

double loss_mask_separated(const Image<float>& pred_prob, const Image<uint8_t>& gt_mask) {
  if (pred_prob.width != gt_mask.width || pred_prob.height != gt_mask.height)
    throw Error(ErrorCode::ShapeMismatch, "mask loss plane size mismatch");
  return loss_detail::separated_bce<double>(plane_from_image<double>(pred_prob),
                                            plane_from_mask<double>(gt_mask), nullptr);
}

double loss_part(const Image<float>& pred_prob, const Image<uint8_t>& gt_part_mask) {
  if (pred_prob.width != gt_part_mask.width || pred_prob.height != gt_part_mask.height)
    throw Error(ErrorCode::ShapeMismatch, "part loss plane size mismatch");
  return loss_detail::part_loss<double>(plane_from_image<double>(pred_prob),
                                        plane_from_mask<double>(gt_part_mask), nullptr);
}

double lr_at_step(const TrainConfig& cfg, int step) {
  const int warmup = std::max(1, static_cast<int>(cfg.steps * cfg.warmup_frac));
  if (step < warmup) return cfg.learning_rate * (step + 1) / static_cast<double>(warmup);
  double progress = (step - warmup) / std::max(1.0, static_cast<double>(cfg.steps - warmup));
  progress = std::min(1.0, progress);
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(M_PI * progress));
}

double grad_check(const ModelParamsT<double>& params, const TrainSample& sample,
                  const LossWeights& weights, TrainStage stage, double epsilon, int n_coords,
                  uint64_t seed, double corrupt_factor) {
  NamedTensors<double> grads = params.t.zeros_like();
  compute_loss_and_grads(params, sample, weights, stage, &grads);
  if (corrupt_factor != 1.0)
    for (auto& g : grads.tensors) g *= corrupt_factor;

  // size-weighted coordinate sampling
  std::vector<size_t> cum;
  size_t total = 0;
  for (const auto& t : params.t.tensors) {
    total += t.size();
    cum.push_back(total);
  }
  Rng rng(seed ^ 0x51ce956be8e3d3a1ull);
  double max_rel = 0.0;
  ModelParamsT<double> perturbed = params;
  for (int i = 0; i < n_coords; ++i) {
    size_t flat = rng.below(total);
    size_t ti = std::lower_bound(cum.begin(), cum.end(), flat + 1) - cum.begin();
    size_t off = flat - (ti == 0 ? 0 : cum[ti - 1]);
    double* coeff = perturbed.t.tensors[ti].data() + off;
    double orig = *coeff;

    auto loss_at = [&](double v) {
      *coeff = v;
      return compute_loss_and_grads<double>(perturbed, sample, weights, stage, nullptr).total;
    };
    // fourth-order central difference; the plain two-point stencil leaves
    // O(eps^2) truncation error above the comparison tolerance
    double fd = (loss_at(orig - 2 * epsilon) - 8.0 * loss_at(orig - epsilon) +
                 8.0 * loss_at(orig + epsilon) - loss_at(orig + 2 * epsilon)) /
                (12.0 * epsilon);
    *coeff = orig;

    double an = grads.tensors[ti].data()[off];
    double rel = std::abs(an - fd) / std::max(1e-8, std::abs(an) + std::abs(fd));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

std::vector<SceneJointGroup> load_training_groups(const DatasetIndex& index, const fs::path& root,
                                                  const std::string& split) {
  std::vector<SceneJointGroup> groups;
  std::unordered_map<int64_t, size_t> slot;
  for (const auto& rec : index.records) {
    if (!split.empty() && rec.split != split) continue;
    int64_t key = static_cast<int64_t>(rec.scene_id) * 1000 + rec.joint_id;
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, groups.size()).first;
      groups.push_back(SceneJointGroup{rec.scene_id, rec.joint_id, {}, {}});
    }
    SceneJointGroup& g = groups[it->second];
    SampleFrame frame = read_sample(root / rec.stem);
    (rec.is_input ? g.inputs : g.targets).push_back(std::move(frame));
  }
  if (groups.empty()) throw Error(ErrorCode::EmptySplit, "no frames match the requested split");
  return groups;
}

ModelParams run_training(const std::vector<SceneJointGroup>& groups, const ModelConfig& model_cfg,
                         const TrainConfig& cfg, const ModelParams* warm_start,
                         const fs::path& log_csv, const fs::path& checkpoint,
                         const std::function<void(int, const LossBreakdown&)>& progress) {
  std::vector<const SceneJointGroup*> usable;
  for (const auto& g : groups)
    if (!g.targets.empty()) usable.push_back(&g);
  if (usable.empty()) throw Error(ErrorCode::EmptySplit, "no groups with target frames");

  ModelParams params =
      warm_start ? *warm_start : ModelParams::init(model_cfg, cfg.seed ^ 0xabcdef1234567890ull);
  if (!(params.cfg == model_cfg))
    throw Error(ErrorCode::ConfigMismatch, "warm start config does not match");
  AdamState<float> adam = AdamState<float>::init(params);
  Rng rng(cfg.seed ^ 0x7a1b5d4e9f0c2311ull);

  std::ofstream log;
  if (!log_csv.empty()) {
    fs::create_directories(log_csv.parent_path().empty() ? "." : log_csv.parent_path());
    log.open(log_csv);
    log << "step,loss,loss_rgb,loss_d,loss_mf,loss_mp\n";
  }

  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<TrainSample> batch;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const SceneJointGroup& g = *usable[rng.below(usable.size())];
      TrainSample s;
      s.inputs = g.inputs;
      s.target = g.targets[rng.below(g.targets.size())];
      batch.push_back(std::move(s));
    }
    LossBreakdown l = train_step(params, batch, cfg, adam);
    if (log.is_open())
      log << step << ',' << l.total << ',' << l.rgb << ',' << l.depth << ',' << l.fg << ','
          << l.part << '\n';
    if (progress) progress(step, l);
    if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 &&
        !checkpoint.empty())
      save_params(params, checkpoint);
  }
  if (!checkpoint.empty()) save_params(params, checkpoint);
  return params;
}

}  // namespace larm
