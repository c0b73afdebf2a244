#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "larm/dataset_io.hpp"
#include "larm/joint_estimation.hpp"
#include "larm/metrics.hpp"
#include "larm/recon.hpp"
#include "larm/training.hpp"

namespace {

using json = nlohmann::json;
using namespace larm;

/// --config <json> provides defaults; explicit flags win. Implemented by
/// expanding the file into synthetic tokens placed before the user's own.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string cfg_path;
  std::vector<std::string> rest;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ValidationError("--config needs a file argument");
      cfg_path = args[++i];
    } else {
      rest.push_back(args[i]);
    }
  }
  if (cfg_path.empty()) return rest;
  std::ifstream in(cfg_path);
  if (!in) throw CLI::ValidationError("cannot open config file " + cfg_path);
  json j = json::parse(in);

  std::vector<std::string> out;
  size_t insert_at = 0;
  if (!rest.empty() && !rest[0].empty() && rest[0][0] != '-') {
    out.push_back(rest[0]);  // subcommand stays first
    insert_at = 1;
  }
  for (auto& [key, value] : j.items()) {
    out.push_back("--" + key);
    if (value.is_boolean()) {
      if (!value.get<bool>()) out.pop_back();
    } else if (value.is_string()) {
      out.push_back(value.get<std::string>());
    } else {
      out.push_back(value.dump());
    }
  }
  out.insert(out.end(), rest.begin() + insert_at, rest.end());
  return out;
}

void echo_config(const fs::path& out_dir, const std::string& command, const json& effective) {
  fs::create_directories(out_dir);
  json j;
  j["command"] = command;
  j["config"] = effective;
  std::ofstream out(out_dir / "config.json");
  out << j.dump(2) << '\n';
}

ArticulatedScene scene_from_index(const DatasetIndex& index, int scene_id) {
  for (const auto& meta : index.scenes)
    if (meta.scene_id == scene_id) return meta.rebuild();
  throw Error(ErrorCode::InvalidArgument, "scene " + std::to_string(scene_id) + " not in index");
}

const SceneMeta& meta_from_index(const DatasetIndex& index, int scene_id) {
  for (const auto& meta : index.scenes)
    if (meta.scene_id == scene_id) return meta;
  throw Error(ErrorCode::InvalidArgument, "scene " + std::to_string(scene_id) + " not in index");
}

std::vector<SampleFrame> load_inputs(const DatasetIndex& index, const fs::path& root,
                                     int scene_id, int joint_id) {
  std::vector<SampleFrame> inputs;
  for (const auto& rec : index.records)
    if (rec.scene_id == scene_id && rec.joint_id == joint_id && rec.is_input)
      inputs.push_back(read_sample(root / rec.stem));
  if (inputs.empty())
    throw Error(ErrorCode::EmptySplit, "no input views for the requested scene/joint");
  return inputs;
}

struct CommonArgs {
  uint64_t seed = 0;
  std::string out = "out";
};

void add_common(CLI::App* cmd, CommonArgs& c) {
  cmd->add_option("--seed", c.seed, "master random seed");
  cmd->add_option("--out", c.out, "output directory");
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"articulated-object view synthesis, joint estimation and reconstruction"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // gen-data ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "render a procedural dataset");
  CommonArgs gen_c;
  add_common(gen, gen_c);
  DatasetSpec dspec;
  std::string families = "door,drawer,lid";
  std::string split_spec;
  gen->add_option("--scenes", dspec.n_scenes, "number of scenes");
  gen->add_option("--views-per-state", dspec.views_per_state, "input views per joint state");
  gen->add_option("--targets", dspec.n_targets, "extra random-pose target frames per joint");
  gen->add_option("--resolution", dspec.resolution, "image resolution");
  gen->add_option("--variants", dspec.variants_per_scene, "augmented variants per scene");
  gen->add_option("--families", families, "comma-separated scene families");
  gen->add_option("--split", split_spec, "fractions like 0.8,0.1,0.1 for train,val,test");

  // pretrain / finetune -------------------------------------------------------
  auto add_train = [&](const char* name, const char* desc) {
    return app.add_subcommand(name, desc);
  };
  auto* pre = add_train("pretrain", "train the rgb-only synthesis model");
  auto* fin = add_train("finetune", "train the full rgb+depth+mask model");
  struct TrainArgs {
    CommonArgs c;
    std::string data;
    std::string split = "";
    std::string init;
    ModelConfig model;
    int steps = 1000;
    int batch = 1;
    double lr = 3e-4;
  };
  TrainArgs pre_a, fin_a;
  for (auto [cmd, a] : {std::pair{pre, &pre_a}, std::pair{fin, &fin_a}}) {
    add_common(cmd, a->c);
    cmd->add_option("--data", a->data, "dataset directory")->required();
    cmd->add_option("--split", a->split, "restrict to a split name");
    cmd->add_option("--steps", a->steps, "optimization steps");
    cmd->add_option("--batch", a->batch, "batch size");
    cmd->add_option("--lr", a->lr, "peak learning rate");
    cmd->add_option("--dim", a->model.dim, "token width");
    cmd->add_option("--layers", a->model.layers, "transformer depth");
    cmd->add_option("--heads", a->model.heads, "attention heads");
    cmd->add_option("--patch", a->model.patch_size, "patch size");
    cmd->add_option("--views-per-state", a->model.views_per_state, "N input views per state");
    cmd->add_option("--resolution", a->model.image_h, "image resolution");
  }
  fin->add_option("--init", fin_a.init, "pretrained checkpoint to warm start from");

  // infer ---------------------------------------------------------------------
  auto* inf = app.add_subcommand("infer", "predict novel views");
  CommonArgs inf_c;
  add_common(inf, inf_c);
  std::string inf_ckpt, inf_data;
  int inf_scene = 0, inf_joint = 0, inf_views = 1;
  double inf_theta = 0.5;
  inf->add_option("--ckpt", inf_ckpt, "model checkpoint")->required();
  inf->add_option("--data", inf_data, "dataset directory")->required();
  inf->add_option("--scene", inf_scene, "scene id");
  inf->add_option("--joint", inf_joint, "joint id");
  inf->add_option("--theta", inf_theta, "target joint state");
  inf->add_option("--views", inf_views, "number of target views");

  // estimate-joint --------------------------------------------------------------
  auto* est = app.add_subcommand("estimate-joint", "recover joint parameters");
  CommonArgs est_c;
  add_common(est, est_c);
  std::string est_ckpt, est_data, est_kind = "revolute", est_matches;
  int est_scene = 0, est_joint = 0, est_states = 5, est_poses = 4;
  est->add_option("--data", est_data, "dataset directory")->required();
  est->add_option("--scene", est_scene, "scene id");
  est->add_option("--joint", est_joint, "joint id");
  est->add_option("--kind", est_kind, "revolute | prismatic | gt");
  est->add_option("--ckpt", est_ckpt, "model checkpoint (omit to use the reference renderer)");
  est->add_option("--matches", est_matches, "precomputed correspondence JSON");
  est->add_option("--states", est_states, "joint states sampled");
  est->add_option("--poses", est_poses, "camera poses sampled");

  // reconstruct -----------------------------------------------------------------
  auto* rec = app.add_subcommand("reconstruct", "fuse views into part meshes");
  CommonArgs rec_c;
  add_common(rec, rec_c);
  std::string rec_ckpt, rec_data, rec_joint_json;
  int rec_scene = 0, rec_joint = 0, rec_views = 64, rec_volume = 128;
  rec->add_option("--data", rec_data, "dataset directory")->required();
  rec->add_option("--scene", rec_scene, "scene id");
  rec->add_option("--joint", rec_joint, "joint id");
  rec->add_option("--ckpt", rec_ckpt, "model checkpoint (omit to use the reference renderer)");
  rec->add_option("--joint-json", rec_joint_json, "fitted joint (estimate-joint output)");
  rec->add_option("--views", rec_views, "number of fused views");
  rec->add_option("--volume", rec_volume, "volume resolution per axis");

  // evaluate ---------------------------------------------------------------------
  auto* eva = app.add_subcommand("evaluate", "score meshes + joint against ground truth");
  CommonArgs eva_c;
  add_common(eva, eva_c);
  std::string eva_data, eva_body, eva_movable, eva_joint_json;
  int eva_scene = 0, eva_joint = 0, eva_states = 5, eva_views = 8;
  bool eva_gt = false;
  eva->add_option("--data", eva_data, "dataset directory")->required();
  eva->add_option("--scene", eva_scene, "scene id");
  eva->add_option("--joint", eva_joint, "joint id");
  eva->add_option("--body", eva_body, "predicted body mesh (PLY)");
  eva->add_option("--movable", eva_movable, "predicted movable mesh (PLY)");
  eva->add_option("--joint-json", eva_joint_json, "predicted joint JSON");
  eva->add_flag("--gt", eva_gt, "evaluate the ground truth against itself");
  eva->add_option("--states", eva_states, "joint states evaluated");
  eva->add_option("--render-views", eva_views, "render views per state");

  // interp-video -------------------------------------------------------------------
  auto* vid = app.add_subcommand("interp-video", "render a joint-state interpolation");
  CommonArgs vid_c;
  add_common(vid, vid_c);
  std::string vid_ckpt, vid_data;
  int vid_scene = 0, vid_joint = 0, vid_frames = 25, vid_poses = 1;
  vid->add_option("--data", vid_data, "dataset directory")->required();
  vid->add_option("--scene", vid_scene, "scene id");
  vid->add_option("--joint", vid_joint, "joint id");
  vid->add_option("--ckpt", vid_ckpt, "model checkpoint (omit to use the reference renderer)");
  vid->add_option("--frames", vid_frames, "frames per pose");
  vid->add_option("--poses", vid_poses, "camera poses");

  // multi-part -----------------------------------------------------------------------
  auto* multi = app.add_subcommand("multi-part", "multi-joint estimation + reconstruction");
  CommonArgs multi_c;
  add_common(multi, multi_c);
  int multi_parts = 2, multi_views = 48, multi_volume = 96;
  multi->add_option("--parts", multi_parts, "number of movable parts");
  multi->add_option("--views", multi_views, "fused views per volume");
  multi->add_option("--volume", multi_volume, "volume resolution per axis");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints help or the usage error
    return code == 0 ? 0 : 1;
  }

  // ---------------------------------------------------------------------------

  if (gen->parsed()) {
    dspec.seed = gen_c.seed;
    dspec.families.clear();
    std::stringstream ss(families);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) dspec.families.push_back(scene_family_from_string(tok));
    echo_config(gen_c.out, "gen-data",
                {{"seed", gen_c.seed},
                 {"scenes", dspec.n_scenes},
                 {"views_per_state", dspec.views_per_state},
                 {"targets", dspec.n_targets},
                 {"resolution", dspec.resolution},
                 {"variants", dspec.variants_per_scene},
                 {"families", families},
                 {"split", split_spec}});
    DatasetIndex index = make_dataset(dspec, gen_c.out);
    if (!split_spec.empty()) {
      std::vector<double> fracs;
      std::stringstream fs_(split_spec);
      while (std::getline(fs_, tok, ',')) fracs.push_back(std::stod(tok));
      std::vector<std::string> names = {"train", "val", "test"};
      names.resize(fracs.size());
      index = split_dataset(index, fracs, names, gen_c.seed);
      write_index(index, gen_c.out);
    }
    std::cout << "wrote " << index.records.size() << " frames across " << index.scenes.size()
              << " scenes to " << gen_c.out << "\n";
    return 0;
  }

  for (auto [cmd, a, stage] :
       {std::tuple{pre, &pre_a, TrainStage::Pretrain}, std::tuple{fin, &fin_a,
                                                                  TrainStage::Finetune}}) {
    if (!cmd->parsed()) continue;
    a->model.image_w = a->model.image_h;
    a->model.channels = stage == TrainStage::Finetune ? 6 : 3;
    TrainConfig tcfg;
    tcfg.stage = stage;
    tcfg.steps = a->steps;
    tcfg.batch_size = a->batch;
    tcfg.learning_rate = a->lr;
    tcfg.seed = a->c.seed;
    echo_config(a->c.out, cmd->get_name(),
                {{"seed", a->c.seed}, {"data", a->data},     {"split", a->split},
                 {"steps", a->steps}, {"batch", a->batch},   {"lr", a->lr},
                 {"dim", a->model.dim}, {"layers", a->model.layers},
                 {"heads", a->model.heads}, {"patch", a->model.patch_size},
                 {"views_per_state", a->model.views_per_state},
                 {"resolution", a->model.image_h}, {"init", a->init}});
    DatasetIndex index = read_index(a->data);
    std::vector<SceneJointGroup> groups = load_training_groups(index, a->data, a->split);
    ModelParams warm;
    const ModelParams* warm_ptr = nullptr;
    if (!a->init.empty()) {
      ModelConfig pre_cfg = a->model;
      pre_cfg.channels = 3;
      warm = init_finetune_heads(load_params(a->init, pre_cfg), a->model);
      warm_ptr = &warm;
    }
    fs::path out_dir(a->c.out);
    ModelParams params =
        run_training(groups, a->model, tcfg, warm_ptr, out_dir / "loss.csv",
                     out_dir / "model.ckpt", [&](int step, const LossBreakdown& l) {
                       if (step % 100 == 0)
                         std::cout << "step " << step << " loss " << l.total << "\n";
                     });
    std::cout << "checkpoint written to " << (out_dir / "model.ckpt").string() << "\n";
    return 0;
  }

  if (inf->parsed()) {
    echo_config(inf_c.out, "infer",
                {{"seed", inf_c.seed}, {"ckpt", inf_ckpt}, {"data", inf_data},
                 {"scene", inf_scene}, {"joint", inf_joint}, {"theta", inf_theta},
                 {"views", inf_views}});
    DatasetIndex index = read_index(inf_data);
    ModelParams params = load_params(inf_ckpt);
    std::vector<SampleFrame> inputs = load_inputs(index, inf_data, inf_scene, inf_joint);
    CameraIntrinsics intr = default_intrinsics(params.cfg.image_h);
    Rng rng(inf_c.seed ^ 0x1f83d9abfb41bd6bull);
    for (int i = 0; i < inf_views; ++i) {
      Prediction pred = infer(inputs, intr, sample_camera(rng), inf_theta, params);
      char stem[32];
      std::snprintf(stem, sizeof stem, "pred_%04d", i);
      write_sample(pred.to_frame(inf_joint), fs::path(inf_c.out) / stem);
    }
    std::cout << "wrote " << inf_views << " predicted views to " << inf_c.out << "\n";
    return 0;
  }

  if (est->parsed()) {
    echo_config(est_c.out, "estimate-joint",
                {{"seed", est_c.seed}, {"data", est_data}, {"scene", est_scene},
                 {"joint", est_joint}, {"kind", est_kind}, {"ckpt", est_ckpt},
                 {"matches", est_matches}, {"states", est_states}, {"poses", est_poses}});
    DatasetIndex index = read_index(est_data);
    ArticulatedScene scene = scene_from_index(index, est_scene);
    const JointSpec& gt = scene.parts.at(est_joint).joint;
    JointKind kind = est_kind == "gt" ? gt.kind : joint_kind_from_string(est_kind);

    std::unique_ptr<ViewSynthesizer> synth;
    ModelParams params;
    std::vector<SampleFrame> inputs;
    if (est_ckpt.empty()) {
      synth = std::make_unique<OracleSynthesizer>(scene, est_joint);
    } else {
      params = load_params(est_ckpt);
      inputs = load_inputs(index, est_data, est_scene, est_joint);
      synth = std::make_unique<ModelSynthesizer>(params, inputs);
    }
    std::unique_ptr<Matcher> matcher;
    if (est_matches.empty())
      matcher = std::make_unique<OracleMatcher>(gt, 64, est_c.seed);
    else
      matcher = std::make_unique<FileMatcher>(est_matches);

    EstimateConfig ecfg;
    ecfg.n_states = est_states;
    ecfg.n_poses = est_poses;
    ecfg.seed = est_c.seed;
    ecfg.ransac.seed = est_c.seed;
    ecfg.resolution = index.resolution;
    JointFitResult result = estimate_joint(*synth, kind, *matcher, ecfg);
    write_joint_result_json(result, kind, fs::path(est_c.out) / "joint.json");
    std::cout << "joint written to " << (fs::path(est_c.out) / "joint.json").string()
              << " (inliers " << result.inlier_fraction << ", rms " << result.rms << ")\n";
    return 0;
  }

  if (rec->parsed()) {
    echo_config(rec_c.out, "reconstruct",
                {{"seed", rec_c.seed}, {"data", rec_data}, {"scene", rec_scene},
                 {"joint", rec_joint}, {"ckpt", rec_ckpt}, {"joint_json", rec_joint_json},
                 {"views", rec_views}, {"volume", rec_volume}});
    DatasetIndex index = read_index(rec_data);
    ArticulatedScene scene = scene_from_index(index, rec_scene);

    std::unique_ptr<ViewSynthesizer> synth;
    ModelParams params;
    std::vector<SampleFrame> inputs;
    if (rec_ckpt.empty()) {
      synth = std::make_unique<OracleSynthesizer>(scene, rec_joint);
    } else {
      params = load_params(rec_ckpt);
      inputs = load_inputs(index, rec_data, rec_scene, rec_joint);
      synth = std::make_unique<ModelSynthesizer>(params, inputs);
    }
    ReconConfig rcfg;
    rcfg.n_views = rec_views;
    rcfg.volume_resolution = rec_volume;
    rcfg.image_resolution = index.resolution;
    rcfg.seed = rec_c.seed;
    auto [body, movable] = reconstruct(*synth, rcfg);
    fs::path out_dir(rec_c.out);
    write_ply(body, out_dir / "body.ply");
    write_ply(movable, out_dir / "movable.ply");
    JointSpec joint = rec_joint_json.empty() ? scene.parts.at(rec_joint).joint
                                             : read_joint_result_json(rec_joint_json).spec;
    write_articulated_descriptor("body.ply", {{"movable.ply", joint}},
                                 out_dir / "object.json");
    std::cout << "meshes written to " << out_dir.string() << "\n";
    return 0;
  }

  if (eva->parsed()) {
    echo_config(eva_c.out, "evaluate",
                {{"seed", eva_c.seed}, {"data", eva_data}, {"scene", eva_scene},
                 {"joint", eva_joint}, {"body", eva_body}, {"movable", eva_movable},
                 {"joint_json", eva_joint_json}, {"gt", eva_gt},
                 {"states", eva_states}, {"render_views", eva_views}});
    DatasetIndex index = read_index(eva_data);
    ArticulatedScene scene = scene_from_index(index, eva_scene);

    std::pair<PartMesh, PartMesh> pred;
    JointFitResult joint;
    if (eva_gt) {
      pred = scene_part_meshes(scene, eva_joint);
      joint.spec = scene.parts.at(eva_joint).joint;
    } else {
      if (eva_body.empty() || eva_movable.empty() || eva_joint_json.empty())
        throw CLI::ValidationError("--body, --movable and --joint-json are required without --gt");
      pred = {read_ply(eva_body), read_ply(eva_movable)};
      joint = read_joint_result_json(eva_joint_json);
    }
    EvalConfig ecfg;
    ecfg.n_states = eva_states;
    ecfg.n_render_views = eva_views;
    ecfg.render_resolution = index.resolution;
    ecfg.seed = eva_c.seed;
    ObjectReport report = evaluate_object(pred, joint, scene, eva_joint, ecfg);
    write_report_json(report, fs::path(eva_c.out) / "report.json");
    write_report_csv({{std::to_string(eva_scene), report}}, fs::path(eva_c.out) / "report.csv");
    std::cout << "cd " << report.cd << " fscore " << report.fscore << " psnr " << report.psnr
              << " joint_ok " << report.joint.all_ok << "\n";
    return 0;
  }

  if (vid->parsed()) {
    echo_config(vid_c.out, "interp-video",
                {{"seed", vid_c.seed}, {"data", vid_data}, {"scene", vid_scene},
                 {"joint", vid_joint}, {"ckpt", vid_ckpt}, {"frames", vid_frames},
                 {"poses", vid_poses}});
    if (vid_frames < 2) throw CLI::ValidationError("--frames must be at least 2");
    DatasetIndex index = read_index(vid_data);
    ArticulatedScene scene = scene_from_index(index, vid_scene);
    std::unique_ptr<ViewSynthesizer> synth;
    ModelParams params;
    std::vector<SampleFrame> inputs;
    if (vid_ckpt.empty()) {
      synth = std::make_unique<OracleSynthesizer>(scene, vid_joint);
    } else {
      params = load_params(vid_ckpt);
      inputs = load_inputs(index, vid_data, vid_scene, vid_joint);
      synth = std::make_unique<ModelSynthesizer>(params, inputs);
    }
    CameraIntrinsics intr = default_intrinsics(index.resolution);
    Rng rng(vid_c.seed ^ 0x85ebca77c2b2ae63ull);
    json consistency = json::array();
    for (int p = 0; p < vid_poses; ++p) {
      CameraPose pose = sample_camera(rng);
      std::vector<Image<float>> frames;
      for (int f = 0; f < vid_frames; ++f) {
        double theta = f / static_cast<double>(vid_frames - 1);
        Prediction pred = synth->synthesize(intr, pose, theta);
        frames.push_back(pred.rgb);
        char name[48];
        std::snprintf(name, sizeof name, "pose%02d_frame%03d.png", p, f);
        write_png_rgb8(pred.rgb, fs::path(vid_c.out) / name);
      }
      consistency.push_back(temporal_consistency(frames));
    }
    std::ofstream out(fs::path(vid_c.out) / "consistency.json");
    out << json{{"per_pose_mse", consistency}}.dump(2) << '\n';
    std::cout << "wrote " << vid_poses * vid_frames << " frames to " << vid_c.out << "\n";
    return 0;
  }

  if (multi->parsed()) {
    echo_config(multi_c.out, "multi-part",
                {{"seed", multi_c.seed}, {"parts", multi_parts}, {"views", multi_views},
                 {"volume", multi_volume}});
    ArticulatedScene scene = sample_multi_scene(multi_c.seed, multi_parts);
    OracleMultiSynthesizer synth(scene);
    std::vector<JointKind> kinds;
    std::vector<std::unique_ptr<Matcher>> matchers;
    std::vector<const Matcher*> matcher_ptrs;
    for (int k = 0; k < scene.num_joints(); ++k) {
      kinds.push_back(scene.parts[k].joint.kind);
      matchers.push_back(
          std::make_unique<OracleMatcher>(scene.parts[k].joint, 64, multi_c.seed + k));
      matcher_ptrs.push_back(matchers.back().get());
    }
    ReconConfig rcfg;
    rcfg.n_views = multi_views;
    rcfg.volume_resolution = multi_volume;
    rcfg.seed = multi_c.seed;
    EstimateConfig ecfg;
    ecfg.seed = multi_c.seed;
    ecfg.ransac.seed = multi_c.seed;
    MultiPartResult result = multi_part_reconstruct(synth, kinds, matcher_ptrs, rcfg, ecfg);
    fs::path out_dir(multi_c.out);
    write_ply(result.body, out_dir / "body.ply");
    std::vector<ArticulatedPartEntry> entries;
    for (size_t k = 0; k < result.parts.size(); ++k) {
      std::string name = "part" + std::to_string(k) + ".ply";
      write_ply(result.parts[k], out_dir / name);
      entries.push_back({name, result.joints[k].spec});
      write_joint_result_json(result.joints[k], kinds[k],
                              out_dir / ("joint" + std::to_string(k) + ".json"));
    }
    write_articulated_descriptor("body.ply", entries, out_dir / "object.json");
    std::cout << "multi-part artifacts written to " << out_dir.string() << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(expand_config(argc, argv));
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const larm::Error& e) {
    std::cerr << "pipeline error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "pipeline error: " << e.what() << "\n";
    return 2;
  }
}
