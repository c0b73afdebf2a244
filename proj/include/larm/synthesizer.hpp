#pragma once

#include "larm/model.hpp"
#include "larm/synth_world.hpp"

namespace larm {

/// Source of novel views at arbitrary camera / joint state. The downstream
/// joint-estimation and reconstruction stages only see this interface, so the
/// learned model and the ground-truth renderer are interchangeable.
class ViewSynthesizer {
 public:
  virtual ~ViewSynthesizer() = default;
  virtual Prediction synthesize(const CameraIntrinsics& intr, const CameraPose& pose,
                                double theta) const = 0;
};

/// Renders the ground-truth scene; used for oracle checks and as the upper
/// bound of the pipeline.
class OracleSynthesizer : public ViewSynthesizer {
 public:
  OracleSynthesizer(const ArticulatedScene& scene, int joint_id = 0)
      : scene_(&scene), joint_id_(joint_id) {}

  Prediction synthesize(const CameraIntrinsics& intr, const CameraPose& pose,
                        double theta) const override {
    SampleFrame f = rasterize(*scene_, intr, pose, theta, joint_id_);
    return Prediction::from_frame(f);
  }

 private:
  const ArticulatedScene* scene_;
  int joint_id_;
};

/// Runs the trained network conditioned on a fixed set of 2N input frames.
class ModelSynthesizer : public ViewSynthesizer {
 public:
  ModelSynthesizer(const ModelParams& params, std::vector<SampleFrame> inputs)
      : params_(&params), inputs_(std::move(inputs)) {}

  Prediction synthesize(const CameraIntrinsics& intr, const CameraPose& pose,
                        double theta) const override {
    return infer(inputs_, intr, pose, theta, *params_);
  }

 private:
  const ModelParams* params_;
  std::vector<SampleFrame> inputs_;
};

}  // namespace larm
