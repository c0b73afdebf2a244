#pragma once

#include "larm/core.hpp"
#include "larm/geometry.hpp"

namespace larm {

/// The universal per-view record: rendered or predicted RGB-D with masks.
/// depth uses sentinel 0 for background; invariants: part_mask ⊆ fg_mask and
/// depth > 0 exactly where fg_mask is set.
struct SampleFrame {
  Image<float> rgb;          // H x W x 3 in [0, 1]
  Image<float> depth;        // H x W, normalized world units
  Image<uint8_t> fg_mask;    // H x W binary
  Image<uint8_t> part_mask;  // H x W binary, the designated target joint's part
  CameraIntrinsics intr;
  CameraPose pose;
  double theta = 0.0;
  int joint_id = 0;

  void validate() const {
    if (!rgb.same_shape(Image<float>(rgb.width, rgb.height, 3)) ||
        depth.width != rgb.width || depth.height != rgb.height ||
        fg_mask.width != rgb.width || fg_mask.height != rgb.height ||
        part_mask.width != rgb.width || part_mask.height != rgb.height)
      throw Error(ErrorCode::ShapeMismatch, "inconsistent frame plane sizes");
    for (int y = 0; y < rgb.height; ++y)
      for (int x = 0; x < rgb.width; ++x) {
        if (part_mask.at(x, y) && !fg_mask.at(x, y))
          throw Error(ErrorCode::InvalidArgument, "part mask escapes foreground mask");
        if ((depth.at(x, y) > 0) != (fg_mask.at(x, y) != 0))
          throw Error(ErrorCode::InvalidArgument, "depth/foreground support mismatch");
      }
  }
};

/// Continuous network outputs for one view, before mask thresholding.
struct Prediction {
  Image<float> rgb;        // H x W x 3
  Image<float> depth;      // H x W, already mapped to [near, far]
  Image<float> fg_prob;    // H x W in (0, 1)
  Image<float> part_prob;  // H x W in (0, 1)
  CameraIntrinsics intr;
  CameraPose pose;
  double theta = 0.0;

  Image<uint8_t> fg_mask(float threshold = 0.5f) const {
    Image<uint8_t> m(fg_prob.width, fg_prob.height, 1);
    for (size_t i = 0; i < m.data.size(); ++i) m.data[i] = fg_prob.data[i] >= threshold;
    return m;
  }
  Image<uint8_t> part_mask(float threshold = 0.5f) const {
    Image<uint8_t> m(part_prob.width, part_prob.height, 1);
    for (size_t i = 0; i < m.data.size(); ++i)
      m.data[i] = part_prob.data[i] >= threshold && fg_prob.data[i] >= threshold;
    return m;
  }

  static Prediction from_frame(const SampleFrame& f);
  SampleFrame to_frame(int joint_id = 0, float threshold = 0.5f) const;
};

}  // namespace larm
