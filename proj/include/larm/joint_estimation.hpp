#pragma once

#include <filesystem>
#include <map>
#include <tuple>

#include "larm/synthesizer.hpp"

namespace larm {

namespace fs = std::filesystem;

/// Pixel-level match between two same-pose views at different joint states.
struct Correspondence {
  Vec2 pixel_u = Vec2::Zero();
  Vec2 pixel_v = Vec2::Zero();
  double confidence = 1.0;
};

/// World-space point pair with the joint states it was observed at. States are
/// stored per pair so that pairs pooled across many state combinations can be
/// fit jointly.
struct PointPair {
  Vec3 p_u = Vec3::Zero();
  Vec3 p_v = Vec3::Zero();
  double theta_u = 0.0;
  double theta_v = 1.0;
};

struct PointPairSet {
  std::vector<PointPair> pairs;

  void validate() const {
    for (const auto& pr : pairs) {
      if (pr.theta_u == pr.theta_v)
        throw Error(ErrorCode::InvalidArgument, "point pair with equal states");
      if (!pr.p_u.allFinite() || !pr.p_v.allFinite())
        throw Error(ErrorCode::InvalidArgument, "non-finite point pair");
    }
  }
};

struct JointFitResult {
  JointSpec spec;
  double inlier_fraction = 1.0;
  double rms = 0.0;  // per-pair residual RMS, normalized world units
};

int minimal_sample_size(JointKind kind);  // revolute 3, prismatic 2

/// Keeps matches with confidence >= conf_min whose endpoints lie inside the
/// respective part masks, then greedily (descending confidence) drops matches
/// whose u-pixel is closer than min_px_dist to an already kept one.
/// Throws TooFewMatches when fewer than `min_required` survive.
std::vector<Correspondence> filter_correspondences(const std::vector<Correspondence>& cands,
                                                   const Image<uint8_t>& part_mask_u,
                                                   const Image<uint8_t>& part_mask_v,
                                                   double conf_min = 0.8,
                                                   double min_px_dist = 3.0,
                                                   int min_required = 3);

/// Unprojects both endpoints of each match with its own state's depth map
/// (same camera for both states). Depth is sampled at the nearest pixel.
PointPairSet lift_pairs(const std::vector<Correspondence>& corrs, const Image<float>& depth_u,
                        const Image<float>& depth_v, const CameraIntrinsics& intr,
                        const CameraPose& pose, double theta_u, double theta_v);

/// Sum of squared residuals: sum_i || T_{theta_u->theta_v}(P_u^i) - P_v^i ||^2.
double joint_residual(const PointPairSet& pairs, const JointSpec& spec);

/// Gradient descent with backtracking line search over (axis via 2-dof
/// tangent updates, pivot, scale); stops on relative residual change < 1e-10
/// or 500 iterations. Result is canonicalized (scale >= 0, pivot on-axis
/// closest to origin). Throws Diverged on degenerate input or non-finite
/// residuals.
JointFitResult fit_joint(const PointPairSet& pairs, JointKind kind, const JointSpec& init);

/// Closed-form initialization from pairs sharing a single (theta_u, theta_v):
/// rigid Kabsch fit, then axis/angle/pivot extraction (revolute) or mean
/// displacement (prismatic).
JointSpec closed_form_init(const PointPairSet& pairs, JointKind kind);

struct RansacConfig {
  int iters = 256;
  double inlier_tol = 0.02;
  double min_inlier_frac = 0.2;
  uint64_t seed = 0;
};

/// Minimal subsets are drawn within one (theta_u, theta_v) group so the
/// closed-form initializer applies; the winner (most inliers, ties broken by
/// lower inlier RMS then lower iteration index) is refined on all its
/// inliers. Pairs are sorted lexicographically first, making the result
/// invariant to input permutation for a fixed seed.
JointFitResult ransac_fit_joint(const PointPairSet& pairs, JointKind kind,
                                const RansacConfig& cfg = {});

/// Pluggable source of matches between two synthesized views.
class Matcher {
 public:
  virtual ~Matcher() = default;
  virtual std::vector<Correspondence> match(const Prediction& u, const Prediction& v) const = 0;
};

/// Ground-truth-driven matcher: traces part-surface points of view u through
/// the true joint motion and reprojects them into view v. Supports optional
/// pixel noise and gross outliers for robustness tests.
class OracleMatcher : public Matcher {
 public:
  OracleMatcher(const JointSpec& gt_joint, int max_pairs = 64, uint64_t seed = 0,
                double noise_px = 0.0, double outlier_frac = 0.0)
      : gt_(gt_joint), max_pairs_(max_pairs), seed_(seed), noise_px_(noise_px),
        outlier_frac_(outlier_frac) {}

  std::vector<Correspondence> match(const Prediction& u, const Prediction& v) const override;

 private:
  JointSpec gt_;
  int max_pairs_;
  uint64_t seed_;
  double noise_px_;
  double outlier_frac_;
};

/// Replays matches precomputed by an external matcher, keyed by
/// (theta_u, theta_v) rounded to 1e-6.
class FileMatcher : public Matcher {
 public:
  explicit FileMatcher(const fs::path& json_path);
  std::vector<Correspondence> match(const Prediction& u, const Prediction& v) const override;

 private:
  std::map<std::pair<int64_t, int64_t>, std::vector<Correspondence>> table_;
};

void write_correspondences_json(
    const std::vector<std::tuple<double, double, std::vector<Correspondence>>>& sets,
    const fs::path& path);

struct EstimateConfig {
  int n_states = 5;   // uniformly spaced theta values in [0, 1]
  int n_poses = 4;    // camera poses; all state pairs are matched per pose
  double conf_min = 0.8;
  double min_px_dist = 3.0;
  RansacConfig ransac;
  uint64_t seed = 0;
  int resolution = 64;
};

/// Full pipeline: synthesize views at n_states joint states from several
/// poses, match every same-pose state pair, filter and lift with the
/// synthesized depth / part masks, pool all pairs, run RANSAC.
JointFitResult estimate_joint(const ViewSynthesizer& synth, JointKind kind,
                              const Matcher& matcher, const EstimateConfig& cfg);

void write_joint_result_json(const JointFitResult& result, JointKind kind, const fs::path& path);
JointFitResult read_joint_result_json(const fs::path& path, JointKind* kind = nullptr);

}  // namespace larm
