#include "larm/joint_estimation.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>

namespace larm {

namespace {

using json = nlohmann::json;

/// Orthonormal basis of the plane perpendicular to unit vector a.
void tangent_basis(const Vec3& a, Vec3& e1, Vec3& e2) {
  Vec3 ref = std::abs(a.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  e1 = a.cross(ref).normalized();
  e2 = a.cross(e1);
}

bool inside_mask(const Image<uint8_t>& mask, const Vec2& px) {
  int x = static_cast<int>(std::floor(px.x()));
  int y = static_cast<int>(std::floor(px.y()));
  if (x < 0 || y < 0 || x >= mask.width || y >= mask.height) return false;
  return mask.at(x, y) != 0;
}

}  // namespace

int minimal_sample_size(JointKind kind) { return kind == JointKind::Revolute ? 3 : 2; }

std::vector<Correspondence> filter_correspondences(const std::vector<Correspondence>& cands,
                                                   const Image<uint8_t>& part_mask_u,
                                                   const Image<uint8_t>& part_mask_v,
                                                   double conf_min, double min_px_dist,
                                                   int min_required) {
  std::vector<Correspondence> pool;
  for (const auto& c : cands) {
    if (c.confidence < conf_min) continue;
    if (!inside_mask(part_mask_u, c.pixel_u) || !inside_mask(part_mask_v, c.pixel_v)) continue;
    pool.push_back(c);
  }
  std::stable_sort(pool.begin(), pool.end(),
                   [](const Correspondence& a, const Correspondence& b) {
                     return a.confidence > b.confidence;
                   });
  std::vector<Correspondence> kept;
  for (const auto& c : pool) {
    bool close = false;
    for (const auto& k : kept)
      if ((k.pixel_u - c.pixel_u).norm() < min_px_dist) {
        close = true;
        break;
      }
    if (!close) kept.push_back(c);
  }
  if (static_cast<int>(kept.size()) < min_required)
    throw Error(ErrorCode::TooFewMatches, "only " + std::to_string(kept.size()) +
                                              " matches survive filtering");
  return kept;
}

PointPairSet lift_pairs(const std::vector<Correspondence>& corrs, const Image<float>& depth_u,
                        const Image<float>& depth_v, const CameraIntrinsics& intr,
                        const CameraPose& pose, double theta_u, double theta_v) {
  auto sample = [](const Image<float>& depth, const Vec2& px) {
    int x = std::clamp(static_cast<int>(std::floor(px.x())), 0, depth.width - 1);
    int y = std::clamp(static_cast<int>(std::floor(px.y())), 0, depth.height - 1);
    return static_cast<double>(depth.at(x, y));
  };
  PointPairSet out;
  for (const auto& c : corrs) {
    double du = sample(depth_u, c.pixel_u);
    double dv = sample(depth_v, c.pixel_v);
    if (du <= 0 || dv <= 0)
      throw Error(ErrorCode::NonPositiveDepth, "correspondence hits empty depth");
    PointPair pr;
    pr.p_u = unproject_pixel(c.pixel_u.x(), c.pixel_u.y(), du, intr, pose);
    pr.p_v = unproject_pixel(c.pixel_v.x(), c.pixel_v.y(), dv, intr, pose);
    pr.theta_u = theta_u;
    pr.theta_v = theta_v;
    out.pairs.push_back(pr);
  }
  return out;
}

double joint_residual(const PointPairSet& pairs, const JointSpec& spec) {
  double total = 0.0;
  for (const auto& pr : pairs.pairs) {
    RigidTransform T = joint_transform(spec, pr.theta_u, pr.theta_v);
    total += (T.apply(pr.p_u) - pr.p_v).squaredNorm();
  }
  return total;
}

namespace {

struct FitParams {
  Vec3 a;
  Vec3 p;
  double s = 0.0;
};

double fit_energy(const PointPairSet& pairs, JointKind kind, const FitParams& fp) {
  JointSpec spec;
  spec.kind = kind;
  spec.axis = fp.a;
  spec.pivot = fp.p;
  spec.scale = fp.s;
  return joint_residual(pairs, spec);
}

/// Gradient of the summed squared residual; tangent components are with
/// respect to the basis (e1, e2) of the plane perpendicular to the axis.
void fit_gradient(const PointPairSet& pairs, JointKind kind, const FitParams& fp, const Vec3& e1,
                  const Vec3& e2, Eigen::VectorXd& g) {
  g.setZero();
  for (const auto& pr : pairs.pairs) {
    double dt = pr.theta_v - pr.theta_u;
    if (kind == JointKind::Revolute) {
      double phi = fp.s * dt;
      Mat3 R = Eigen::AngleAxisd(phi, fp.a).toRotationMatrix();
      Vec3 w = pr.p_u - fp.p;
      Vec3 q = R * w;
      Vec3 r = q + fp.p - pr.p_v;
      double sp = std::sin(phi), cp = std::cos(phi);
      auto d_axis = [&](const Vec3& e) {
        return sp * e.cross(w) + (1.0 - cp) * (e * fp.a.dot(w) + fp.a * e.dot(w));
      };
      g(0) += 2.0 * r.dot(d_axis(e1));
      g(1) += 2.0 * r.dot(d_axis(e2));
      g.segment<3>(2) += 2.0 * (r - R.transpose() * r);
      g(5) += 2.0 * dt * r.dot(fp.a.cross(q));
    } else {
      Vec3 r = pr.p_u + fp.a * (fp.s * dt) - pr.p_v;
      g(0) += 2.0 * fp.s * dt * e1.dot(r);
      g(1) += 2.0 * fp.s * dt * e2.dot(r);
      g(2) += 2.0 * dt * fp.a.dot(r);
    }
  }
}

FitParams apply_step(JointKind kind, const FitParams& fp, const Vec3& e1, const Vec3& e2,
                     const Eigen::VectorXd& g, double eta) {
  FitParams out = fp;
  out.a = (fp.a - eta * (g(0) * e1 + g(1) * e2)).normalized();
  if (kind == JointKind::Revolute) {
    out.p = fp.p - eta * g.segment<3>(2);
    out.s = fp.s - eta * g(5);
  } else {
    out.s = fp.s - eta * g(2);
  }
  return out;
}

}  // namespace

JointFitResult fit_joint(const PointPairSet& pairs, JointKind kind, const JointSpec& init) {
  pairs.validate();
  const int n = static_cast<int>(pairs.pairs.size());
  if (n < minimal_sample_size(kind))
    throw Error(ErrorCode::TooFewMatches, "need at least " +
                                              std::to_string(minimal_sample_size(kind)) +
                                              " pairs");
  bool any_motion = false;
  for (const auto& pr : pairs.pairs) any_motion |= std::abs(pr.theta_v - pr.theta_u) > 1e-12;
  if (!any_motion || init.axis.norm() < 1e-9)
    throw Error(ErrorCode::Diverged, "degenerate fit input");

  FitParams fp{init.axis.normalized(), init.pivot, init.scale};
  double energy = fit_energy(pairs, kind, fp);
  if (!std::isfinite(energy)) throw Error(ErrorCode::Diverged, "non-finite initial residual");

  const int dim = kind == JointKind::Revolute ? 6 : 3;
  Eigen::VectorXd g(dim);
  for (int iter = 0; iter < 500; ++iter) {
    Vec3 e1, e2;
    tangent_basis(fp.a, e1, e2);
    fit_gradient(pairs, kind, fp, e1, e2, g);
    if (!g.allFinite()) throw Error(ErrorCode::Diverged, "non-finite gradient");
    double gnorm2 = g.squaredNorm();
    if (gnorm2 < 1e-30) break;

    double eta = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      FitParams cand = apply_step(kind, fp, e1, e2, g, eta);
      double e_cand = fit_energy(pairs, kind, cand);
      if (std::isfinite(e_cand) && e_cand <= energy - 1e-4 * eta * gnorm2) {
        double rel = std::abs(energy - e_cand) / std::max(energy, 1e-30);
        fp = cand;
        energy = e_cand;
        accepted = true;
        if (rel < 1e-10) iter = 500;  // converged
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) break;  // no descent direction left
  }

  JointFitResult out;
  out.spec.kind = kind;
  out.spec.axis = fp.a;
  out.spec.pivot = kind == JointKind::Revolute ? fp.p : Vec3::Zero();
  out.spec.scale = fp.s;
  out.spec = out.spec.canonical();
  out.rms = std::sqrt(energy / n);
  out.inlier_fraction = 1.0;
  return out;
}

JointSpec closed_form_init(const PointPairSet& pairs, JointKind kind) {
  pairs.validate();
  const int n = static_cast<int>(pairs.pairs.size());
  if (n < minimal_sample_size(kind))
    throw Error(ErrorCode::TooFewMatches, "too few pairs for initialization");
  const double tu = pairs.pairs[0].theta_u, tv = pairs.pairs[0].theta_v;
  for (const auto& pr : pairs.pairs)
    if (std::abs(pr.theta_u - tu) > 1e-9 || std::abs(pr.theta_v - tv) > 1e-9)
      throw Error(ErrorCode::InvalidArgument, "initialization needs a single state pair");
  const double dt = tv - tu;

  if (kind == JointKind::Prismatic) {
    Vec3 d = Vec3::Zero();
    for (const auto& pr : pairs.pairs) d += pr.p_v - pr.p_u;
    d /= n;
    if (d.norm() < 1e-12) throw Error(ErrorCode::Diverged, "no displacement");
    JointSpec spec;
    spec.kind = JointKind::Prismatic;
    spec.axis = d.normalized();
    spec.scale = d.norm() / dt;
    return spec;
  }

  Vec3 cu = Vec3::Zero(), cv = Vec3::Zero();
  for (const auto& pr : pairs.pairs) {
    cu += pr.p_u;
    cv += pr.p_v;
  }
  cu /= n;
  cv /= n;
  Mat3 H = Mat3::Zero();
  for (const auto& pr : pairs.pairs) H += (pr.p_u - cu) * (pr.p_v - cv).transpose();
  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU(), V = svd.matrixV();
  Mat3 R = V * Vec3(1, 1, (V * U.transpose()).determinant()).asDiagonal() * U.transpose();
  Vec3 t = cv - R * cu;

  Eigen::AngleAxisd aa(R);
  if (std::abs(aa.angle()) < 1e-10) throw Error(ErrorCode::Diverged, "no rotation");
  Vec3 a = aa.axis();
  // pivot: least-squares solution of (I - R) p = t restricted to the plane
  // perpendicular to the axis (the axial component is unobservable)
  Vec3 e1, e2;
  tangent_basis(a, e1, e2);
  Mat3 IR = Mat3::Identity() - R;
  Eigen::Matrix2d M;
  Eigen::Vector2d b;
  M << e1.dot(IR * e1), e1.dot(IR * e2), e2.dot(IR * e1), e2.dot(IR * e2);
  b << e1.dot(t), e2.dot(t);
  Eigen::Vector2d x = M.colPivHouseholderQr().solve(b);
  Vec3 pivot = x(0) * e1 + x(1) * e2;

  return JointSpec::revolute(a, pivot, aa.angle() / dt);
}

JointFitResult ransac_fit_joint(const PointPairSet& pairs, JointKind kind,
                                const RansacConfig& cfg) {
  pairs.validate();
  const int m = minimal_sample_size(kind);
  const int n = static_cast<int>(pairs.pairs.size());
  if (n < m) throw Error(ErrorCode::TooFewMatches, "fewer pairs than the minimal sample");

  // permutation invariance: deterministic order before seeded sampling
  PointPairSet sorted = pairs;
  std::sort(sorted.pairs.begin(), sorted.pairs.end(),
            [](const PointPair& a, const PointPair& b) {
              auto key = [](const PointPair& p) {
                return std::array<double, 8>{p.p_u.x(), p.p_u.y(), p.p_u.z(), p.p_v.x(),
                                             p.p_v.y(), p.p_v.z(), p.theta_u, p.theta_v};
              };
              return key(a) < key(b);
            });

  std::map<std::pair<double, double>, std::vector<int>> groups;
  for (int i = 0; i < n; ++i)
    groups[{sorted.pairs[i].theta_u, sorted.pairs[i].theta_v}].push_back(i);
  std::vector<const std::vector<int>*> eligible;
  for (const auto& [key, idx] : groups)
    if (static_cast<int>(idx.size()) >= m) eligible.push_back(&idx);
  if (eligible.empty())
    throw Error(ErrorCode::NoConsensus, "no state pair has enough matches");

  auto inliers_of = [&](const JointSpec& spec, std::vector<int>& idx, double& rms) {
    idx.clear();
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const PointPair& pr = sorted.pairs[i];
      RigidTransform T = joint_transform(spec, pr.theta_u, pr.theta_v);
      double e2 = (T.apply(pr.p_u) - pr.p_v).squaredNorm();
      if (std::sqrt(e2) <= cfg.inlier_tol) {
        idx.push_back(i);
        sum += e2;
      }
    }
    rms = idx.empty() ? 0.0 : std::sqrt(sum / idx.size());
  };

  Rng rng(cfg.seed ^ 0x9a3c51f20e7b66cdull);
  std::vector<int> best_idx;
  double best_rms = 0.0;
  JointSpec best_spec;
  bool found = false;
  for (int iter = 0; iter < cfg.iters; ++iter) {
    const std::vector<int>& group = *eligible[rng.below(eligible.size())];
    std::vector<int> pick;
    while (static_cast<int>(pick.size()) < m) {
      int cand = group[rng.below(group.size())];
      if (std::find(pick.begin(), pick.end(), cand) == pick.end()) pick.push_back(cand);
    }
    PointPairSet subset;
    for (int i : pick) subset.pairs.push_back(sorted.pairs[i]);
    JointFitResult fit;
    try {
      fit = fit_joint(subset, kind, closed_form_init(subset, kind));
    } catch (const Error&) {
      continue;  // degenerate sample
    }
    std::vector<int> idx;
    double rms;
    inliers_of(fit.spec, idx, rms);
    bool better = !found || idx.size() > best_idx.size() ||
                  (idx.size() == best_idx.size() && rms < best_rms);
    if (better) {
      found = true;
      best_idx = idx;
      best_rms = rms;
      best_spec = fit.spec;
    }
  }
  if (!found || static_cast<double>(best_idx.size()) / n < cfg.min_inlier_frac)
    throw Error(ErrorCode::NoConsensus, "insufficient inlier support");

  PointPairSet inliers;
  for (int i : best_idx) inliers.pairs.push_back(sorted.pairs[i]);
  JointFitResult refined = fit_joint(inliers, kind, best_spec);
  std::vector<int> idx;
  double rms;
  inliers_of(refined.spec, idx, rms);
  refined.inlier_fraction = static_cast<double>(idx.size()) / n;
  refined.rms = rms;
  return refined;
}

std::vector<Correspondence> OracleMatcher::match(const Prediction& u,
                                                 const Prediction& v) const {
  Image<uint8_t> mask_u = u.part_mask();
  Image<uint8_t> mask_v = v.part_mask();
  std::vector<std::pair<int, int>> px_u, px_v;
  for (int y = 0; y < mask_u.height; ++y)
    for (int x = 0; x < mask_u.width; ++x) {
      if (mask_u.at(x, y)) px_u.emplace_back(x, y);
      if (mask_v.at(x, y)) px_v.emplace_back(x, y);
    }
  std::vector<Correspondence> out;
  if (px_u.empty() || px_v.empty()) return out;

  uint64_t mix = static_cast<uint64_t>(std::llround(u.theta * 1e6)) * 0x100000001b3ull ^
                 static_cast<uint64_t>(std::llround(v.theta * 1e6));
  Rng rng(seed_ ^ mix ^ 0x517cc1b727220a95ull);
  RigidTransform T = joint_transform(gt_, u.theta, v.theta);

  const int attempts = max_pairs_ * 8;
  for (int i = 0; i < attempts && static_cast<int>(out.size()) < max_pairs_; ++i) {
    auto [x, y] = px_u[rng.below(px_u.size())];
    double du = u.depth.at(x, y);
    if (du <= 0) continue;
    Vec3 P = unproject_pixel(x + 0.5, y + 0.5, du, u.intr, u.pose);
    Vec3 Pv = T.apply(P);
    PixelProjection proj;
    try {
      proj = project_point(Pv, v.intr, v.pose);
    } catch (const Error&) {
      continue;
    }
    if (!proj.in_bounds) continue;
    int vx = static_cast<int>(std::floor(proj.u));
    int vy = static_cast<int>(std::floor(proj.v));
    if (!mask_v.at(vx, vy)) continue;
    if (std::abs(v.depth.at(vx, vy) - proj.depth) > 0.01) continue;  // occluded

    Correspondence c;
    c.pixel_u = Vec2(x + 0.5, y + 0.5);
    c.pixel_v = Vec2(proj.u, proj.v);
    c.confidence = 1.0;
    if (outlier_frac_ > 0 && rng.uniform() < outlier_frac_) {
      auto [ox, oy] = px_v[rng.below(px_v.size())];
      c.pixel_v = Vec2(ox + 0.5, oy + 0.5);
    } else if (noise_px_ > 0) {
      c.pixel_v += Vec2(rng.normal(), rng.normal()) * noise_px_;
    }
    out.push_back(c);
  }
  return out;
}

namespace {
std::pair<int64_t, int64_t> state_key(double tu, double tv) {
  return {std::llround(tu * 1e6), std::llround(tv * 1e6)};
}
}  // namespace

FileMatcher::FileMatcher(const fs::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw Error(ErrorCode::CorruptHeader, "cannot open " + json_path.string());
  json j = json::parse(in);
  for (const auto& set : j.at("sets")) {
    std::vector<Correspondence> corrs;
    for (const auto& m : set.at("matches")) {
      Correspondence c;
      c.pixel_u = Vec2(m.at("u")[0].get<double>(), m.at("u")[1].get<double>());
      c.pixel_v = Vec2(m.at("v")[0].get<double>(), m.at("v")[1].get<double>());
      c.confidence = m.at("conf").get<double>();
      corrs.push_back(c);
    }
    table_[state_key(set.at("theta_u").get<double>(), set.at("theta_v").get<double>())] =
        std::move(corrs);
  }
}

std::vector<Correspondence> FileMatcher::match(const Prediction& u, const Prediction& v) const {
  auto it = table_.find(state_key(u.theta, v.theta));
  return it == table_.end() ? std::vector<Correspondence>{} : it->second;
}

void write_correspondences_json(
    const std::vector<std::tuple<double, double, std::vector<Correspondence>>>& sets,
    const fs::path& path) {
  json j;
  j["sets"] = json::array();
  for (const auto& [tu, tv, corrs] : sets) {
    json s;
    s["theta_u"] = tu;
    s["theta_v"] = tv;
    s["matches"] = json::array();
    for (const auto& c : corrs)
      s["matches"].push_back({{"u", {c.pixel_u.x(), c.pixel_u.y()}},
                              {"v", {c.pixel_v.x(), c.pixel_v.y()}},
                              {"conf", c.confidence}});
    j["sets"].push_back(std::move(s));
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::DiskWrite, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

JointFitResult estimate_joint(const ViewSynthesizer& synth, JointKind kind,
                              const Matcher& matcher, const EstimateConfig& cfg) {
  if (cfg.n_states < 2 || cfg.n_poses < 1)
    throw Error(ErrorCode::InvalidArgument, "need at least 2 states and 1 pose");
  CameraIntrinsics intr = default_intrinsics(cfg.resolution);
  Rng rng(cfg.seed ^ 0x2545f4914f6cdd1dull);
  const int min_m = minimal_sample_size(kind);

  PointPairSet pooled;
  for (int pi = 0; pi < cfg.n_poses; ++pi) {
    CameraPose pose = sample_camera(rng);
    std::vector<Prediction> preds;
    for (int j = 0; j < cfg.n_states; ++j)
      preds.push_back(synth.synthesize(intr, pose, j / static_cast<double>(cfg.n_states - 1)));
    for (int j = 0; j < cfg.n_states; ++j)
      for (int k = j + 1; k < cfg.n_states; ++k) {
        const Prediction& u = preds[j];
        const Prediction& v = preds[k];
        std::vector<Correspondence> corrs = matcher.match(u, v);
        std::vector<Correspondence> kept;
        try {
          kept = filter_correspondences(corrs, u.part_mask(), v.part_mask(), cfg.conf_min,
                                        cfg.min_px_dist, min_m);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::TooFewMatches) continue;
          throw;
        }
        PointPairSet lifted =
            lift_pairs(kept, u.depth, v.depth, intr, pose, u.theta, v.theta);
        pooled.pairs.insert(pooled.pairs.end(), lifted.pairs.begin(), lifted.pairs.end());
      }
  }
  if (static_cast<int>(pooled.pairs.size()) < min_m)
    throw Error(ErrorCode::TooFewMatches, "pooled matches insufficient for a fit");
  return ransac_fit_joint(pooled, kind, cfg.ransac);
}

void write_joint_result_json(const JointFitResult& result, JointKind kind, const fs::path& path) {
  json j;
  j["kind"] = to_string(kind);
  j["axis"] = {result.spec.axis.x(), result.spec.axis.y(), result.spec.axis.z()};
  j["pivot"] = {result.spec.pivot.x(), result.spec.pivot.y(), result.spec.pivot.z()};
  j["scale"] = result.spec.scale;
  j["inlier_fraction"] = result.inlier_fraction;
  j["rms"] = result.rms;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::DiskWrite, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

JointFitResult read_joint_result_json(const fs::path& path, JointKind* kind) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::CorruptHeader, "cannot open " + path.string());
  json j = json::parse(in);
  JointFitResult r;
  r.spec.kind = joint_kind_from_string(j.at("kind").get<std::string>());
  r.spec.axis = Vec3(j.at("axis")[0], j.at("axis")[1], j.at("axis")[2]);
  r.spec.pivot = Vec3(j.at("pivot")[0], j.at("pivot")[1], j.at("pivot")[2]);
  r.spec.scale = j.at("scale");
  r.inlier_fraction = j.at("inlier_fraction");
  r.rms = j.at("rms");
  if (kind) *kind = r.spec.kind;
  return r;
}

}  // namespace larm
