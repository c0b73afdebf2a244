#pragma once

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <vector>

#include "larm/frame.hpp"
#include "larm/geometry.hpp"

namespace larm {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct ModelConfig {
  int patch_size = 8;
  int dim = 128;
  int layers = 4;
  int heads = 4;
  int image_h = 64;
  int image_w = 64;
  int views_per_state = 3;  // N; inputs always span exactly two states
  int channels = 3;         // 3 pretrain (rgb), 6 finetune (rgb+depth+fg+part)

  void validate() const {
    if (patch_size <= 0 || image_h % patch_size || image_w % patch_size)
      throw Error(ErrorCode::ConfigMismatch, "patch size must divide image dims");
    if (heads <= 0 || dim % heads)
      throw Error(ErrorCode::ConfigMismatch, "dim must be divisible by heads");
    if (channels != 3 && channels != 6)
      throw Error(ErrorCode::ConfigMismatch, "channels must be 3 or 6");
    if (layers < 0 || views_per_state <= 0)
      throw Error(ErrorCode::ConfigMismatch, "invalid layer/view count");
  }

  int patches_per_view() const { return (image_h / patch_size) * (image_w / patch_size); }
  int input_tokens() const { return 2 * views_per_state * patches_per_view(); }
  int target_tokens() const { return patches_per_view(); }
  int input_token_width() const { return 9 * patch_size * patch_size + 1; }
  int target_token_width() const { return 6 * patch_size * patch_size + 1; }
  int head_width() const { return patch_size * patch_size * channels; }

  bool operator==(const ModelConfig&) const = default;
};

/// Ordered collection of named parameter (or gradient/moment) matrices.
template <typename S>
struct NamedTensors {
  std::vector<std::string> names;
  std::vector<MatX<S>> tensors;
  std::unordered_map<std::string, int> lookup;

  MatX<S>& add(const std::string& name, int rows, int cols) {
    lookup.emplace(name, static_cast<int>(names.size()));
    names.push_back(name);
    tensors.emplace_back(MatX<S>::Zero(rows, cols));
    return tensors.back();
  }
  MatX<S>& operator[](const std::string& name) { return tensors[lookup.at(name)]; }
  const MatX<S>& at(const std::string& name) const { return tensors[lookup.at(name)]; }
  bool has(const std::string& name) const { return lookup.count(name) > 0; }
  size_t count() const { return tensors.size(); }

  size_t total_coeffs() const {
    size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }

  NamedTensors zeros_like() const {
    NamedTensors out;
    for (size_t i = 0; i < tensors.size(); ++i)
      out.add(names[i], static_cast<int>(tensors[i].rows()), static_cast<int>(tensors[i].cols()));
    return out;
  }

  void set_zero() {
    for (auto& t : tensors) t.setZero();
  }

  template <typename T>
  NamedTensors<T> cast() const {
    NamedTensors<T> out;
    for (size_t i = 0; i < tensors.size(); ++i) {
      out.add(names[i], static_cast<int>(tensors[i].rows()), static_cast<int>(tensors[i].cols()));
      out.tensors[i] = tensors[i].template cast<T>();
    }
    return out;
  }

  bool all_finite() const {
    for (const auto& t : tensors)
      if (!t.allFinite()) return false;
    return true;
  }
};

/// All learnable tensors. Linear layers are stored input-major: a layer with
/// weight W (in x out) maps token rows X (n x in) to X * W + b^T.
template <typename S>
struct ModelParamsT {
  ModelConfig cfg;
  NamedTensors<S> t;

  static ModelParamsT init(const ModelConfig& cfg, uint64_t seed);

  template <typename T>
  ModelParamsT<T> cast() const {
    ModelParamsT<T> out;
    out.cfg = cfg;
    out.t = t.template cast<T>();
    return out;
  }
};

using ModelParams = ModelParamsT<float>;

// ---------------------------------------------------------------------------
// Patch packing. Within-patch layout is [channel][py][px]; patches are
// row-major over the image.
// ---------------------------------------------------------------------------

template <typename S>
MatX<S> patchify(const Image<float>& img, int p) {
  const int gh = img.height / p, gw = img.width / p;
  MatX<S> rows(gh * gw, img.channels * p * p);
  for (int gy = 0; gy < gh; ++gy)
    for (int gx = 0; gx < gw; ++gx) {
      int r = gy * gw + gx;
      for (int c = 0; c < img.channels; ++c)
        for (int py = 0; py < p; ++py)
          for (int px = 0; px < p; ++px)
            rows(r, (c * p + py) * p + px) =
                static_cast<S>(img.at(gx * p + px, gy * p + py, c));
    }
  return rows;
}

template <typename S>
MatX<S> patchify_plucker(const PluckerMap& map, int p) {
  const int gh = map.height / p, gw = map.width / p;
  MatX<S> rows(gh * gw, 6 * p * p);
  for (int gy = 0; gy < gh; ++gy)
    for (int gx = 0; gx < gw; ++gx) {
      int r = gy * gw + gx;
      for (int c = 0; c < 6; ++c)
        for (int py = 0; py < p; ++py)
          for (int px = 0; px < p; ++px)
            rows(r, (c * p + py) * p + px) =
                static_cast<S>(map.pixel(gx * p + px, gy * p + py)[c]);
    }
  return rows;
}

/// Extracts channel `c` of decoded patch rows (n x p^2*channels) as an H x W
/// plane (Eigen matrix indexed (y, x)).
template <typename S>
MatX<S> plane_from_rows(const MatX<S>& rows, int channel, int H, int W, int p) {
  const int gw = W / p;
  MatX<S> plane(H, W);
  for (int r = 0; r < rows.rows(); ++r) {
    int gy = r / gw, gx = r % gw;
    for (int py = 0; py < p; ++py)
      for (int px = 0; px < p; ++px)
        plane(gy * p + py, gx * p + px) = rows(r, (channel * p + py) * p + px);
  }
  return plane;
}

/// Scatter-add of a plane gradient back into patch-row layout.
template <typename S>
void rows_add_plane(MatX<S>& d_rows, int channel, const MatX<S>& d_plane, int p) {
  const int W = static_cast<int>(d_plane.cols());
  const int gw = W / p;
  for (int r = 0; r < d_rows.rows(); ++r) {
    int gy = r / gw, gx = r % gw;
    for (int py = 0; py < p; ++py)
      for (int px = 0; px < p; ++px)
        d_rows(r, (channel * p + py) * p + px) += d_plane(gy * p + py, gx * p + px);
  }
}

template <typename S>
Image<float> image_from_plane(const MatX<S>& plane) {
  Image<float> img(static_cast<int>(plane.cols()), static_cast<int>(plane.rows()), 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) img.at(x, y) = static_cast<float>(plane(y, x));
  return img;
}

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

/// Raw (pre-projection) input-view token rows: concat(rgb patch, plucker
/// patch, theta), width 9p^2+1.
template <typename S>
MatX<S> input_token_raw(const Image<float>& rgb, const PluckerMap& plucker, double theta,
                        const ModelConfig& cfg) {
  if (rgb.width != cfg.image_w || rgb.height != cfg.image_h || rgb.channels != 3 ||
      plucker.width != cfg.image_w || plucker.height != cfg.image_h)
    throw Error(ErrorCode::ShapeMismatch, "input view does not match model config");
  const int p = cfg.patch_size;
  MatX<S> rgb_rows = patchify<S>(rgb, p);
  MatX<S> plk_rows = patchify_plucker<S>(plucker, p);
  MatX<S> raw(rgb_rows.rows(), cfg.input_token_width());
  raw << rgb_rows, plk_rows, MatX<S>::Constant(rgb_rows.rows(), 1, static_cast<S>(theta));
  return raw;
}

/// Raw target token rows: concat(plucker patch, theta), width 6p^2+1.
template <typename S>
MatX<S> target_token_raw(const PluckerMap& plucker, double theta, const ModelConfig& cfg) {
  if (plucker.width != cfg.image_w || plucker.height != cfg.image_h)
    throw Error(ErrorCode::ShapeMismatch, "target plucker map does not match model config");
  MatX<S> plk_rows = patchify_plucker<S>(plucker, cfg.patch_size);
  MatX<S> raw(plk_rows.rows(), cfg.target_token_width());
  raw << plk_rows, MatX<S>::Constant(plk_rows.rows(), 1, static_cast<S>(theta));
  return raw;
}

template <typename S>
MatX<S> tokenize_input_view(const Image<float>& rgb, const PluckerMap& plucker, double theta,
                            const ModelParamsT<S>& params) {
  MatX<S> raw = input_token_raw<S>(rgb, plucker, theta, params.cfg);
  return (raw * params.t.at("input_proj.w")).rowwise() +
         params.t.at("input_proj.b").col(0).transpose();
}

template <typename S>
MatX<S> tokenize_target_view(const PluckerMap& plucker, double theta,
                             const ModelParamsT<S>& params) {
  MatX<S> raw = target_token_raw<S>(plucker, theta, params.cfg);
  return (raw * params.t.at("target_proj.w")).rowwise() +
         params.t.at("target_proj.b").col(0).transpose();
}

// ---------------------------------------------------------------------------
// Transformer forward/backward
// ---------------------------------------------------------------------------

template <typename S>
struct LayerNormCache {
  MatX<S> xhat;   // normalized pre-affine
  VecX<S> rstd;   // per-row 1/sqrt(var+eps)
};

template <typename S>
struct LayerCache {
  MatX<S> x_in;
  LayerNormCache<S> ln1;
  MatX<S> h;  // ln1 output after affine
  MatX<S> q, k, v;
  std::vector<MatX<S>> attn;  // per-head softmax, l x l
  MatX<S> attn_concat;
  MatX<S> x_mid;
  LayerNormCache<S> ln2;
  MatX<S> m;        // ln2 output after affine
  MatX<S> mlp_pre;  // l x 4d
  MatX<S> mlp_act;
};

template <typename S>
struct ForwardCache {
  std::vector<LayerCache<S>> layers;
};

namespace detail {

constexpr double kLnEps = 1e-5;

template <typename S>
MatX<S> layer_norm(const MatX<S>& x, const MatX<S>& g, const MatX<S>& b,
                   LayerNormCache<S>* cache) {
  const int n = static_cast<int>(x.rows()), d = static_cast<int>(x.cols());
  MatX<S> xhat(n, d);
  VecX<S> rstd(n);
  for (int i = 0; i < n; ++i) {
    S mu = x.row(i).mean();
    S var = (x.row(i).array() - mu).square().mean();
    S r = S(1) / std::sqrt(var + static_cast<S>(kLnEps));
    xhat.row(i) = (x.row(i).array() - mu) * r;
    rstd(i) = r;
  }
  MatX<S> y = (xhat.array().rowwise() * g.col(0).transpose().array()).rowwise() +
              b.col(0).transpose().array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
    return y;
  }
  return y;
}

template <typename S>
MatX<S> layer_norm_backward(const MatX<S>& dy, const LayerNormCache<S>& cache, const MatX<S>& g,
                            MatX<S>& dg, MatX<S>& db) {
  const int n = static_cast<int>(dy.rows()), d = static_cast<int>(dy.cols());
  dg.col(0) += (dy.array() * cache.xhat.array()).colwise().sum().transpose().matrix();
  db.col(0) += dy.colwise().sum().transpose();
  MatX<S> dxhat = dy.array().rowwise() * g.col(0).transpose().array();
  MatX<S> dx(n, d);
  for (int i = 0; i < n; ++i) {
    S mean_dxhat = dxhat.row(i).mean();
    S mean_dxhat_xhat = (dxhat.row(i).array() * cache.xhat.row(i).array()).mean();
    dx.row(i) = cache.rstd(i) * (dxhat.row(i).array() - mean_dxhat -
                                 cache.xhat.row(i).array() * mean_dxhat_xhat);
  }
  return dx;
}

template <typename S>
S gelu(S x) {
  return S(0.5) * x * (S(1) + std::erf(x * S(M_SQRT1_2)));
}

template <typename S>
S gelu_grad(S x) {
  S phi = std::exp(S(-0.5) * x * x) * S(0.3989422804014327);
  S Phi = S(0.5) * (S(1) + std::erf(x * S(M_SQRT1_2)));
  return Phi + x * phi;
}

}  // namespace detail

/// Full bidirectional self-attention stack (pre-norm blocks). Layout of
/// `tokens`: input tokens first, target tokens last; all positions attend to
/// all positions. Throws NonFiniteActivation if the output diverges.
template <typename S>
MatX<S> transformer_forward(const MatX<S>& tokens, const ModelParamsT<S>& params,
                            ForwardCache<S>* cache) {
  const ModelConfig& cfg = params.cfg;
  const int d = cfg.dim, h = cfg.heads, dh = d / h;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  if (static_cast<int>(tokens.cols()) != d)
    throw Error(ErrorCode::ShapeMismatch, "token width does not match model dim");

  if (cache) cache->layers.resize(cfg.layers);
  MatX<S> x = tokens;
  for (int li = 0; li < cfg.layers; ++li) {
    const std::string pre = "layer" + std::to_string(li) + ".";
    LayerCache<S> local;
    LayerCache<S>& lc = cache ? cache->layers[li] : local;
    lc.x_in = x;

    lc.h = detail::layer_norm(x, params.t.at(pre + "ln1.g"), params.t.at(pre + "ln1.b"), &lc.ln1);
    lc.q = (lc.h * params.t.at(pre + "attn.wq")).rowwise() +
           params.t.at(pre + "attn.bq").col(0).transpose();
    lc.k = (lc.h * params.t.at(pre + "attn.wk")).rowwise() +
           params.t.at(pre + "attn.bk").col(0).transpose();
    lc.v = (lc.h * params.t.at(pre + "attn.wv")).rowwise() +
           params.t.at(pre + "attn.bv").col(0).transpose();

    lc.attn.resize(h);
    lc.attn_concat.resize(x.rows(), d);
    for (int k = 0; k < h; ++k) {
      MatX<S> scores = scale * (lc.q.middleCols(k * dh, dh) *
                                lc.k.middleCols(k * dh, dh).transpose());
      for (int i = 0; i < scores.rows(); ++i) {
        S mx = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - mx).exp();
        scores.row(i) /= scores.row(i).sum();
      }
      lc.attn[k] = std::move(scores);
      lc.attn_concat.middleCols(k * dh, dh) = lc.attn[k] * lc.v.middleCols(k * dh, dh);
    }
    x = lc.x_in + ((lc.attn_concat * params.t.at(pre + "attn.wo")).rowwise() +
                   params.t.at(pre + "attn.bo").col(0).transpose())
                      .matrix();
    lc.x_mid = x;

    lc.m = detail::layer_norm(x, params.t.at(pre + "ln2.g"), params.t.at(pre + "ln2.b"), &lc.ln2);
    lc.mlp_pre = (lc.m * params.t.at(pre + "mlp.w1")).rowwise() +
                 params.t.at(pre + "mlp.b1").col(0).transpose();
    lc.mlp_act = lc.mlp_pre.unaryExpr([](S u) { return detail::gelu(u); });
    x = lc.x_mid + ((lc.mlp_act * params.t.at(pre + "mlp.w2")).rowwise() +
                    params.t.at(pre + "mlp.b2").col(0).transpose())
                       .matrix();
  }
  if (!x.allFinite())
    throw Error(ErrorCode::NonFiniteActivation, "transformer output is not finite");
  return x;
}

/// Reverse-mode pass through the stack; accumulates parameter gradients into
/// `grads` and returns the gradient with respect to the input tokens.
template <typename S>
MatX<S> transformer_backward(const ForwardCache<S>& cache, const MatX<S>& d_out,
                             const ModelParamsT<S>& params, NamedTensors<S>& grads) {
  const ModelConfig& cfg = params.cfg;
  const int d = cfg.dim, h = cfg.heads, dh = d / h;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));

  MatX<S> dx = d_out;
  for (int li = cfg.layers - 1; li >= 0; --li) {
    const std::string pre = "layer" + std::to_string(li) + ".";
    const LayerCache<S>& lc = cache.layers[li];

    // MLP block: x = x_mid + gelu(ln2(x_mid) W1 + b1) W2 + b2
    MatX<S> dz = dx;  // gradient on the MLP branch output
    grads[pre + "mlp.w2"] += lc.mlp_act.transpose() * dz;
    grads[pre + "mlp.b2"].col(0) += dz.colwise().sum().transpose();
    MatX<S> dact = dz * params.t.at(pre + "mlp.w2").transpose();
    MatX<S> dpre =
        dact.array() * lc.mlp_pre.unaryExpr([](S u) { return detail::gelu_grad(u); }).array();
    grads[pre + "mlp.w1"] += lc.m.transpose() * dpre;
    grads[pre + "mlp.b1"].col(0) += dpre.colwise().sum().transpose();
    MatX<S> dm = dpre * params.t.at(pre + "mlp.w1").transpose();
    dx += detail::layer_norm_backward(dm, lc.ln2, params.t.at(pre + "ln2.g"),
                                      grads[pre + "ln2.g"], grads[pre + "ln2.b"]);

    // attention block: x_mid = x_in + attn(ln1(x_in)) Wo + bo
    MatX<S> dp = dx;
    grads[pre + "attn.wo"] += lc.attn_concat.transpose() * dp;
    grads[pre + "attn.bo"].col(0) += dp.colwise().sum().transpose();
    MatX<S> do_concat = dp * params.t.at(pre + "attn.wo").transpose();

    MatX<S> dq(dp.rows(), d), dk(dp.rows(), d), dv(dp.rows(), d);
    for (int k = 0; k < h; ++k) {
      auto dok = do_concat.middleCols(k * dh, dh);
      const MatX<S>& A = lc.attn[k];
      MatX<S> dA = dok * lc.v.middleCols(k * dh, dh).transpose();
      dv.middleCols(k * dh, dh) = A.transpose() * dok;
      // softmax backward, rowwise
      MatX<S> dS = A.array() * (dA.array().colwise() -
                                (dA.array() * A.array()).rowwise().sum());
      dq.middleCols(k * dh, dh) = scale * (dS * lc.k.middleCols(k * dh, dh));
      dk.middleCols(k * dh, dh) = scale * (dS.transpose() * lc.q.middleCols(k * dh, dh));
    }
    grads[pre + "attn.wq"] += lc.h.transpose() * dq;
    grads[pre + "attn.bq"].col(0) += dq.colwise().sum().transpose();
    grads[pre + "attn.wk"] += lc.h.transpose() * dk;
    grads[pre + "attn.bk"].col(0) += dk.colwise().sum().transpose();
    grads[pre + "attn.wv"] += lc.h.transpose() * dv;
    grads[pre + "attn.bv"].col(0) += dv.colwise().sum().transpose();
    MatX<S> dH = dq * params.t.at(pre + "attn.wq").transpose() +
                 dk * params.t.at(pre + "attn.wk").transpose() +
                 dv * params.t.at(pre + "attn.wv").transpose();
    dx += detail::layer_norm_backward(dH, lc.ln1, params.t.at(pre + "ln1.g"),
                                      grads[pre + "ln1.g"], grads[pre + "ln1.b"]);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Output decoding
// ---------------------------------------------------------------------------

template <typename S>
struct DecodeCache {
  LayerNormCache<S> ln;
  MatX<S> normed;
  MatX<S> out;  // sigmoid output
};

/// Shared output head: layer norm, linear d -> p^2*c, sigmoid. Works on any
/// block of token rows (target or input views).
template <typename S>
MatX<S> decode_tokens(const MatX<S>& rows, const ModelParamsT<S>& params,
                      DecodeCache<S>* cache) {
  if (static_cast<int>(rows.cols()) != params.cfg.dim)
    throw Error(ErrorCode::ShapeMismatch, "decode input width mismatch");
  DecodeCache<S> local;
  DecodeCache<S>& dc = cache ? *cache : local;
  dc.normed =
      detail::layer_norm(rows, params.t.at("head.ln.g"), params.t.at("head.ln.b"), &dc.ln);
  MatX<S> y = (dc.normed * params.t.at("head.w")).rowwise() +
              params.t.at("head.b").col(0).transpose();
  dc.out = y.unaryExpr([](S u) { return S(1) / (S(1) + std::exp(-u)); });
  return dc.out;
}

template <typename S>
MatX<S> decode_backward(const DecodeCache<S>& cache, const MatX<S>& d_sigmoid,
                        const ModelParamsT<S>& params, NamedTensors<S>& grads) {
  MatX<S> dy = d_sigmoid.array() * cache.out.array() * (S(1) - cache.out.array());
  grads["head.w"] += cache.normed.transpose() * dy;
  grads["head.b"].col(0) += dy.colwise().sum().transpose();
  MatX<S> dn = dy * params.t.at("head.w").transpose();
  return detail::layer_norm_backward(dn, cache.ln, params.t.at("head.ln.g"), grads["head.ln.g"],
                                     grads["head.ln.b"]);
}

/// Assembles decoded patch rows into an image tensor H x W x c in (0, 1).
template <typename S>
Image<float> decode_patches_to_image(const MatX<S>& decoded, const ModelConfig& cfg) {
  if (decoded.rows() != cfg.target_tokens() ||
      static_cast<int>(decoded.cols()) != cfg.head_width())
    throw Error(ErrorCode::ShapeMismatch, "decoded row shape mismatch");
  Image<float> img(cfg.image_w, cfg.image_h, cfg.channels);
  const int p = cfg.patch_size;
  for (int c = 0; c < cfg.channels; ++c) {
    MatX<S> plane = plane_from_rows(decoded, c, cfg.image_h, cfg.image_w, p);
    for (int y = 0; y < cfg.image_h; ++y)
      for (int x = 0; x < cfg.image_w; ++x) img.at(x, y, c) = static_cast<float>(plane(y, x));
  }
  return img;
}

// ---------------------------------------------------------------------------
// Parameter init, inference, head warm start
// ---------------------------------------------------------------------------

template <typename S>
ModelParamsT<S> ModelParamsT<S>::init(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  ModelParamsT<S> p;
  p.cfg = cfg;
  Rng rng(seed ^ 0x6c62272e07bb0142ull);
  auto randn = [&](MatX<S>& m, double std) {
    for (int c = 0; c < m.cols(); ++c)
      for (int r = 0; r < m.rows(); ++r) m(r, c) = static_cast<S>(rng.normal() * std);
  };
  const int d = cfg.dim;
  const double w_std = 0.02;
  // residual branch outputs scaled down for stable deep stacking
  const double resid_std = 0.02 / std::sqrt(std::max(1, 2 * cfg.layers));

  randn(p.t.add("input_proj.w", cfg.input_token_width(), d), w_std);
  p.t.add("input_proj.b", d, 1);
  randn(p.t.add("target_proj.w", cfg.target_token_width(), d), w_std);
  p.t.add("target_proj.b", d, 1);
  for (int li = 0; li < cfg.layers; ++li) {
    const std::string pre = "layer" + std::to_string(li) + ".";
    p.t.add(pre + "ln1.g", d, 1).setOnes();
    p.t.add(pre + "ln1.b", d, 1);
    randn(p.t.add(pre + "attn.wq", d, d), w_std);
    p.t.add(pre + "attn.bq", d, 1);
    randn(p.t.add(pre + "attn.wk", d, d), w_std);
    p.t.add(pre + "attn.bk", d, 1);
    randn(p.t.add(pre + "attn.wv", d, d), w_std);
    p.t.add(pre + "attn.bv", d, 1);
    randn(p.t.add(pre + "attn.wo", d, d), resid_std);
    p.t.add(pre + "attn.bo", d, 1);
    p.t.add(pre + "ln2.g", d, 1).setOnes();
    p.t.add(pre + "ln2.b", d, 1);
    randn(p.t.add(pre + "mlp.w1", d, 4 * d), w_std);
    p.t.add(pre + "mlp.b1", 4 * d, 1);
    randn(p.t.add(pre + "mlp.w2", 4 * d, d), resid_std);
    p.t.add(pre + "mlp.b2", d, 1);
  }
  p.t.add("head.ln.g", d, 1).setOnes();
  p.t.add("head.ln.b", d, 1);
  randn(p.t.add("head.w", d, cfg.head_width()), w_std);
  p.t.add("head.b", cfg.head_width(), 1);
  return p;
}

/// Orders input frames as (state, view, patch): all theta-low views first.
/// Throws StateCountMismatch unless the frames span exactly two states with N
/// views each.
std::vector<int> input_view_order(const std::vector<SampleFrame>& inputs, int views_per_state);

/// Full inference: tokenize 2N input frames and the target rays, run the
/// stack, decode the target tokens.
Prediction infer(const std::vector<SampleFrame>& inputs, const CameraIntrinsics& target_intr,
                 const CameraPose& target_pose, double theta_t, const ModelParams& params);

/// Warm start for finetuning: copies all tensors and initializes the extra
/// head channels (depth, fg, part) from the pretrained RGB channel-0 rows.
ModelParams init_finetune_heads(const ModelParams& pretrain, const ModelConfig& finetune_cfg);

}  // namespace larm
