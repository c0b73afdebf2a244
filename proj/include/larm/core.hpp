#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace larm {

enum class ErrorCode {
  ShapeMismatch,
  NonPositiveDepth,
  BehindCamera,
  StateCountMismatch,
  ConfigMismatch,
  CorruptHeader,
  SizeMismatch,
  DiskWrite,
  EmptySplit,
  EmptyForeground,
  MissingAuxiliaryGT,
  NonFiniteGradient,
  NonFiniteActivation,
  TooFewMatches,
  NoConsensus,
  Diverged,
  EmptyCloud,
  NoSurface,
  EmptySet,
  TooFewFrames,
  DegenerateMesh,
  KindMismatch,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(to_string(code)) + ": " + msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Dense H x W x C raster, row-major with interleaved channels.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c, T fill = T(0))
      : width(w), height(h), channels(c), data(static_cast<size_t>(w) * h * c, fill) {}

  T& at(int x, int y, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  const T& at(int x, int y, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  bool empty() const { return data.empty(); }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

/// Deterministic RNG with platform-independent distributions (the standard
/// library distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) { s_ = seed ? seed : 0x9e3779b97f4a7c15ull; }

  uint64_t next() {
    // splitmix64
    uint64_t z = (s_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return next() % n; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  /// Derive an independent stream for a subtask.
  Rng fork(uint64_t salt) { return Rng(next() ^ (salt * 0xd1342543de82ef95ull + 1)); }

 private:
  uint64_t s_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace larm
