#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "oneshot/core/preprocess.hpp"
#include "oneshot/core/types.hpp"

namespace oneshot {

/// Row-major sequence of fixed-dimension feature vectors.
struct FeatureSequence {
  std::size_t dim = 0;
  std::vector<double> values;

  std::size_t length() const { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const double> operator[](std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * dim, dim}; }

  void push_back(std::span<const double> v) {
    if (dim == 0) dim = v.size();
    if (v.size() != dim) throw std::invalid_argument("feature vector dimension mismatch");
    values.insert(values.end(), v.begin(), v.end());
  }

  bool finite() const {
    for (double v : values) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const FeatureSequence&, const FeatureSequence&) = default;
};

/// Per frame: all effector positions, then their first differences
/// (zero at frame 0).
inline FeatureSequence encode(const Trajectory& traj) {
  const std::size_t e = traj.effector_count();
  FeatureSequence out;
  out.dim = 6 * e;
  out.values.reserve(traj.length() * out.dim);
  for (std::size_t i = 0; i < traj.length(); ++i) {
    for (std::size_t k = 0; k < e; ++k) {
      const Point3 p = traj.point(i, k);
      out.values.insert(out.values.end(), {p.x, p.y, p.z});
    }
    for (std::size_t k = 0; k < e; ++k) {
      const Point3 d = i == 0 ? Point3{} : traj.point(i, k) - traj.point(i - 1, k);
      out.values.insert(out.values.end(), {d.x, d.y, d.z});
    }
  }
  return out;
}

/// Shared preprocessing in front of every classifier.
struct FeatureConfig {
  std::size_t length = 40;  // resample target; 0 keeps the input length
  bool normalize = true;
};

inline FeatureSequence featurize(const Trajectory& traj, const FeatureConfig& cfg) {
  Trajectory t = cfg.normalize ? normalize(traj).trajectory : traj;
  if (cfg.length >= 2) t = resample(t, cfg.length);
  return encode(t);
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct LabeledSequence {
  FeatureSequence sequence;
  std::size_t label = 0;  // 0-based class position
};

}  // namespace oneshot
