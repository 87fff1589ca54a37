#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "oneshot/core/types.hpp"

namespace oneshot {

/// Linear interpolation of all effectors at time `t`, clamped to the trajectory span.
inline std::vector<Point3> sample_at(const Trajectory& traj, double t) {
  const auto& frames = traj.frames();
  if (t <= frames.front().time) return frames.front().points;
  if (t >= frames.back().time) return frames.back().points;
  auto it = std::upper_bound(frames.begin(), frames.end(), t,
                             [](double v, const Frame& f) { return v < f.time; });
  const Frame& hi = *it;
  const Frame& lo = *(it - 1);
  const double alpha = (t - lo.time) / (hi.time - lo.time);
  std::vector<Point3> out(traj.effector_count());
  for (std::size_t e = 0; e < out.size(); ++e) out[e] = lerp(lo.points[e], hi.points[e], alpha);
  return out;
}

/// Uniform time grid of `n` samples spanning [t_first, t_last]; endpoints exact.
inline std::vector<double> uniform_times(double t_first, double t_last, std::size_t n) {
  std::vector<double> times(n);
  const double span = t_last - t_first;
  for (std::size_t i = 0; i < n; ++i) {
    times[i] = t_first + span * (static_cast<double>(i) / static_cast<double>(n - 1));
  }
  times.front() = t_first;
  times.back() = t_last;
  return times;
}

/// Resamples to exactly `n` frames at uniform time spacing.
inline Trajectory resample(const Trajectory& traj, std::size_t n) {
  if (n < 2) throw std::invalid_argument("resample: n must be >= 2");
  const auto times = uniform_times(traj.start_time(), traj.end_time(), n);
  std::vector<Frame> frames(n);
  for (std::size_t i = 0; i < n; ++i) {
    frames[i].time = times[i];
    frames[i].points = sample_at(traj, times[i]);
  }
  frames.front().points = traj.frames().front().points;
  frames.back().points = traj.frames().back().points;
  return Trajectory(traj.effector_count(), std::move(frames));
}

struct BoundingBox {
  Point3 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity()};
  Point3 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity()};

  void extend(Point3 p) {
    for (std::size_t a = 0; a < 3; ++a) {
      min[a] = std::min(min[a], p[a]);
      max[a] = std::max(max[a], p[a]);
    }
  }
  Point3 extent() const { return max - min; }
  Point3 center() const { return (min + max) * 0.5; }
  double diagonal() const { return norm(extent()); }
};

inline BoundingBox bounding_box(const Trajectory& traj) {
  BoundingBox box;
  for (const Frame& f : traj.frames()) {
    for (const Point3& p : f.points) box.extend(p);
  }
  return box;
}

/// p -> (p - offset) * scale. `degenerate` marks inputs whose bounding box has
/// zero diagonal; their scale stays at 1.
struct NormalizationTransform {
  Point3 offset;
  double scale = 1.0;
  bool degenerate = false;

  Point3 apply(Point3 p) const { return (p - offset) * scale; }
  Point3 invert(Point3 p) const { return p * (1.0 / scale) + offset; }
};

inline Trajectory transform_points(const Trajectory& traj, auto&& fn) {
  std::vector<Frame> frames = traj.frames();
  for (Frame& f : frames) {
    for (Point3& p : f.points) p = fn(p);
  }
  return Trajectory(traj.effector_count(), std::move(frames));
}

inline Trajectory apply(const NormalizationTransform& tf, const Trajectory& traj) {
  return transform_points(traj, [&](Point3 p) { return tf.apply(p); });
}

inline Trajectory invert(const NormalizationTransform& tf, const Trajectory& traj) {
  return transform_points(traj, [&](Point3 p) { return tf.invert(p); });
}

struct Normalized {
  Trajectory trajectory;
  NormalizationTransform transform;
};

/// Centers the point cloud (all effectors, all frames) at the origin and
/// scales it so the bounding-box diagonal is 1.
inline Normalized normalize(const Trajectory& traj) {
  Point3 centroid;
  std::size_t count = 0;
  for (const Frame& f : traj.frames()) {
    for (const Point3& p : f.points) {
      centroid = centroid + p;
      ++count;
    }
  }
  centroid = centroid * (1.0 / static_cast<double>(count));

  NormalizationTransform tf;
  tf.offset = centroid;
  const double diag = bounding_box(traj).diagonal();
  if (diag > 1e-12) {
    tf.scale = 1.0 / diag;
  } else {
    tf.degenerate = true;
  }
  return {apply(tf, traj), tf};
}

/// The classifier/synthesis input convention: normalize, then resample to `n`.
inline Trajectory preprocess(const Trajectory& traj, std::size_t n) {
  return resample(normalize(traj).trajectory, n);
}

/// Shifts timestamps so the trajectory starts at zero.
inline Trajectory rebase_time(const Trajectory& traj) {
  std::vector<Frame> frames = traj.frames();
  const double t0 = traj.start_time();
  for (Frame& f : frames) f.time -= t0;
  return Trajectory(traj.effector_count(), std::move(frames));
}

}  // namespace oneshot
