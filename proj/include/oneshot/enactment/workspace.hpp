#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "oneshot/core/preprocess.hpp"
#include "oneshot/core/types.hpp"

namespace oneshot {

/// Reachable box in camera coordinates (meters, z along the optical axis)
/// and per-axis speed limits (m/s).
struct Workspace {
  Point3 min{-0.5, -0.5, 1.3};
  Point3 max{0.5, 0.5, 1.9};
  Point3 velocity_limit{1.0, 1.0, 1.0};

  void validate() const {
    for (std::size_t a = 0; a < 3; ++a) {
      if (!(max[a] > min[a])) throw std::invalid_argument("workspace: empty box");
      if (!(velocity_limit[a] > 0.0)) throw std::invalid_argument("workspace: velocity limits must be positive");
    }
  }
  Point3 center() const { return (min + max) * 0.5; }
  Point3 extent() const { return max - min; }
  double diagonal() const { return norm(extent()); }
};

/// p' = scale * (p - source_center) + target_center.
struct SimilarityTransform {
  double scale = 1.0;
  Point3 source_center;
  Point3 target_center;

  Point3 apply(Point3 p) const { return (p - source_center) * scale + target_center; }
  Point3 invert(Point3 p) const { return (p - target_center) * (1.0 / scale) + source_center; }
};

inline Trajectory apply(const SimilarityTransform& tf, const Trajectory& t) {
  return transform_points(t, [&](Point3 p) { return tf.apply(p); });
}

inline Trajectory invert(const SimilarityTransform& tf, const Trajectory& t) {
  return transform_points(t, [&](Point3 p) { return tf.invert(p); });
}

struct WorkspaceMapping {
  Trajectory trajectory;
  SimilarityTransform transform;
  bool degenerate = false;
};

/// Uniform scale and translation placing the bounding box of `t` at the
/// workspace center, filling 90% of the tightest axis. Axes with no extent
/// do not constrain the scale; a stationary input is only translated.
inline WorkspaceMapping map_to_workspace(const Trajectory& t, const Workspace& w, double fill = 0.9) {
  w.validate();
  const BoundingBox box = bounding_box(t);
  const Point3 ext = box.extent();
  const double tiny = 1e-12 * std::max(1.0, w.diagonal());
  double scale = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < 3; ++a) {
    if (ext[a] > tiny) scale = std::min(scale, fill * w.extent()[a] / ext[a]);
  }
  WorkspaceMapping m;
  m.degenerate = !std::isfinite(scale);
  m.transform = {m.degenerate ? 1.0 : scale, (box.min + box.max) * 0.5, w.center()};
  m.trajectory = apply(m.transform, t);
  return m;
}

struct FilteredTrajectory {
  Trajectory trajectory;            // robot-time stamps after speed limiting
  std::vector<double> source_time;  // original time stamp of every frame
  double dilation = 1.0;            // robot duration / source duration

  /// Source time corresponding to robot time `tau` (piecewise linear).
  double to_source(double tau) const {
    const auto& f = trajectory.frames();
    if (tau <= f.front().time) return source_time.front();
    if (tau >= f.back().time) return source_time.back();
    auto it = std::upper_bound(f.begin(), f.end(), tau, [](double v, const Frame& fr) { return v < fr.time; });
    const auto hi = static_cast<std::size_t>(it - f.begin());
    const double a = (tau - f[hi - 1].time) / (f[hi].time - f[hi - 1].time);
    return source_time[hi - 1] + a * (source_time[hi] - source_time[hi - 1]);
  }
};

/// Robot dynamics stand-in. The trajectory is resampled at `sample_rate_hz`,
/// low-passed per axis by two cascaded first-order sections run forward and
/// then backward (critically damped, zero phase), and every segment faster
/// than the workspace limits is slowed down by stretching its duration.
inline FilteredTrajectory actuator_filter(const Trajectory& t, const Workspace& w, double cutoff_hz,
                                          double sample_rate_hz = 120.0) {
  w.validate();
  if (!(cutoff_hz > 0.0)) throw std::invalid_argument("actuator_filter: cutoff must be positive");
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("actuator_filter: sample rate must be positive");
  const auto n = std::max<std::size_t>(
      t.length(), static_cast<std::size_t>(std::llround(t.duration() * sample_rate_hz)) + 1);
  const Trajectory u = resample(t, n);
  const double dt = t.duration() / static_cast<double>(n - 1);
  const double alpha = 1.0 - std::exp(-2.0 * std::numbers::pi * cutoff_hz * dt);

  std::vector<std::vector<Point3>> streams;
  for (std::size_t e = 0; e < u.effector_count(); ++e) {
    auto s = u.stream(e);
    auto pass = [&](auto begin, auto end) {
      Point3 y = *begin;
      for (auto it = begin; it != end; ++it) *it = y = y + (*it - y) * alpha;
    };
    for (int k = 0; k < 2; ++k) pass(s.begin(), s.end());
    for (int k = 0; k < 2; ++k) pass(s.rbegin(), s.rend());
    streams.push_back(std::move(s));
  }

  FilteredTrajectory out;
  out.source_time = u.times();
  std::vector<double> robot(n);
  robot[0] = out.source_time[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double step = out.source_time[i] - out.source_time[i - 1];
    double ratio = 1.0;
    for (const auto& s : streams) {
      const Point3 d = s[i] - s[i - 1];
      for (std::size_t a = 0; a < 3; ++a) ratio = std::max(ratio, std::abs(d[a]) / step / w.velocity_limit[a]);
    }
    robot[i] = robot[i - 1] + step * ratio;
  }
  out.trajectory = make_trajectory(robot, streams);
  out.dilation = t.duration() > 0.0 ? out.trajectory.duration() / t.duration() : 1.0;
  return out;
}

}  // namespace oneshot
