#pragma once

#include <cmath>
#include <cstdint>

#include "oneshot/enactment/vision.hpp"
#include "oneshot/enactment/workspace.hpp"

namespace oneshot {

struct EnactmentConfig {
  Workspace workspace;
  CameraModel camera;
  DetectionConfig detection;
  double cutoff_hz = 3.0;
  double filter_rate_hz = 120.0;
  double marker_radius_px = 4.0;
  std::uint64_t seed = 0;
};

struct Enactment {
  Trajectory trajectory;            // re-extracted, back in the input frame and time base
  Trajectory commanded;             // input mapped into the workspace
  Trajectory observed;              // re-extracted in workspace coordinates, source time base
  WorkspaceMapping mapping;
  double dilation = 1.0;
  std::size_t frames = 0;
  std::size_t gap_filled = 0;
};

/// Workspace mapping, actuator filter, camera rendering and marker detection.
/// The detected trajectory is brought back through the inverse time
/// dilation and the inverse workspace transform.
inline Enactment enact(const Trajectory& t, const EnactmentConfig& cfg, FrameSet* frames_out = nullptr) {
  Enactment out;
  out.mapping = map_to_workspace(t, cfg.workspace);
  out.commanded = out.mapping.trajectory;
  const auto filtered = actuator_filter(out.commanded, cfg.workspace, cfg.cutoff_hz, cfg.filter_rate_hz);
  out.dilation = filtered.dilation;
  FrameSet fs = render_frames(filtered.trajectory, cfg.camera, cfg.marker_radius_px, cfg.seed);
  const Detection det = detect_trajectory(fs, cfg.camera, cfg.detection);
  out.frames = fs.size();
  for (const auto& flags : det.gap_filled) {
    for (bool f : flags) out.gap_filled += f;
  }

  std::vector<Frame> frames = det.trajectory.frames();
  for (auto& f : frames) f.time = filtered.to_source(f.time);
  // Camera frames closer than the source can resolve collapse onto one time stamp.
  std::vector<Frame> kept;
  for (auto& f : frames) {
    if (kept.empty() || f.time > kept.back().time) kept.push_back(std::move(f));
  }
  out.observed = Trajectory(t.effector_count(), std::move(kept));
  out.trajectory = invert(out.mapping.transform, out.observed);
  if (frames_out) *frames_out = std::move(fs);
  return out;
}

/// Root-mean-square point distance between `a` and `b` sampled at the time
/// stamps of `a`, over all effectors.
inline double trajectory_rmse(const Trajectory& a, const Trajectory& b) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const Frame& f : a.frames()) {
    const auto q = sample_at(b, f.time);
    for (std::size_t e = 0; e < f.points.size(); ++e) {
      const Point3 d = f.points[e] - q[e];
      sum += dot(d, d);
      ++count;
    }
  }
  return std::sqrt(sum / static_cast<double>(count));
}

}  // namespace oneshot
