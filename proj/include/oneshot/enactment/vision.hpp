#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oneshot/core/preprocess.hpp"
#include "oneshot/core/types.hpp"
#include "oneshot/synthesis/rng.hpp"

namespace oneshot {

struct CameraModel {
  int width = 128;
  int height = 128;
  double focal = 120.0;  // pixels
  double cx = 64.0;
  double cy = 64.0;
  double depth_noise = 0.005;  // meters, std
  double frame_rate = 30.0;    // Hz

  void validate() const {
    if (width <= 0 || height <= 0) throw std::invalid_argument("camera: image size must be positive");
    if (!(focal > 0.0)) throw std::invalid_argument("camera: focal length must be positive");
    if (!(frame_rate > 0.0)) throw std::invalid_argument("camera: frame rate must be positive");
    if (!(depth_noise >= 0.0)) throw std::invalid_argument("camera: depth noise must be >= 0");
  }

  std::array<double, 2> project(Point3 p) const { return {cx + focal * p.x / p.z, cy + focal * p.y / p.z}; }
  Point3 back_project(double u, double v, double z) const {
    return {(u - cx) * z / focal, (v - cy) * z / focal, z};
  }
};

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kBackground{128, 128, 128};
inline constexpr std::array<Rgb, 2> kMarkerColors{Rgb{255, 0, 0}, Rgb{0, 255, 0}};  // left red, right green
inline constexpr double kFarDepth = 10.0;

struct FrameSet {
  int width = 0;
  int height = 0;
  std::size_t effectors = 0;
  std::vector<double> times;
  std::vector<std::vector<std::uint8_t>> rgb;  // row-major, 3 bytes per pixel
  std::vector<std::vector<double>> depth;      // meters

  std::size_t size() const { return times.size(); }
  Rgb pixel(std::size_t frame, int x, int y) const {
    const auto* p = &rgb[frame][3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x))];
    return {p[0], p[1], p[2]};
  }
  double depth_at(std::size_t frame, int x, int y) const {
    return depth[frame][static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
};

/// Samples `t` at the camera rate and draws one filled disc per effector:
/// pixels whose centers lie within `marker_radius_px` of the projection.
/// Nearer markers occlude farther ones. Depth under a marker is the
/// effector's z; noise is added to every depth pixel.
inline FrameSet render_frames(const Trajectory& t, const CameraModel& cam, double marker_radius_px = 4.0,
                              std::uint64_t seed = 0) {
  cam.validate();
  FrameSet fs;
  fs.width = cam.width;
  fs.height = cam.height;
  fs.effectors = t.effector_count();
  const auto n = static_cast<std::size_t>(std::llround(t.duration() * cam.frame_rate)) + 1;
  const auto npix = static_cast<std::size_t>(cam.width) * static_cast<std::size_t>(cam.height);
  const double r2 = marker_radius_px * marker_radius_px;

  for (std::size_t k = 0; k < n; ++k) {
    const double time = std::min(t.end_time(), t.start_time() + static_cast<double>(k) / cam.frame_rate);
    const auto points = sample_at(t, time);
    std::vector<std::uint8_t> rgb(3 * npix);
    for (std::size_t i = 0; i < npix; ++i) std::copy(kBackground.begin(), kBackground.end(), rgb.begin() + 3 * i);
    std::vector<double> depth(npix, kFarDepth);

    for (std::size_t e = 0; e < points.size(); ++e) {
      const Point3 p = points[e];
      if (!(p.z > 0.0)) {
        throw std::invalid_argument("render_frames: effector " + std::to_string(e) + " behind the camera at frame " +
                                    std::to_string(k));
      }
      const auto [u, v] = cam.project(p);
      const int x0 = std::max(0, static_cast<int>(std::floor(u - marker_radius_px)));
      const int x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(u + marker_radius_px)));
      const int y0 = std::max(0, static_cast<int>(std::floor(v - marker_radius_px)));
      const int y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(v + marker_radius_px)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double dx = x - u, dy = y - v;
          if (dx * dx + dy * dy > r2) continue;
          const auto i = static_cast<std::size_t>(y) * static_cast<std::size_t>(cam.width) + static_cast<std::size_t>(x);
          if (p.z >= depth[i]) continue;
          depth[i] = p.z;
          std::copy(kMarkerColors[e].begin(), kMarkerColors[e].end(), rgb.begin() + 3 * i);
        }
      }
    }
    if (cam.depth_noise > 0.0) {
      Rng rng(derive_key({seed, 0x64657074, k}));
      for (double& d : depth) d += cam.depth_noise * rng.normal();
    }
    fs.times.push_back(time);
    fs.rgb.push_back(std::move(rgb));
    fs.depth.push_back(std::move(depth));
  }
  return fs;
}

struct DetectionConfig {
  int on_threshold = 200;   // marker channel must reach this
  int off_threshold = 80;   // other channels must stay at or below this
  double max_missing = 0.5;  // fraction of frames a marker may be absent
};

struct Detection {
  Trajectory trajectory;
  std::vector<std::vector<bool>> gap_filled;  // [effector][frame]
  std::vector<std::vector<std::array<double, 2>>> centroids;  // pixel centroids, NaN where missing
};

/// Binary image restricted to a rectangular region of interest.
struct Mask {
  int x0 = 0, y0 = 0, w = 0, h = 0;
  std::vector<char> bits;

  bool at(int x, int y) const {
    if (x < x0 || y < y0 || x >= x0 + w || y >= y0 + h) return false;
    return bits[static_cast<std::size_t>((y - y0) * w + (x - x0))] != 0;
  }
};

namespace detail {

/// 3x3 erosion or dilation; pixels outside the ROI read as 0.
inline Mask morph(const Mask& m, bool erode) {
  Mask out = m;
  for (int y = m.y0; y < m.y0 + m.h; ++y) {
    for (int x = m.x0; x < m.x0 + m.w; ++x) {
      bool v = erode;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const bool b = m.at(x + dx, y + dy);
          v = erode ? (v && b) : (v || b);
        }
      }
      out.bits[static_cast<std::size_t>((y - m.y0) * m.w + (x - m.x0))] = v;
    }
  }
  return out;
}

}  // namespace detail

inline Mask open_close(const Mask& m) {
  using detail::morph;
  return morph(morph(morph(morph(m, true), false), false), true);
}

/// Threshold mask for marker `e` over the bounding box of its raw hits,
/// padded so that morphology never touches the ROI border.
inline Mask threshold_mask(const FrameSet& fs, std::size_t frame, std::size_t e, const DetectionConfig& cfg) {
  int xmin = fs.width, ymin = fs.height, xmax = -1, ymax = -1;
  auto hit = [&](int x, int y) {
    const Rgb p = fs.pixel(frame, x, y);
    for (std::size_t c = 0; c < 3; ++c) {
      const bool on = kMarkerColors[e][c] > 128;
      if (on ? p[c] < cfg.on_threshold : p[c] > cfg.off_threshold) return false;
    }
    return true;
  };
  for (int y = 0; y < fs.height; ++y) {
    for (int x = 0; x < fs.width; ++x) {
      if (hit(x, y)) xmin = std::min(xmin, x), xmax = std::max(xmax, x), ymin = std::min(ymin, y), ymax = std::max(ymax, y);
    }
  }
  Mask m;
  if (xmax < 0) return m;
  m.x0 = xmin - 2;
  m.y0 = ymin - 2;
  m.w = xmax - xmin + 5;
  m.h = ymax - ymin + 5;
  m.bits.assign(static_cast<std::size_t>(m.w * m.h), 0);
  for (int y = ymin; y <= ymax; ++y) {
    for (int x = xmin; x <= xmax; ++x) m.bits[static_cast<std::size_t>((y - m.y0) * m.w + (x - m.x0))] = hit(x, y);
  }
  return m;
}

/// Pixels of the largest 8-connected component (first in raster order on ties).
inline std::vector<std::array<int, 2>> largest_component(const Mask& m) {
  std::vector<int> label(m.bits.size(), 0);
  std::vector<std::array<int, 2>> best, current, stack;
  int next = 0;
  for (int y = m.y0; y < m.y0 + m.h; ++y) {
    for (int x = m.x0; x < m.x0 + m.w; ++x) {
      const auto i = static_cast<std::size_t>((y - m.y0) * m.w + (x - m.x0));
      if (!m.bits[i] || label[i]) continue;
      label[i] = ++next;
      current.clear();
      stack = {{x, y}};
      while (!stack.empty()) {
        const auto [px, py] = stack.back();
        stack.pop_back();
        current.push_back({px, py});
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int qx = px + dx, qy = py + dy;
            if (!m.at(qx, qy)) continue;
            const auto j = static_cast<std::size_t>((qy - m.y0) * m.w + (qx - m.x0));
            if (label[j]) continue;
            label[j] = next;
            stack.push_back({qx, qy});
          }
        }
      }
      if (current.size() > best.size()) best = current;
    }
  }
  return best;
}

/// Marker tracking: threshold, open-close, largest blob, intensity-weighted
/// centroid, depth at the rounded centroid, inverse pinhole. Frames without
/// a blob are filled by linear interpolation in time (held at the ends).
inline Detection detect_trajectory(const FrameSet& fs, const CameraModel& cam, const DetectionConfig& cfg = {}) {
  cam.validate();
  const std::size_t n = fs.size();
  if (n == 0) throw std::invalid_argument("detect_trajectory: no frames");
  if (fs.effectors < 1 || fs.effectors > 2) throw std::invalid_argument("detect_trajectory: bad effector count");
  Detection d;
  std::vector<std::vector<Point3>> streams(fs.effectors, std::vector<Point3>(n));
  d.gap_filled.assign(fs.effectors, std::vector<bool>(n, false));
  d.centroids.assign(fs.effectors, std::vector<std::array<double, 2>>(n, {NAN, NAN}));

  for (std::size_t e = 0; e < fs.effectors; ++e) {
    std::vector<std::size_t> found;
    for (std::size_t k = 0; k < n; ++k) {
      const Mask raw = threshold_mask(fs, k, e, cfg);
      if (raw.bits.empty()) continue;
      const auto blob = largest_component(open_close(raw));
      if (blob.empty()) continue;
      const std::size_t on = kMarkerColors[e][0] > 128 ? 0 : 1;
      double sw = 0.0, su = 0.0, sv = 0.0;
      for (const auto& [x, y] : blob) {
        const double wgt = fs.pixel(k, x, y)[on];
        sw += wgt, su += wgt * x, sv += wgt * y;
      }
      const double u = su / sw, v = sv / sw;
      const int iu = std::clamp(static_cast<int>(std::lround(u)), 0, fs.width - 1);
      const int iv = std::clamp(static_cast<int>(std::lround(v)), 0, fs.height - 1);
      d.centroids[e][k] = {u, v};
      streams[e][k] = cam.back_project(u, v, fs.depth_at(k, iu, iv));
      found.push_back(k);
    }
    const double missing = 1.0 - static_cast<double>(found.size()) / static_cast<double>(n);
    if (found.empty() || missing > cfg.max_missing) {
      throw std::runtime_error("detect_trajectory: marker " + std::to_string(e) + " missing in " +
                               std::to_string(n - found.size()) + " of " + std::to_string(n) + " frames");
    }
    for (std::size_t k = 0, f = 0; k < n; ++k) {
      if (f < found.size() && found[f] == k) {
        ++f;
        continue;
      }
      d.gap_filled[e][k] = true;
      if (f == 0) {
        streams[e][k] = streams[e][found.front()];
      } else if (f == found.size()) {
        streams[e][k] = streams[e][found.back()];
      } else {
        const std::size_t a = found[f - 1], b = found[f];
        const double s = (fs.times[k] - fs.times[a]) / (fs.times[b] - fs.times[a]);
        streams[e][k] = lerp(streams[e][a], streams[e][b], s);
      }
    }
  }
  d.trajectory = make_trajectory(fs.times, streams);
  return d;
}

/// Binary PPM (P6) of one RGB frame.
inline void write_ppm(const std::filesystem::path& path, const FrameSet& fs, std::size_t frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P6\n" << fs.width << ' ' << fs.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(fs.rgb[frame].data()), static_cast<std::streamsize>(fs.rgb[frame].size()));
}

/// Portable float map (grayscale "Pf", host byte order, bottom row first).
inline void write_pfm(const std::filesystem::path& path, const FrameSet& fs, std::size_t frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "Pf\n" << fs.width << ' ' << fs.height << (std::endian::native == std::endian::little ? "\n-1.0\n" : "\n1.0\n");
  for (int y = fs.height - 1; y >= 0; --y) {
    for (int x = 0; x < fs.width; ++x) {
      const float v = static_cast<float>(fs.depth_at(frame, x, y));
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
}

}  // namespace oneshot
