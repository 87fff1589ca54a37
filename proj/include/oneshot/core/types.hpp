#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace oneshot {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](std::size_t axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  double& operator[](std::size_t axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend Point3 operator+(Point3 a, Point3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Point3 operator-(Point3 a, Point3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Point3 operator*(Point3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend Point3 operator*(double s, Point3 a) { return a * s; }
  friend bool operator==(const Point3&, const Point3&) = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double dot(Point3 a, Point3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Point3 a) { return std::sqrt(dot(a, a)); }
inline double distance(Point3 a, Point3 b) { return norm(a - b); }
inline Point3 lerp(Point3 a, Point3 b, double t) { return a + (b - a) * t; }

struct Frame {
  double time = 0.0;
  std::vector<Point3> points;  // one per effector
};

/// A time-stamped sequence of 3D points, one stream per effector (hand).
///
/// Construction validates the invariants: 1 or 2 effectors, at least two
/// frames, strictly increasing timestamps, finite coordinates and a
/// consistent effector count on every frame. Instances are immutable.
class Trajectory {
 public:
  static constexpr std::size_t kMinFrames = 2;

  Trajectory() = default;

  Trajectory(std::size_t effector_count, std::vector<Frame> frames)
      : effector_count_(effector_count), frames_(std::move(frames)) {
    if (effector_count_ < 1 || effector_count_ > 2) {
      throw std::invalid_argument("trajectory: effector_count must be 1 or 2");
    }
    if (frames_.size() < kMinFrames) {
      throw std::invalid_argument("trajectory: needs at least 2 frames, got " +
                                  std::to_string(frames_.size()));
    }
    for (std::size_t i = 0; i < frames_.size(); ++i) {
      const Frame& f = frames_[i];
      if (f.points.size() != effector_count_) {
        throw std::invalid_argument("trajectory: frame " + std::to_string(i) + " has " +
                                    std::to_string(f.points.size()) + " points, expected " +
                                    std::to_string(effector_count_));
      }
      if (!std::isfinite(f.time)) {
        throw std::invalid_argument("trajectory: non-finite timestamp at frame " + std::to_string(i));
      }
      for (const Point3& p : f.points) {
        if (!p.finite()) {
          throw std::invalid_argument("trajectory: non-finite point at frame " + std::to_string(i));
        }
      }
      if (i > 0 && !(f.time > frames_[i - 1].time)) {
        throw std::invalid_argument("trajectory: timestamps not strictly increasing at frame " +
                                    std::to_string(i));
      }
    }
  }

  /// Builds a single-effector trajectory from points sampled at `dt` intervals.
  static Trajectory from_points(std::span<const Point3> points, double dt = 1.0, double t0 = 0.0) {
    std::vector<Frame> frames;
    frames.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      frames.push_back({t0 + dt * static_cast<double>(i), {points[i]}});
    }
    return Trajectory(1, std::move(frames));
  }

  std::size_t effector_count() const { return effector_count_; }
  std::size_t length() const { return frames_.size(); }
  const std::vector<Frame>& frames() const { return frames_; }
  const Frame& frame(std::size_t i) const { return frames_.at(i); }
  const Point3& point(std::size_t frame, std::size_t effector) const {
    return frames_[frame].points[effector];
  }
  double start_time() const { return frames_.front().time; }
  double end_time() const { return frames_.back().time; }
  double duration() const { return end_time() - start_time(); }

  /// Positions of one effector across all frames.
  std::vector<Point3> stream(std::size_t effector) const {
    std::vector<Point3> out;
    out.reserve(frames_.size());
    for (const Frame& f : frames_) out.push_back(f.points.at(effector));
    return out;
  }

  std::vector<double> times() const {
    std::vector<double> out;
    out.reserve(frames_.size());
    for (const Frame& f : frames_) out.push_back(f.time);
    return out;
  }

  friend bool operator==(const Trajectory& a, const Trajectory& b) {
    if (a.effector_count_ != b.effector_count_ || a.frames_.size() != b.frames_.size()) return false;
    for (std::size_t i = 0; i < a.frames_.size(); ++i) {
      if (a.frames_[i].time != b.frames_[i].time || a.frames_[i].points != b.frames_[i].points) {
        return false;
      }
    }
    return true;
  }

 private:
  std::size_t effector_count_ = 1;
  std::vector<Frame> frames_;
};

/// Builds a trajectory from per-effector streams sharing one time base.
inline Trajectory make_trajectory(std::span<const double> times,
                                  const std::vector<std::vector<Point3>>& streams) {
  std::vector<Frame> frames(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    frames[i].time = times[i];
    for (const auto& s : streams) frames[i].points.push_back(s.at(i));
  }
  return Trajectory(streams.size(), std::move(frames));
}

struct GestureLabel {
  std::string name;
  int index = 0;  // 1-based position in the lexicon

  friend bool operator==(const GestureLabel&, const GestureLabel&) = default;
};

struct Lexicon {
  std::vector<GestureLabel> labels;
  std::vector<Trajectory> seeds;  // seeds[i] is the single observation of labels[i]

  Lexicon() = default;
  Lexicon(std::vector<GestureLabel> l, std::vector<Trajectory> s)
      : labels(std::move(l)), seeds(std::move(s)) {
    if (labels.size() < 2) throw std::invalid_argument("lexicon: needs at least 2 classes");
    if (labels.size() != seeds.size()) {
      throw std::invalid_argument("lexicon: exactly one seed per label required");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = i + 1; j < labels.size(); ++j) {
        if (labels[i].name == labels[j].name) {
          throw std::invalid_argument("lexicon: duplicate label name '" + labels[i].name + "'");
        }
      }
    }
  }

  std::size_t size() const { return labels.size(); }

  const GestureLabel& find(const std::string& name) const {
    for (const auto& l : labels) {
      if (l.name == name) return l;
    }
    throw std::invalid_argument("lexicon: unknown label '" + name + "'");
  }
};

/// Labels 1..N in the given order.
inline std::vector<GestureLabel> make_labels(const std::vector<std::string>& names) {
  std::vector<GestureLabel> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    out.push_back({names[i], static_cast<int>(i + 1)});
  }
  return out;
}

struct LabeledInstance {
  std::string id;
  Trajectory trajectory;
  GestureLabel label;
};

}  // namespace oneshot
