#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "oneshot/core/msrc12.hpp"
#include "oneshot/core/types.hpp"
#include "oneshot/synthesis/rng.hpp"

namespace oneshot {

/// Procedural stand-in for the eight upper-limb classes: two hands (left,
/// right) traced by parametric arcs, pushes, raises and circles over about
/// two seconds at 30 Hz. Units are meters in a body frame with x to the
/// subject's right, y up and z forward.
struct BundledOptions {
  double frame_rate = 30.0;
  double duration = 2.0;
  double duration_jitter = 0.1;   // relative, uniform
  double amplitude_jitter = 0.15;  // relative, normal sd
  double warp = 0.2;               // time-warp strength, |warp| < 1/pi keeps time monotone
  double rotation_deg = 12.0;      // sd of a body yaw around y
  double point_noise = 0.01;       // sd per coordinate, meters
};

namespace detail {

inline double bump(double s) { return 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * s)); }  // 0 -> 1 -> 0
inline double ease(double s) { return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s); }

inline const Point3 kRestLeft{-0.2, -0.35, 0.05};
inline const Point3 kRestRight{0.2, -0.35, 0.05};

/// Both hand positions at phase s in [0, 1] for class `c` (lexicon order).
inline std::pair<Point3, Point3> bundled_pose(std::size_t c, double s, double amp) {
  constexpr double pi = std::numbers::pi;
  const double b = bump(s) * amp;
  const Point3 L = kRestLeft, R = kRestRight;
  switch (c) {
    case 0:  // Shoot: both hands pushed forward together at chest height
      return {L + Point3{0.15, 0.3, 0.5} * b, R + Point3{-0.15, 0.3, 0.5} * b};
    case 1: {  // Throw: right hand overhead arc from behind to in front
      const double phi = pi * ease(s);
      const Point3 shoulder{0.25, 0.15, 0.0};
      return {L + Point3{0.0, 0.05, 0.05} * b,
              shoulder + Point3{0.0, 0.45 * std::sin(phi), -0.4 * std::cos(phi)} * amp};
    }
    case 2:  // ChangeWeapon: right hand reaches over the left shoulder
      return {L + Point3{0.05, 0.1, 0.1} * b, R + Point3{-0.4, 0.6, -0.15} * b};
    case 3:  // Goggles: both hands raised to the eyes
      return {L + Point3{0.12, 0.75, 0.12} * b, R + Point3{-0.12, 0.75, 0.12} * b};
    case 4: {  // Start: both arms raised sideways in wide arcs
      const double psi = 0.5 * pi * b;
      const double r = 0.55;
      return {Point3{-0.2, 0.2, 0.05} + Point3{-r * std::sin(psi), -r * std::cos(psi), 0.0},
              Point3{0.2, 0.2, 0.05} + Point3{r * std::sin(psi), -r * std::cos(psi), 0.0}};
    }
    case 5:  // Next: right hand swipes from left to right in front of the body
      return {L, Point3{-0.25 + 0.6 * ease(s) * amp, 0.0 + 0.1 * std::sin(pi * s), 0.35}};
    case 6: {  // WindUp: both hands roll one tall ellipse in the sagittal plane,
               // slowing at its top and bottom
      const double a = 2.0 * pi * s;
      const double ry = 0.24 * amp, rz = 0.13 * amp;
      return {Point3{-0.15, -0.05 + ry * std::sin(a), 0.3 - rz * std::cos(a)},
              Point3{0.15, -0.05 + ry * std::sin(a), 0.3 - rz * std::cos(a)}};
    }
    case 7:  // Tempo: right hand beats down twice while drifting outward
      return {L, Point3{0.15 + 0.15 * s, 0.1 - 0.3 * bump(2.0 * s) * amp, 0.3}};
  }
  throw std::out_of_range("bundled lexicon: class index");
}

}  // namespace detail

inline std::vector<std::string> bundled_lexicon() { return msrc12_upper_limb_lexicon(); }

/// Instance `k` of class `c`. Variation (amplitude, duration, time warp,
/// yaw, point noise) is keyed by (seed, c, k) only.
inline Trajectory bundled_instance(std::size_t c, std::size_t k, std::uint64_t seed, const BundledOptions& opt = {}) {
  if (c >= bundled_lexicon().size()) throw std::out_of_range("bundled lexicon: class index");
  Rng rng(derive_key({seed, 0x62756e646c65ULL, c, k}));
  const double amp = std::clamp(1.0 + opt.amplitude_jitter * rng.normal(), 0.7, 1.3);
  const double duration = opt.duration * (1.0 + opt.duration_jitter * rng.uniform(-1.0, 1.0));
  const double warp = std::clamp(opt.warp * rng.uniform(-1.0, 1.0), -0.3, 0.3);
  const double yaw = opt.rotation_deg * std::numbers::pi / 180.0 * rng.normal();
  const double cy = std::cos(yaw), sy = std::sin(yaw);

  const auto n = static_cast<std::size_t>(std::llround(duration * opt.frame_rate)) + 1;
  std::vector<Frame> frames(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n - 1);
    const double s = u + warp * std::sin(std::numbers::pi * u) / std::numbers::pi;
    auto [l, r] = detail::bundled_pose(c, s, amp);
    frames[i].time = duration * u;
    for (Point3 p : {l, r}) {
      Point3 q{cy * p.x + sy * p.z, p.y, -sy * p.x + cy * p.z};
      q = q + Point3{rng.normal(), rng.normal(), rng.normal()} * opt.point_noise;
      frames[i].points.push_back(q);
    }
  }
  return Trajectory(2, std::move(frames));
}

/// `count` instances per class with ids "bundled-<Label>-<k>", k from 0.
inline std::vector<LabeledInstance> bundled_instances(std::size_t count, std::uint64_t seed,
                                                      const BundledOptions& opt = {}) {
  const auto labels = make_labels(bundled_lexicon());
  std::vector<LabeledInstance> out;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    for (std::size_t k = 0; k < count; ++k) {
      out.push_back({"bundled-" + labels[c].name + "-" + std::to_string(k), bundled_instance(c, k, seed, opt),
                     labels[c]});
    }
  }
  return out;
}

}  // namespace oneshot
